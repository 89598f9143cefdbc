#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtckit/baseline.hpp"
#include "vtckit/dataset.hpp"
#include "vtckit/dsp.hpp"
#include "vtckit/eval.hpp"
#include "vtckit/model.hpp"
#include "vtckit/vtc.hpp"

namespace vtckit::harness {

enum class FeatureSet {
  raw_mfcc,
  raw_dmfcc,
  evtc_mfcc,
  evtc_dmfcc,
  fvtc_mfcc,
  fvtc_dmfcc,
  external,
};

enum class EvalLevel { speaker, segment };

std::string to_string(FeatureSet fs);
FeatureSet feature_set_from_string(const std::string& text);
std::string to_string(EvalLevel level);
EvalLevel eval_level_from_string(const std::string& text);

bool is_fvtc(FeatureSet fs);

struct ExperimentConfig {
  FeatureSet feature_set = FeatureSet::fvtc_dmfcc;
  double segment_s = 10.0;
  std::optional<double> segment_hop_s;  // default: = segment_s (non-overlapping)
  double test_fraction = 0.20;
  int n_runs = 100;
  int n_controls_kept = 7;
  int top_k = 75;
  EvalLevel level = EvalLevel::speaker;
  std::uint64_t master_seed = 0;
  bool fixed_controls = false;  // draw the control subset once instead of per run
  int threads = 1;

  dsp::DspConfig dsp;
  vtc::VtcConfig vtc;
  model::ElasticNetParams net;
  std::filesystem::path external_csv;  // feature_set == external only

  double hop_s() const { return segment_hop_s.value_or(segment_s); }
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

struct RunPlan {
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// Seeds a per-run stream via rng::mix(master_seed, run_index), downsamples
/// controls to n_controls_kept uniformly at random, then splits the retained
/// speakers by speaker with floor(n * test_fraction) test speakers (minimum
/// one). Train and test never share a speaker.
RunPlan make_run_plan(const dataset::DatasetManifest& manifest,
                      const ExperimentConfig& cfg, int run_index);

struct ExtractedFeatures {
  baseline::FeatureTable table;
  std::vector<std::string> skipped_speakers;  // zero segments at this size
};

/// Full-recording frame pipeline (mfcc -> drop c0 -> optional delta -> CMVN),
/// segmentation, then per-segment features for cfg.feature_set. Pure per
/// speaker; extraction parallelizes across speakers, rows are assembled in
/// manifest order.
ExtractedFeatures extract_features(const dataset::DatasetManifest& manifest,
                                   const ExperimentConfig& cfg);

struct RunReport {
  int run_index = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> test_speakers;   // scored
  std::vector<std::string> skipped_speakers;  // planned for test, zero segments
  eval::MetricReport metrics;
  model::FittedPipeline pipeline;
  // Speaker-level mean prediction per scored test speaker, manifest order.
  std::vector<std::pair<std::string, double>> speaker_preds;
  std::vector<double> feature_scores;  // all-feature F-values (fvtc sets only)
  bool converged = true;
};

nlohmann::json run_report_to_json(const RunReport& report,
                                  bool include_feature_scores = false);

/// One seeded protocol run on precomputed features.
RunReport run_once(const dataset::DatasetManifest& manifest,
                   const ExperimentConfig& cfg, int run_index,
                   const ExtractedFeatures& features);

/// Convenience overload that extracts features first.
RunReport run_once(const dataset::DatasetManifest& manifest,
                   const ExperimentConfig& cfg, int run_index);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population std over runs
};

struct AggregateReport {
  MetricSummary rmse, r2, ccc;
  std::map<dataset::Severity, MetricSummary> ccc_by_severity;
  std::map<dataset::Severity, int> severity_run_counts;
  std::vector<std::string> skipped_speakers;
  int n_runs = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  AggregateReport aggregate;
  std::vector<RunReport> runs;  // ordered by run_index
};

/// n_runs independent runs (parallel up to cfg.threads, bit-identical for
/// any thread count), aggregated by run index.
ExperimentResult run_experiment(const dataset::DatasetManifest& manifest,
                                const ExperimentConfig& cfg);

nlohmann::json aggregate_to_json(const ExperimentResult& result);

struct SweepRow {
  double segment_s = 0.0;
  FeatureSet feature_set;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<double> skipped_sizes;  // zero segments corpus-wide
};

/// Segment-size sweep at segment-level evaluation; each size reruns the full
/// experiment with segment hop = segment length.
SweepResult segment_sweep(const dataset::DatasetManifest& manifest,
                          const ExperimentConfig& cfg,
                          const std::vector<double>& sizes,
                          const std::vector<FeatureSet>& feature_sets);

struct HeatmapResult {
  int n_channels = 0;
  std::vector<double> matrix;  // n x n row-major; mean F over runs, max over delays
  double selected_fraction_low_channels = 0.0;  // selected features with i,j <= 6
};

/// Channel-importance reduction over fvtc run reports: per-feature F-values
/// averaged over runs, then max over delays per (i, j).
HeatmapResult fvalue_heatmap(const std::vector<RunReport>& runs,
                             const vtc::VtcConfig& cfg);

struct CompareResult {
  std::vector<ExperimentResult> experiments;  // one per feature set
  std::map<std::string, eval::SignificanceReport> significance;  // per metric
};

/// Runs each feature set under the same master seed (hence identical run
/// plans) and applies ANOVA + Tukey HSD to the per-run samples of each
/// metric.
CompareResult compare_feature_sets(const dataset::DatasetManifest& manifest,
                                   const ExperimentConfig& cfg,
                                   const std::vector<FeatureSet>& feature_sets);

/// Per-speaker prediction summary across runs (truth, mean and std of the
/// speaker's predictions over the runs it was tested in).
struct SpeakerPrediction {
  std::string speaker_id;
  double truth = 0.0;
  double mean_pred = 0.0;
  double std_pred = 0.0;
  int n_runs_tested = 0;
};

std::vector<SpeakerPrediction> speaker_predictions(
    const dataset::DatasetManifest& manifest, const std::vector<RunReport>& runs);

}  // namespace vtckit::harness
