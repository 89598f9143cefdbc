#include "vtckit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "vtckit/errors.hpp"
#include "vtckit/rng.hpp"
#include "vtckit/vtcf.hpp"
#include "vtckit/wav.hpp"

namespace vtckit::harness {

namespace {

// Stream seed for the fixed-controls draw (independent of run index).
constexpr std::uint64_t kFixedControlStream = 0x434F4E54524F4Cull;

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_threads = std::min<std::size_t>(threads, n);
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

dsp::ChannelKind stream_of(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::raw_mfcc:
    case FeatureSet::evtc_mfcc:
    case FeatureSet::fvtc_mfcc:
      return dsp::ChannelKind::mfcc;
    default:
      return dsp::ChannelKind::dmfcc;
  }
}

/// Full-recording frames for one stream: mfcc -> drop c0 (inside mfcc) ->
/// optional delta -> speaker-level CMVN.
std::vector<dsp::FrameMatrix> compute_stream_frames(
    const dataset::DatasetManifest& manifest, const ExperimentConfig& cfg,
    dsp::ChannelKind kind) {
  std::vector<dsp::FrameMatrix> frames(manifest.records.size());
  parallel_for(manifest.records.size(), cfg.threads, [&](std::size_t i) {
    const auto& record = manifest.records[i];
    auto audio = dsp::read_wav(record.wav_path);
    audio.speaker_id = record.speaker_id;
    auto m = dsp::mfcc(audio, cfg.dsp);
    if (kind == dsp::ChannelKind::dmfcc) m = dsp::delta(m, cfg.dsp.delta_width);
    frames[i] = dsp::cmvn(m);
  });
  return frames;
}

ExtractedFeatures features_from_frames(
    const dataset::DatasetManifest& manifest, const ExperimentConfig& cfg,
    const std::vector<dsp::FrameMatrix>& frames) {
  const bool want_fvtc = cfg.feature_set == FeatureSet::fvtc_mfcc ||
                         cfg.feature_set == FeatureSet::fvtc_dmfcc;
  const bool want_evtc = cfg.feature_set == FeatureSet::evtc_mfcc ||
                         cfg.feature_set == FeatureSet::evtc_dmfcc;

  struct SpeakerBlock {
    std::vector<vtc::VtcTensor> tensors;
    std::vector<vtc::EvtcMatrix> matrices;
    std::vector<std::vector<double>> stat_rows;
    std::vector<int> segment_indices;
  };
  std::vector<SpeakerBlock> blocks(manifest.records.size());

  parallel_for(manifest.records.size(), cfg.threads, [&](std::size_t i) {
    auto segments = dsp::segment_frames(frames[i], cfg.segment_s, cfg.hop_s());
    auto& block = blocks[i];
    for (std::size_t s = 0; s < segments.size(); ++s) {
      block.segment_indices.push_back(static_cast<int>(s));
      if (want_fvtc || want_evtc) {
        auto tensor = vtc::fvtc(segments[s], cfg.vtc);
        tensor.segment_index = static_cast<int>(s);
        if (want_evtc) {
          block.matrices.push_back(vtc::evtc(tensor));
        } else {
          block.tensors.push_back(std::move(tensor));
        }
      } else {
        block.stat_rows.push_back(baseline::pool_stats(segments[s]));
      }
    }
  });

  ExtractedFeatures out;
  if (want_fvtc) {
    std::vector<vtc::VtcTensor> all;
    for (auto& block : blocks) {
      for (auto& tensor : block.tensors) all.push_back(std::move(tensor));
    }
    out.table = baseline::flatten_fvtc(all, manifest);
  } else if (want_evtc) {
    std::vector<vtc::EvtcMatrix> all;
    for (auto& block : blocks) {
      for (auto& matrix : block.matrices) all.push_back(std::move(matrix));
    }
    out.table = baseline::flatten_evtc(all, manifest);
  } else {
    out.table.kind = baseline::FeatureKind::raw_stats;
    const int channels = frames.empty() ? 0 : frames.front().channels;
    out.table.feature_names = baseline::pool_stat_names(channels);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      for (std::size_t s = 0; s < blocks[i].stat_rows.size(); ++s) {
        baseline::FeatureRow row;
        row.speaker_id = manifest.records[i].speaker_id;
        row.segment_index = blocks[i].segment_indices[s];
        row.target_tms = manifest.records[i].tms;
        out.table.rows.push_back(std::move(row));
        out.table.values.insert(out.table.values.end(),
                                blocks[i].stat_rows[s].begin(),
                                blocks[i].stat_rows[s].end());
      }
    }
    out.table.validate();
  }

  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].segment_indices.empty()) {
      out.skipped_speakers.push_back(manifest.records[i].speaker_id);
    }
  }
  return out;
}

double mean_of(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

MetricSummary summarize(std::span<const double> v) {
  MetricSummary s;
  if (v.empty()) return s;
  s.mean = mean_of(v);
  double var = 0.0;
  for (double x : v) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(v.size()));
  return s;
}

ExperimentResult run_experiment_on(const dataset::DatasetManifest& manifest,
                                   const ExperimentConfig& cfg,
                                   const ExtractedFeatures& features) {
  ExperimentResult result;
  result.config = cfg;
  result.runs.resize(cfg.n_runs);
  parallel_for(cfg.n_runs, cfg.threads, [&](std::size_t i) {
    result.runs[i] = run_once(manifest, cfg, static_cast<int>(i), features);
  });

  std::vector<double> rmses, r2s, cccs;
  for (const auto& run : result.runs) {
    rmses.push_back(run.metrics.rmse);
    r2s.push_back(run.metrics.r2);
    cccs.push_back(run.metrics.ccc);
  }
  auto& agg = result.aggregate;
  agg.n_runs = cfg.n_runs;
  agg.rmse = summarize(rmses);
  agg.r2 = summarize(r2s);
  agg.ccc = summarize(cccs);
  agg.skipped_speakers = features.skipped_speakers;

  std::map<dataset::Severity, std::vector<double>> by_severity;
  for (const auto& run : result.runs) {
    for (const auto& [severity, value] : run.metrics.ccc_by_severity) {
      by_severity[severity].push_back(value);
    }
  }
  for (const auto& [severity, values] : by_severity) {
    agg.ccc_by_severity[severity] = summarize(values);
    agg.severity_run_counts[severity] = static_cast<int>(values.size());
  }
  return result;
}

}  // namespace

std::string to_string(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::raw_mfcc: return "raw_mfcc";
    case FeatureSet::raw_dmfcc: return "raw_dmfcc";
    case FeatureSet::evtc_mfcc: return "evtc_mfcc";
    case FeatureSet::evtc_dmfcc: return "evtc_dmfcc";
    case FeatureSet::fvtc_mfcc: return "fvtc_mfcc";
    case FeatureSet::fvtc_dmfcc: return "fvtc_dmfcc";
    case FeatureSet::external: return "external";
  }
  return "fvtc_dmfcc";
}

FeatureSet feature_set_from_string(const std::string& text) {
  if (text == "raw_mfcc") return FeatureSet::raw_mfcc;
  if (text == "raw_dmfcc") return FeatureSet::raw_dmfcc;
  if (text == "evtc_mfcc") return FeatureSet::evtc_mfcc;
  if (text == "evtc_dmfcc") return FeatureSet::evtc_dmfcc;
  if (text == "fvtc_mfcc") return FeatureSet::fvtc_mfcc;
  if (text == "fvtc_dmfcc") return FeatureSet::fvtc_dmfcc;
  if (text == "external") return FeatureSet::external;
  throw ConfigError("unknown feature set '" + text + "'");
}

std::string to_string(EvalLevel level) {
  return level == EvalLevel::speaker ? "speaker" : "segment";
}

EvalLevel eval_level_from_string(const std::string& text) {
  if (text == "speaker") return EvalLevel::speaker;
  if (text == "segment") return EvalLevel::segment;
  throw ConfigError("unknown eval level '" + text + "'");
}

bool is_fvtc(FeatureSet fs) {
  return fs == FeatureSet::fvtc_mfcc || fs == FeatureSet::fvtc_dmfcc;
}

void ExperimentConfig::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must be in (0, 1)");
  }
  if (n_runs < 1) throw ConfigError("n_runs must be >= 1");
  if (segment_s <= 0.0 || hop_s() <= 0.0) {
    throw ConfigError("segment_s and segment_hop_s must be positive");
  }
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (n_controls_kept < 0) throw ConfigError("n_controls_kept must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (feature_set == FeatureSet::external && external_csv.empty()) {
    throw ConfigError("feature_set 'external' requires external_csv");
  }
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  return {
      {"feature_set", to_string(cfg.feature_set)},
      {"segment_s", cfg.segment_s},
      {"segment_hop_s", cfg.hop_s()},
      {"test_fraction", cfg.test_fraction},
      {"n_runs", cfg.n_runs},
      {"n_controls_kept", cfg.n_controls_kept},
      {"top_k", cfg.top_k},
      {"level", to_string(cfg.level)},
      {"master_seed", cfg.master_seed},
      {"fixed_controls", cfg.fixed_controls},
      {"threads", cfg.threads},
      {"external_csv", cfg.external_csv.string()},
      {"dsp",
       {{"window_ms", cfg.dsp.window_ms},
        {"hop_ms", cfg.dsp.hop_ms},
        {"n_mfcc", cfg.dsp.n_mfcc},
        {"n_mels", cfg.dsp.n_mels},
        {"delta_width", cfg.dsp.delta_width},
        {"log_floor", cfg.dsp.log_floor}}},
      {"vtc",
       {{"max_delay", cfg.vtc.max_delay},
        {"delay_stride", cfg.vtc.delay_stride},
        {"n_channels", cfg.vtc.n_channels},
        {"degenerate_to_zero", cfg.vtc.degenerate_to_zero}}},
      {"net",
       {{"alpha", cfg.net.alpha},
        {"l1_ratio", cfg.net.l1_ratio},
        {"tol", cfg.net.tol},
        {"max_iter", cfg.net.max_iter}}},
  };
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("feature_set")) {
    cfg.feature_set = feature_set_from_string(j.at("feature_set").get<std::string>());
  }
  cfg.segment_s = j.value("segment_s", cfg.segment_s);
  if (j.contains("segment_hop_s")) {
    cfg.segment_hop_s = j.at("segment_hop_s").get<double>();
  }
  cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
  cfg.n_runs = j.value("n_runs", cfg.n_runs);
  cfg.n_controls_kept = j.value("n_controls_kept", cfg.n_controls_kept);
  cfg.top_k = j.value("top_k", cfg.top_k);
  if (j.contains("level")) {
    cfg.level = eval_level_from_string(j.at("level").get<std::string>());
  }
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  cfg.fixed_controls = j.value("fixed_controls", cfg.fixed_controls);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.external_csv = j.value("external_csv", std::string{});
  if (j.contains("dsp")) {
    const auto& d = j.at("dsp");
    cfg.dsp.window_ms = d.value("window_ms", cfg.dsp.window_ms);
    cfg.dsp.hop_ms = d.value("hop_ms", cfg.dsp.hop_ms);
    cfg.dsp.n_mfcc = d.value("n_mfcc", cfg.dsp.n_mfcc);
    cfg.dsp.n_mels = d.value("n_mels", cfg.dsp.n_mels);
    cfg.dsp.delta_width = d.value("delta_width", cfg.dsp.delta_width);
    cfg.dsp.log_floor = d.value("log_floor", cfg.dsp.log_floor);
  }
  if (j.contains("vtc")) {
    const auto& v = j.at("vtc");
    cfg.vtc.max_delay = v.value("max_delay", cfg.vtc.max_delay);
    cfg.vtc.delay_stride = v.value("delay_stride", cfg.vtc.delay_stride);
    cfg.vtc.n_channels = v.value("n_channels", cfg.vtc.n_channels);
    cfg.vtc.degenerate_to_zero =
        v.value("degenerate_to_zero", cfg.vtc.degenerate_to_zero);
  }
  if (j.contains("net")) {
    const auto& e = j.at("net");
    cfg.net.alpha = e.value("alpha", cfg.net.alpha);
    cfg.net.l1_ratio = e.value("l1_ratio", cfg.net.l1_ratio);
    cfg.net.tol = e.value("tol", cfg.net.tol);
    cfg.net.max_iter = e.value("max_iter", cfg.net.max_iter);
  }
  return cfg;
}

RunPlan make_run_plan(const dataset::DatasetManifest& manifest,
                      const ExperimentConfig& cfg, int run_index) {
  cfg.validate();
  if (manifest.records.empty()) throw ConfigError("manifest is empty");

  RunPlan plan;
  plan.seed = rng::mix(cfg.master_seed, static_cast<std::uint64_t>(run_index));
  rng::Xoshiro256pp gen(plan.seed);

  std::vector<std::size_t> control_idx, other_idx;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    (manifest.records[i].cohort == dataset::Cohort::control ? control_idx
                                                            : other_idx)
        .push_back(i);
  }

  std::set<std::size_t> retained(other_idx.begin(), other_idx.end());
  if (static_cast<int>(control_idx.size()) <= cfg.n_controls_kept) {
    retained.insert(control_idx.begin(), control_idx.end());
  } else if (cfg.fixed_controls) {
    // Pinned subset: drawn from a stream independent of the run index.
    rng::Xoshiro256pp control_gen(rng::mix(cfg.master_seed, kFixedControlStream));
    for (auto p : control_gen.sample_without_replacement(
             control_idx.size(), static_cast<std::size_t>(cfg.n_controls_kept))) {
      retained.insert(control_idx[p]);
    }
  } else {
    // Fresh control subset per run, drawn before the train/test split.
    for (auto p : gen.sample_without_replacement(
             control_idx.size(), static_cast<std::size_t>(cfg.n_controls_kept))) {
      retained.insert(control_idx[p]);
    }
  }

  std::vector<std::size_t> retained_order(retained.begin(), retained.end());
  const std::size_t n = retained_order.size();
  if (n < 2) {
    throw ConfigError("need at least 2 retained speakers, have " +
                      std::to_string(n));
  }
  std::size_t n_test = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * cfg.test_fraction));
  n_test = std::max<std::size_t>(1, n_test);
  if (n_test >= n) {
    throw ConfigError("test split would leave no training speakers");
  }

  const auto picks = gen.sample_without_replacement(n, n_test);
  std::set<std::size_t> test_set;
  for (auto p : picks) test_set.insert(retained_order[p]);

  for (auto idx : retained_order) {
    const auto& id = manifest.records[idx].speaker_id;
    (test_set.count(idx) ? plan.test_ids : plan.train_ids).push_back(id);
  }
  return plan;
}

ExtractedFeatures extract_features(const dataset::DatasetManifest& manifest,
                                   const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.feature_set == FeatureSet::external) {
    ExtractedFeatures out;
    std::vector<std::string> warnings;
    out.table = baseline::import_external_features(cfg.external_csv, manifest,
                                                   &warnings);
    std::set<std::string> present;
    for (const auto& row : out.table.rows) present.insert(row.speaker_id);
    for (const auto& record : manifest.records) {
      if (!present.count(record.speaker_id)) {
        out.skipped_speakers.push_back(record.speaker_id);
      }
    }
    return out;
  }
  const auto frames = compute_stream_frames(manifest, cfg, stream_of(cfg.feature_set));
  return features_from_frames(manifest, cfg, frames);
}

RunReport run_once(const dataset::DatasetManifest& manifest,
                   const ExperimentConfig& cfg, int run_index,
                   const ExtractedFeatures& features) {
  const RunPlan plan = make_run_plan(manifest, cfg, run_index);
  const auto& table = features.table;

  std::set<std::string> train_set(plan.train_ids.begin(), plan.train_ids.end());
  std::set<std::string> test_set(plan.test_ids.begin(), plan.test_ids.end());

  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    if (train_set.count(table.rows[r].speaker_id)) train_rows.push_back(r);
    if (test_set.count(table.rows[r].speaker_id)) test_rows.push_back(r);
  }
  if (train_rows.empty()) {
    throw ConfigError("run " + std::to_string(run_index) + ": no training segments");
  }
  if (test_rows.empty()) {
    throw ConfigError("run " + std::to_string(run_index) + ": no test segments");
  }

  auto subtable = [&](const std::vector<std::size_t>& rows) {
    baseline::FeatureTable sub;
    sub.kind = table.kind;
    sub.feature_names = table.feature_names;
    sub.values.reserve(rows.size() * table.dim());
    for (auto r : rows) {
      sub.rows.push_back(table.rows[r]);
      const auto row = table.row(r);
      sub.values.insert(sub.values.end(), row.begin(), row.end());
    }
    return sub;
  };

  baseline::FeatureTable train = subtable(train_rows);
  baseline::FeatureTable test = subtable(test_rows);

  // Training statistics only; test rows are transformed, never fitted.
  const auto standardizer = model::fit_standardizer(train);
  train = model::apply_standardizer(standardizer, train);
  test = model::apply_standardizer(standardizer, test);

  const auto train_targets = train.targets();
  auto selector = model::select_top_k(train, train_targets, cfg.top_k);

  const std::size_t k = selector.selected.size();
  auto gather = [&](const baseline::FeatureTable& t) {
    std::vector<double> x(t.n_rows() * k);
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
      for (std::size_t j = 0; j < k; ++j) {
        x[r * k + j] = t.at(r, selector.selected[j]);
      }
    }
    return x;
  };
  const auto train_x = gather(train);
  const auto test_x = gather(test);

  const auto net =
      model::fit_elastic_net(train_x, train.n_rows(), k, train_targets, cfg.net);
  const auto test_preds = model::predict(net, test_x, test.n_rows(), k);

  RunReport report;
  report.run_index = run_index;
  report.seed = plan.seed;
  report.converged = net.converged;

  // Speaker-level averaging of segment predictions, manifest order.
  std::map<std::string, std::pair<double, int>> by_speaker;
  for (std::size_t r = 0; r < test_rows.size(); ++r) {
    auto& [sum, count] = by_speaker[test.rows[r].speaker_id];
    sum += test_preds[r];
    count += 1;
  }
  for (const auto& record : manifest.records) {
    const auto it = by_speaker.find(record.speaker_id);
    if (it != by_speaker.end()) {
      report.speaker_preds.emplace_back(record.speaker_id,
                                        it->second.first / it->second.second);
      report.test_speakers.push_back(record.speaker_id);
    } else if (test_set.count(record.speaker_id)) {
      report.skipped_speakers.push_back(record.speaker_id);
    }
  }

  std::vector<double> pred, truth;
  if (cfg.level == EvalLevel::speaker) {
    for (const auto& [speaker_id, p] : report.speaker_preds) {
      pred.push_back(p);
      truth.push_back(manifest.find(speaker_id)->tms);
    }
  } else {
    for (std::size_t r = 0; r < test_rows.size(); ++r) {
      pred.push_back(test_preds[r]);
      truth.push_back(test.rows[r].target_tms);
    }
  }

  report.metrics.rmse = eval::rmse(pred, truth);
  report.metrics.r2 = eval::r2(pred, truth);
  report.metrics.ccc = eval::ccc(pred, truth);
  report.metrics.n_speakers = static_cast<int>(report.test_speakers.size());

  std::vector<std::pair<std::string, double>> severity_input;
  if (cfg.level == EvalLevel::speaker) {
    severity_input = report.speaker_preds;
  } else {
    for (std::size_t r = 0; r < test_rows.size(); ++r) {
      severity_input.emplace_back(test.rows[r].speaker_id, test_preds[r]);
    }
  }
  report.metrics.ccc_by_severity =
      eval::ccc_by_severity(severity_input, manifest).value;

  // The published model state: selection plus the statistics and weights that
  // apply to the selected columns.
  report.pipeline.selected = selector.selected;
  report.pipeline.net = net;
  report.pipeline.standardizer.mean.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    const int col = selector.selected[j];
    report.pipeline.standardizer.mean.push_back(standardizer.mean[col]);
    report.pipeline.standardizer.stddev.push_back(standardizer.stddev[col]);
    report.pipeline.standardizer.constant.push_back(standardizer.constant[col]);
  }

  if (is_fvtc(cfg.feature_set)) {
    report.feature_scores = std::move(selector.scores);
  }
  return report;
}

RunReport run_once(const dataset::DatasetManifest& manifest,
                   const ExperimentConfig& cfg, int run_index) {
  return run_once(manifest, cfg, run_index, extract_features(manifest, cfg));
}

ExperimentResult run_experiment(const dataset::DatasetManifest& manifest,
                                const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment_on(manifest, cfg, extract_features(manifest, cfg));
}

SweepResult segment_sweep(const dataset::DatasetManifest& manifest,
                          const ExperimentConfig& cfg,
                          const std::vector<double>& sizes,
                          const std::vector<FeatureSet>& feature_sets) {
  SweepResult result;
  std::map<dsp::ChannelKind, std::vector<dsp::FrameMatrix>> frame_cache;
  for (FeatureSet fs : feature_sets) {
    if (fs == FeatureSet::external) {
      throw ConfigError("segment sweep does not support external features");
    }
    const auto kind = stream_of(fs);
    if (!frame_cache.count(kind)) {
      ExperimentConfig probe = cfg;
      probe.feature_set = fs;
      frame_cache[kind] = compute_stream_frames(manifest, probe, kind);
    }
  }

  for (double size : sizes) {
    ExperimentConfig size_cfg = cfg;
    size_cfg.segment_s = size;
    size_cfg.segment_hop_s = size;  // Fig. 2 segments tile without overlap
    size_cfg.level = EvalLevel::segment;

    for (FeatureSet fs : feature_sets) {
      ExperimentConfig fs_cfg = size_cfg;
      fs_cfg.feature_set = fs;
      const auto features =
          features_from_frames(manifest, fs_cfg, frame_cache[stream_of(fs)]);
      if (features.table.n_rows() == 0) {
        result.skipped_sizes.push_back(size);
        break;  // same segmentation for every set; skip the size entirely
      }
      const auto experiment = run_experiment_on(manifest, fs_cfg, features);
      const auto& agg = experiment.aggregate;
      result.rows.push_back({size, fs, "rmse", agg.rmse.mean, agg.rmse.stddev});
      result.rows.push_back({size, fs, "r2", agg.r2.mean, agg.r2.stddev});
      result.rows.push_back({size, fs, "ccc", agg.ccc.mean, agg.ccc.stddev});
    }
  }
  return result;
}

HeatmapResult fvalue_heatmap(const std::vector<RunReport>& runs,
                             const vtc::VtcConfig& cfg) {
  if (runs.empty()) throw InputError("fvalue_heatmap: no runs");
  const int n = cfg.n_channels;
  const std::size_t n_delays = cfg.delays().size();
  const std::size_t expected = static_cast<std::size_t>(n) * n * n_delays;
  for (const auto& run : runs) {
    if (run.feature_scores.size() != expected) {
      throw InputError(
          "fvalue_heatmap requires per-feature F-values from FVTC runs (run " +
          std::to_string(run.run_index) + " carries " +
          std::to_string(run.feature_scores.size()) + " scores, expected " +
          std::to_string(expected) + ")");
    }
  }

  std::vector<double> mean_scores(expected, 0.0);
  for (const auto& run : runs) {
    for (std::size_t f = 0; f < expected; ++f) {
      mean_scores[f] += run.feature_scores[f];
    }
  }
  for (auto& v : mean_scores) v /= static_cast<double>(runs.size());

  HeatmapResult result;
  result.n_channels = n;
  result.matrix.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double best = 0.0;
      const std::size_t base = (static_cast<std::size_t>(i) * n + j) * n_delays;
      for (std::size_t d = 0; d < n_delays; ++d) {
        best = std::max(best, mean_scores[base + d]);
      }
      result.matrix[static_cast<std::size_t>(i) * n + j] = best;
    }
  }

  // Share of selected features whose both endpoints sit in channels 0-6.
  std::size_t low = 0, total = 0;
  for (const auto& run : runs) {
    for (int flat : run.pipeline.selected) {
      const int i = flat / (n * static_cast<int>(n_delays));
      const int j = (flat / static_cast<int>(n_delays)) % n;
      total += 1;
      if (i <= 6 && j <= 6) low += 1;
    }
  }
  result.selected_fraction_low_channels =
      total == 0 ? 0.0 : static_cast<double>(low) / static_cast<double>(total);
  return result;
}

CompareResult compare_feature_sets(const dataset::DatasetManifest& manifest,
                                   const ExperimentConfig& cfg,
                                   const std::vector<FeatureSet>& feature_sets) {
  if (feature_sets.size() < 2) {
    throw ConfigError("compare needs at least two feature sets");
  }
  CompareResult result;
  std::map<dsp::ChannelKind, std::vector<dsp::FrameMatrix>> frame_cache;
  for (FeatureSet fs : feature_sets) {
    ExperimentConfig fs_cfg = cfg;
    fs_cfg.feature_set = fs;
    if (fs == FeatureSet::external) {
      result.experiments.push_back(run_experiment(manifest, fs_cfg));
      continue;
    }
    const auto kind = stream_of(fs);
    if (!frame_cache.count(kind)) {
      frame_cache[kind] = compute_stream_frames(manifest, fs_cfg, kind);
    }
    const auto features =
        features_from_frames(manifest, fs_cfg, frame_cache[kind]);
    result.experiments.push_back(run_experiment_on(manifest, fs_cfg, features));
  }

  if (cfg.n_runs >= 2) {
    std::vector<std::string> labels;
    for (FeatureSet fs : feature_sets) labels.push_back(to_string(fs));
    for (const std::string metric : {"rmse", "r2", "ccc"}) {
      std::vector<std::vector<double>> groups;
      for (const auto& experiment : result.experiments) {
        std::vector<double> samples;
        for (const auto& run : experiment.runs) {
          if (metric == "rmse") samples.push_back(run.metrics.rmse);
          else if (metric == "r2") samples.push_back(run.metrics.r2);
          else samples.push_back(run.metrics.ccc);
        }
        groups.push_back(std::move(samples));
      }
      result.significance[metric] = eval::tukey_hsd(groups, labels);
    }
  }
  return result;
}

std::vector<SpeakerPrediction> speaker_predictions(
    const dataset::DatasetManifest& manifest, const std::vector<RunReport>& runs) {
  std::map<std::string, std::vector<double>> preds;
  for (const auto& run : runs) {
    for (const auto& [speaker_id, value] : run.speaker_preds) {
      preds[speaker_id].push_back(value);
    }
  }
  std::vector<SpeakerPrediction> out;
  for (const auto& record : manifest.records) {
    const auto it = preds.find(record.speaker_id);
    if (it == preds.end()) continue;
    SpeakerPrediction sp;
    sp.speaker_id = record.speaker_id;
    sp.truth = record.tms;
    const auto summary = summarize(it->second);
    sp.mean_pred = summary.mean;
    sp.std_pred = summary.stddev;
    sp.n_runs_tested = static_cast<int>(it->second.size());
    out.push_back(std::move(sp));
  }
  return out;
}

nlohmann::json run_report_to_json(const RunReport& report,
                                  bool include_feature_scores) {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& [speaker_id, value] : report.speaker_preds) {
    preds.push_back({{"speaker_id", speaker_id}, {"pred", value}});
  }
  nlohmann::json j{{"schema_version", 1},
                   {"run_index", report.run_index},
                   {"seed", report.seed},
                   {"test_speakers", report.test_speakers},
                   {"skipped_speakers", report.skipped_speakers},
                   {"metrics", eval::to_json(report.metrics)},
                   {"speaker_predictions", preds},
                   {"pipeline", model::to_json(report.pipeline)},
                   {"converged", report.converged}};
  if (include_feature_scores) j["feature_scores"] = report.feature_scores;
  return j;
}

nlohmann::json aggregate_to_json(const ExperimentResult& result) {
  auto summary_json = [](const MetricSummary& s) {
    return nlohmann::json{{"mean", s.mean}, {"std", s.stddev}};
  };
  nlohmann::json by_severity = nlohmann::json::object();
  for (const auto& [severity, summary] : result.aggregate.ccc_by_severity) {
    auto j = summary_json(summary);
    j["n_runs_present"] = result.aggregate.severity_run_counts.at(severity);
    by_severity[dataset::to_string(severity)] = j;
  }
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : result.runs) runs.push_back(run_report_to_json(run));
  return {{"schema_version", 1},
          {"config", to_json(result.config)},
          {"n_runs", result.aggregate.n_runs},
          {"metrics",
           {{"rmse", summary_json(result.aggregate.rmse)},
            {"r2", summary_json(result.aggregate.r2)},
            {"ccc", summary_json(result.aggregate.ccc)}}},
          {"ccc_by_severity", by_severity},
          {"skipped_speakers", result.aggregate.skipped_speakers},
          {"runs", runs}};
}

}  // namespace vtckit::harness
