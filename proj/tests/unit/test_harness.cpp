#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "vtckit/dataset.hpp"
#include "vtckit/errors.hpp"
#include "vtckit/harness.hpp"
#include "vtckit/wav.hpp"

using namespace vtckit;
using harness::ExperimentConfig;
using harness::FeatureSet;

namespace {

dataset::DatasetManifest fake_manifest(int n_control, int n_hd) {
  dataset::DatasetManifest manifest;
  for (int i = 0; i < n_control + n_hd; ++i) {
    dataset::SpeakerRecord r;
    r.speaker_id = "m" + std::to_string(i);
    r.wav_path = "none/" + r.speaker_id + ".wav";
    if (i < n_control) {
      r.tms = 4.0;
      r.cohort = dataset::Cohort::control;
      r.severity = dataset::Severity::control;
    } else {
      r.tms = 20.0 + i;
      r.cohort = dataset::Cohort::hd;
      r.severity = dataset::Severity::early;
      r.tfc = 9;
      r.dcl = 4;
    }
    manifest.records.push_back(std::move(r));
  }
  return manifest;
}

// One small audio corpus shared by the end-to-end harness tests.
struct Corpus {
  testing::TempDir dir{"harness_corpus"};
  dataset::DatasetManifest manifest;
};

const Corpus& corpus() {
  static Corpus c = [] {
    Corpus built;
    dataset::SynthConfig cfg;
    cfg.n_control = 2;
    cfg.n_premanifest = 3;
    cfg.n_early = 3;
    cfg.n_late = 2;
    cfg.duration_s = 15.2;
    cfg.sample_rate = 16000;
    cfg.seed = 424242;
    built.manifest = dataset::generate_synthetic_corpus(cfg, built.dir.path());
    return built;
  }();
  return c;
}

ExperimentConfig fast_config() {
  ExperimentConfig cfg;
  cfg.feature_set = FeatureSet::raw_dmfcc;
  cfg.segment_s = 7.0;
  cfg.test_fraction = 0.3;
  cfg.n_runs = 4;
  cfg.master_seed = 99;
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("run plans: determinism, split size, disjointness") {
  const auto manifest = fake_manifest(0, 26);
  ExperimentConfig cfg;
  cfg.n_controls_kept = 7;

  const auto plan_a = harness::make_run_plan(manifest, cfg, 3);
  const auto plan_b = harness::make_run_plan(manifest, cfg, 3);
  CHECK(plan_a.seed == plan_b.seed);
  CHECK(plan_a.train_ids == plan_b.train_ids);
  CHECK(plan_a.test_ids == plan_b.test_ids);

  CHECK(plan_a.test_ids.size() == 5);  // floor(26 * 0.2)
  CHECK(plan_a.train_ids.size() == 21);

  std::set<std::string> train(plan_a.train_ids.begin(), plan_a.train_ids.end());
  for (const auto& id : plan_a.test_ids) CHECK(train.count(id) == 0);

  const auto plan_c = harness::make_run_plan(manifest, cfg, 4);
  CHECK(plan_c.test_ids != plan_a.test_ids);  // different run, different draw
}

TEST_CASE("run plans: control downsampling and fixed controls") {
  const auto manifest = fake_manifest(31, 7);
  ExperimentConfig cfg;
  cfg.n_controls_kept = 7;

  std::set<std::string> controls_run0, controls_run1;
  for (int run = 0; run < 2; ++run) {
    const auto plan = harness::make_run_plan(manifest, cfg, run);
    CHECK(plan.train_ids.size() + plan.test_ids.size() == 14);  // 7 + 7
    int controls = 0;
    for (const auto* ids : {&plan.train_ids, &plan.test_ids}) {
      for (const auto& id : *ids) {
        if (manifest.find(id)->cohort == dataset::Cohort::control) {
          ++controls;
          (run == 0 ? controls_run0 : controls_run1).insert(id);
        }
      }
    }
    CHECK(controls == 7);
  }
  CHECK(controls_run0 != controls_run1);  // re-drawn per run

  cfg.fixed_controls = true;
  std::set<std::string> fixed0, fixed1;
  for (int run = 0; run < 2; ++run) {
    const auto plan = harness::make_run_plan(manifest, cfg, run);
    for (const auto* ids : {&plan.train_ids, &plan.test_ids}) {
      for (const auto& id : *ids) {
        if (manifest.find(id)->cohort == dataset::Cohort::control) {
          (run == 0 ? fixed0 : fixed1).insert(id);
        }
      }
    }
  }
  CHECK(fixed0 == fixed1);
}

TEST_CASE("every speaker reaches a test set at roughly the test fraction") {
  const auto manifest = fake_manifest(7, 31);  // 38 speakers, controls all kept
  ExperimentConfig cfg;
  cfg.n_controls_kept = 7;
  cfg.master_seed = 7;

  std::map<std::string, int> test_hits;
  const int n_runs = 100;
  for (int run = 0; run < n_runs; ++run) {
    const auto plan = harness::make_run_plan(manifest, cfg, run);
    std::set<std::string> train(plan.train_ids.begin(), plan.train_ids.end());
    for (const auto& id : plan.test_ids) {
      CHECK(train.count(id) == 0);
      test_hits[id] += 1;
    }
  }
  const double expected = 7.0 / 38.0;  // floor(38 * 0.2) = 7 test speakers
  for (const auto& record : manifest.records) {
    const double freq = test_hits[record.speaker_id] / static_cast<double>(n_runs);
    CHECK(freq > 0.0);
    CHECK(std::abs(freq - expected) <= 0.1);
  }
}

TEST_CASE("too few speakers is a configuration error") {
  const auto manifest = fake_manifest(0, 1);
  ExperimentConfig cfg;
  CHECK_THROWS_AS(harness::make_run_plan(manifest, cfg, 0), ConfigError);
  CHECK_THROWS_AS(harness::make_run_plan(dataset::DatasetManifest{}, cfg, 0),
                  ConfigError);
}

TEST_CASE("experiment config json round trip") {
  ExperimentConfig cfg;
  cfg.feature_set = FeatureSet::evtc_mfcc;
  cfg.segment_s = 15.0;
  cfg.segment_hop_s = 5.0;
  cfg.test_fraction = 0.25;
  cfg.n_runs = 42;
  cfg.level = harness::EvalLevel::segment;
  cfg.master_seed = 0xDEADBEEFull;
  cfg.vtc.max_delay = 40;
  cfg.net.alpha = 0.7;
  const auto j = harness::to_json(cfg);
  const auto back = harness::config_from_json(j);
  CHECK(back.feature_set == cfg.feature_set);
  CHECK(back.segment_s == cfg.segment_s);
  CHECK(back.hop_s() == 5.0);
  CHECK(back.test_fraction == cfg.test_fraction);
  CHECK(back.n_runs == cfg.n_runs);
  CHECK(back.level == cfg.level);
  CHECK(back.master_seed == cfg.master_seed);
  CHECK(back.vtc.max_delay == 40);
  CHECK(back.net.alpha == 0.7);
}

TEST_CASE("run_once replay is byte-identical") {
  const auto& c = corpus();
  auto cfg = fast_config();
  const auto features = harness::extract_features(c.manifest, cfg);
  CHECK(features.skipped_speakers.empty());

  const auto a = harness::run_once(c.manifest, cfg, 2, features);
  const auto b = harness::run_once(c.manifest, cfg, 2, features);
  CHECK(harness::run_report_to_json(a, true).dump() ==
        harness::run_report_to_json(b, true).dump());
  CHECK(a.metrics.n_speakers == 3);  // floor(10 * 0.3)
}

TEST_CASE("speaker-level equals segment-level when every speaker has one segment") {
  const auto& c = corpus();
  auto cfg = fast_config();
  cfg.segment_s = 15.0;  // 1500 frames out of 1518: exactly one segment

  auto speaker_cfg = cfg;
  speaker_cfg.level = harness::EvalLevel::speaker;
  auto segment_cfg = cfg;
  segment_cfg.level = harness::EvalLevel::segment;

  const auto features = harness::extract_features(c.manifest, cfg);
  const auto by_speaker = harness::run_once(c.manifest, speaker_cfg, 1, features);
  const auto by_segment = harness::run_once(c.manifest, segment_cfg, 1, features);
  CHECK(by_speaker.metrics.rmse == doctest::Approx(by_segment.metrics.rmse));
  CHECK(by_speaker.metrics.r2 == doctest::Approx(by_segment.metrics.r2));
  CHECK(by_speaker.metrics.ccc == doctest::Approx(by_segment.metrics.ccc));
}

TEST_CASE("a test speaker with zero segments is skipped with a warning") {
  const auto& c = corpus();
  testing::TempDir dir("short");

  auto manifest = c.manifest;
  // Add one speaker whose recording is shorter than one 7 s segment.
  std::vector<double> short_audio(16000 * 2, 0.0);
  rng::Xoshiro256pp gen(5);
  for (auto& s : short_audio) s = 0.2 * gen.gaussian();
  const auto short_path = dir.path() / "short.wav";
  dsp::write_wav_mono16(short_path, short_audio, 16000);
  dataset::SpeakerRecord extra;
  extra.speaker_id = "shorty";
  extra.wav_path = short_path;
  extra.tms = 33.0;
  extra.cohort = dataset::Cohort::hd;
  extra.severity = dataset::Severity::early;
  extra.tfc = 8;
  extra.dcl = 4;
  manifest.records.push_back(extra);

  auto cfg = fast_config();
  const auto features = harness::extract_features(manifest, cfg);
  REQUIRE(features.skipped_speakers == std::vector<std::string>{"shorty"});

  // find a run whose plan sends the short speaker to test
  for (int run = 0; run < 50; ++run) {
    const auto plan = harness::make_run_plan(manifest, cfg, run);
    if (std::count(plan.test_ids.begin(), plan.test_ids.end(), "shorty") == 0) {
      continue;
    }
    const auto report = harness::run_once(manifest, cfg, run, features);
    CHECK(report.skipped_speakers == std::vector<std::string>{"shorty"});
    for (const auto& id : report.test_speakers) CHECK(id != "shorty");
    return;
  }
  FAIL("no plan placed the short speaker in a test set");
}

TEST_CASE("standardizer and selector are fit on training rows only") {
  // Hand-built features: test rows carry extreme values, so leaking them
  // into the statistics would shift means, stds and F-scores.
  dataset::DatasetManifest manifest;
  const int n_speakers = 8;
  for (int i = 0; i < n_speakers; ++i) {
    dataset::SpeakerRecord r;
    r.speaker_id = "s" + std::to_string(i);
    r.wav_path = "w" + std::to_string(i);
    r.tms = 10.0 * i + 3.0;
    r.cohort = dataset::Cohort::hd;
    r.severity = dataset::Severity::early;
    r.tfc = 9;
    r.dcl = 4;
    manifest.records.push_back(r);
  }

  harness::ExtractedFeatures features;
  features.table.kind = baseline::FeatureKind::fvtc;
  features.table.feature_names = {"f0", "f1", "f2"};
  rng::Xoshiro256pp gen(21);
  for (int i = 0; i < n_speakers; ++i) {
    features.table.rows.push_back(
        {"s" + std::to_string(i), 0, manifest.records[i].tms});
    features.table.values.push_back(manifest.records[i].tms + gen.gaussian());
    features.table.values.push_back(100.0 * gen.gaussian());
    features.table.values.push_back(gen.gaussian());
  }

  ExperimentConfig cfg;
  cfg.feature_set = FeatureSet::fvtc_dmfcc;  // keeps all-feature scores
  cfg.top_k = 2;
  cfg.test_fraction = 0.25;
  cfg.master_seed = 5;

  const int run_index = 1;
  const auto plan = harness::make_run_plan(manifest, cfg, run_index);
  const auto report = harness::run_once(manifest, cfg, run_index, features);

  // oracle statistics from training rows / all rows
  std::set<std::string> train(plan.train_ids.begin(), plan.train_ids.end());
  auto column_stats = [&](int column, bool train_only) {
    double mean = 0.0, count = 0.0;
    for (std::size_t r = 0; r < features.table.n_rows(); ++r) {
      if (train_only && !train.count(features.table.rows[r].speaker_id)) continue;
      mean += features.table.at(r, column);
      count += 1.0;
    }
    mean /= count;
    double var = 0.0;
    for (std::size_t r = 0; r < features.table.n_rows(); ++r) {
      if (train_only && !train.count(features.table.rows[r].speaker_id)) continue;
      const double d = features.table.at(r, column) - mean;
      var += d * d;
    }
    return std::pair{mean, std::sqrt(var / count)};
  };

  REQUIRE(report.pipeline.selected.size() == 2);
  for (std::size_t j = 0; j < 2; ++j) {
    const int column = report.pipeline.selected[j];
    const auto [train_mean, train_std] = column_stats(column, true);
    const auto [leaky_mean, leaky_std] = column_stats(column, false);
    CHECK(report.pipeline.standardizer.mean[j] ==
          doctest::Approx(train_mean).epsilon(1e-12));
    CHECK(report.pipeline.standardizer.stddev[j] ==
          doctest::Approx(train_std).epsilon(1e-12));
    // the leaky reference must actually differ, otherwise this test is vacuous
    CHECK(std::abs(train_mean - leaky_mean) +
              std::abs(train_std - leaky_std) > 1e-6);
  }

  // F-scores: train-only oracle per feature
  std::vector<double> train_x, train_y;
  for (std::size_t r = 0; r < features.table.n_rows(); ++r) {
    if (!train.count(features.table.rows[r].speaker_id)) continue;
    train_y.push_back(features.table.rows[r].target_tms);
  }
  REQUIRE(report.feature_scores.size() == 3);
  for (int f = 0; f < 3; ++f) {
    train_x.clear();
    for (std::size_t r = 0; r < features.table.n_rows(); ++r) {
      if (!train.count(features.table.rows[r].speaker_id)) continue;
      train_x.push_back(features.table.at(r, f));
    }
    CHECK(report.feature_scores[f] ==
          doctest::Approx(model::f_value(train_x, train_y)).epsilon(1e-10));
  }
}

TEST_CASE("external feature set flows through the whole protocol") {
  testing::TempDir dir("external");
  auto manifest = fake_manifest(0, 12);

  // external CSV: f_0 tracks the target, f_1/f_2 are noise; one speaker
  // (m11) is absent and must surface as skipped
  std::string csv = "speaker_id,segment_index,f_0,f_1,f_2\n";
  rng::Xoshiro256pp gen(3);
  for (int i = 0; i < 11; ++i) {
    const auto& record = manifest.records[i];
    for (int seg = 0; seg < 2; ++seg) {
      csv += record.speaker_id + "," + std::to_string(seg) + "," +
             std::to_string(record.tms + 0.1 * gen.gaussian()) + "," +
             std::to_string(gen.gaussian()) + "," +
             std::to_string(gen.gaussian()) + "\n";
    }
  }
  const auto csv_path = dir.path() / "features.csv";
  std::ofstream(csv_path) << csv;

  ExperimentConfig cfg;
  cfg.feature_set = FeatureSet::external;
  cfg.external_csv = csv_path;
  cfg.top_k = 3;
  cfg.test_fraction = 0.25;
  cfg.n_runs = 5;
  cfg.master_seed = 17;

  const auto result = harness::run_experiment(manifest, cfg);
  CHECK(result.aggregate.skipped_speakers ==
        std::vector<std::string>{"m11"});
  // f_0 carries the target: far from the null (ccc ~ 0, rmse ~ target std),
  // though 2-3 test speakers per run keep speaker-level CCC noisy.
  CHECK(result.aggregate.ccc.mean > 0.5);
  CHECK(result.aggregate.rmse.mean < 3.0);

  auto bad = cfg;
  bad.external_csv.clear();
  CHECK_THROWS_AS(harness::run_experiment(manifest, bad), ConfigError);
}

TEST_CASE("aggregate of a single run equals that run, std zero") {
  const auto& c = corpus();
  auto cfg = fast_config();
  cfg.n_runs = 1;
  const auto result = harness::run_experiment(c.manifest, cfg);
  REQUIRE(result.runs.size() == 1);
  CHECK(result.aggregate.rmse.mean == doctest::Approx(result.runs[0].metrics.rmse));
  CHECK(result.aggregate.rmse.stddev == doctest::Approx(0.0));
  CHECK(result.aggregate.ccc.mean == doctest::Approx(result.runs[0].metrics.ccc));
}

TEST_CASE("experiment output is identical across thread counts") {
  const auto& c = corpus();
  auto cfg = fast_config();
  cfg.feature_set = FeatureSet::evtc_dmfcc;
  cfg.vtc.max_delay = 20;
  cfg.n_runs = 6;

  auto single = cfg;
  single.threads = 1;
  auto pooled = cfg;
  pooled.threads = 4;

  const auto a = harness::run_experiment(c.manifest, single);
  const auto b = harness::run_experiment(c.manifest, pooled);
  // thread count is part of the config echo; compare runs and aggregates
  auto strip = [](harness::ExperimentResult r) {
    auto j = harness::aggregate_to_json(r);
    j["config"].erase("threads");
    return j.dump();
  };
  CHECK(strip(a) == strip(b));
}

TEST_CASE("sweep: single size matches the segment-level experiment") {
  const auto& c = corpus();
  auto cfg = fast_config();
  cfg.n_runs = 3;

  const auto sweep = harness::segment_sweep(c.manifest, cfg, {7.0},
                                            {FeatureSet::raw_dmfcc});
  REQUIRE(sweep.rows.size() == 3);  // rmse, r2, ccc
  CHECK(sweep.skipped_sizes.empty());

  auto seg_cfg = cfg;
  seg_cfg.level = harness::EvalLevel::segment;
  seg_cfg.segment_hop_s = 7.0;
  const auto direct = harness::run_experiment(c.manifest, seg_cfg);
  for (const auto& row : sweep.rows) {
    CHECK(row.segment_s == 7.0);
    if (row.metric == "rmse") {
      CHECK(row.mean == doctest::Approx(direct.aggregate.rmse.mean));
      CHECK(row.stddev == doctest::Approx(direct.aggregate.rmse.stddev));
    }
  }

  // a size no recording can fill is skipped, not an error
  const auto skipped = harness::segment_sweep(c.manifest, cfg, {60.0},
                                              {FeatureSet::raw_dmfcc});
  CHECK(skipped.rows.empty());
  REQUIRE(skipped.skipped_sizes.size() == 1);
  CHECK(skipped.skipped_sizes[0] == 60.0);
}

TEST_CASE("compare shares plans across feature sets and reports significance") {
  const auto& c = corpus();
  auto cfg = fast_config();
  cfg.n_runs = 4;
  const auto result = harness::compare_feature_sets(
      c.manifest, cfg, {FeatureSet::raw_mfcc, FeatureSet::raw_dmfcc});
  REQUIRE(result.experiments.size() == 2);
  for (int run = 0; run < 4; ++run) {
    CHECK(result.experiments[0].runs[run].test_speakers ==
          result.experiments[1].runs[run].test_speakers);
  }
  REQUIRE(result.significance.count("rmse") == 1);
  REQUIRE(result.significance.count("ccc") == 1);
  CHECK(result.significance.at("rmse").pairwise.size() == 1);

  CHECK_THROWS_AS(
      harness::compare_feature_sets(c.manifest, cfg, {FeatureSet::raw_mfcc}),
      ConfigError);
}

TEST_CASE("heatmap requires fvtc scores and reduces mean-then-max") {
  vtc::VtcConfig cfg;
  cfg.n_channels = 15;
  cfg.max_delay = 2;
  const int n = 15, d = 2;

  harness::RunReport r1, r2;
  r1.feature_scores.assign(n * n * d, 1.0);
  r2.feature_scores.assign(n * n * d, 1.0);
  // feature (1,12,d=1): mean of 4 and 2 is 3 -> cell max must be 3
  r1.feature_scores[(1 * n + 12) * d + 1] = 4.0;
  r2.feature_scores[(1 * n + 12) * d + 1] = 2.0;
  // selected: one high-channel pair, two pairs inside channels 0-6
  r1.pipeline.selected = {(8 * n + 9) * d + 0};
  r2.pipeline.selected = {(0 * n + 1) * d + 0, (2 * n + 3) * d + 1};

  const auto heatmap = harness::fvalue_heatmap({r1, r2}, cfg);
  CHECK(heatmap.n_channels == n);
  CHECK(heatmap.matrix[1 * n + 12] == doctest::Approx(3.0));
  CHECK(heatmap.matrix[0] == doctest::Approx(1.0));
  CHECK(heatmap.selected_fraction_low_channels == doctest::Approx(2.0 / 3.0));

  harness::RunReport bad;  // no scores
  CHECK_THROWS_AS(harness::fvalue_heatmap({bad}, cfg), InputError);
}

TEST_CASE("uniform scores produce a uniform heatmap") {
  vtc::VtcConfig cfg;
  cfg.n_channels = 4;
  cfg.max_delay = 5;
  harness::RunReport run;
  run.feature_scores.assign(4 * 4 * 5, 2.5);
  const auto heatmap = harness::fvalue_heatmap({run}, cfg);
  for (double v : heatmap.matrix) CHECK(v == doctest::Approx(2.5));
}

}  // TEST_SUITE
