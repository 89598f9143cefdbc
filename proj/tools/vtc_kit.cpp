// vtc-kit: corpus synthesis, feature extraction, and the full regression
// protocol from the command line.
//
// Exit codes: 0 success, 1 validation/configuration error, 2 I/O or format
// error. All randomness flows from --seed.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vtckit/dataset.hpp"
#include "vtckit/dsp.hpp"
#include "vtckit/errors.hpp"
#include "vtckit/harness.hpp"
#include "vtckit/report.hpp"
#include "vtckit/vtcf.hpp"

namespace {

using namespace vtckit;

std::filesystem::path require_out_dir(const std::string& out) {
  std::filesystem::path dir(out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + dir.string());
  return dir;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing: " + path.string());
}

std::vector<harness::FeatureSet> parse_feature_sets(const std::string& csv) {
  std::vector<harness::FeatureSet> sets;
  std::string token;
  std::stringstream stream(csv);
  while (std::getline(stream, token, ',')) {
    if (!token.empty()) sets.push_back(harness::feature_set_from_string(token));
  }
  if (sets.empty()) throw ConfigError("empty feature set list");
  return sets;
}

// Experiment options shared by run/sweep/compare/heatmap. A --config JSON
// (mirroring the config schema) seeds the values; explicit flags override.
struct ExperimentCli {
  std::string manifest_path;
  std::string out;
  std::string config_path;
  std::string feature_set;
  std::string level;
  std::string external_csv;
  std::string degenerate_channel;
  double segment_s = 0.0;
  double segment_hop_s = 0.0;
  double test_fraction = 0.0;
  int n_runs = 0;
  int n_controls_kept = -1;
  int top_k = 0;
  std::uint64_t seed = 0;
  int threads = 0;
  bool fixed_controls = false;
  CLI::App* cmd = nullptr;

  CLI::App* attach(CLI::App& app, const std::string& name,
                   const std::string& description) {
    cmd = app.add_subcommand(name, description);
    cmd->add_option("--manifest", manifest_path, "corpus manifest CSV")
        ->required();
    cmd->add_option("--out", out, "output directory")->required();
    cmd->add_option("--config", config_path, "experiment config JSON");
    cmd->add_option("--feature-set", feature_set,
                    "raw_mfcc|raw_dmfcc|evtc_mfcc|evtc_dmfcc|fvtc_mfcc|"
                    "fvtc_dmfcc|external");
    cmd->add_option("--seed", seed, "master seed (all randomness flows from it)");
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--segment-s", segment_s, "segment length, seconds");
    cmd->add_option("--segment-hop-s", segment_hop_s, "segment hop, seconds");
    cmd->add_option("--test-fraction", test_fraction, "held-out speaker fraction");
    cmd->add_option("--runs", n_runs, "number of seeded runs");
    cmd->add_option("--controls-kept", n_controls_kept,
                    "controls retained per run");
    cmd->add_option("--top-k", top_k, "features kept by F-value selection");
    cmd->add_option("--level", level, "evaluation level: speaker|segment");
    cmd->add_flag("--fixed-controls", fixed_controls,
                  "draw the control subset once instead of per run");
    cmd->add_option("--degenerate-channel", degenerate_channel,
                    "degenerate channel policy: error|zero");
    cmd->add_option("--external-csv", external_csv,
                    "external feature CSV (feature_set=external)");
    return cmd;
  }

  harness::ExperimentConfig build() const {
    harness::ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw IoError("cannot open config: " + config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config JSON " + config_path + ": " + e.what());
      }
      cfg = harness::config_from_json(j);
    }
    if (!feature_set.empty()) {
      cfg.feature_set = harness::feature_set_from_string(feature_set);
    }
    if (cmd->count("--segment-s")) cfg.segment_s = segment_s;
    if (cmd->count("--segment-hop-s")) cfg.segment_hop_s = segment_hop_s;
    if (cmd->count("--test-fraction")) cfg.test_fraction = test_fraction;
    if (cmd->count("--runs")) cfg.n_runs = n_runs;
    if (cmd->count("--controls-kept")) cfg.n_controls_kept = n_controls_kept;
    if (cmd->count("--top-k")) cfg.top_k = top_k;
    if (cmd->count("--level")) cfg.level = harness::eval_level_from_string(level);
    if (cmd->count("--seed")) cfg.master_seed = seed;
    if (cmd->count("--threads")) cfg.threads = threads;
    if (cmd->count("--fixed-controls")) cfg.fixed_controls = fixed_controls;
    if (cmd->count("--external-csv")) cfg.external_csv = external_csv;
    if (!degenerate_channel.empty()) {
      if (degenerate_channel == "zero") {
        cfg.vtc.degenerate_to_zero = true;
      } else if (degenerate_channel != "error") {
        throw ConfigError("unknown degenerate-channel policy '" +
                          degenerate_channel + "'");
      }
    }
    return cfg;
  }
};

void emit_experiment(const dataset::DatasetManifest& manifest,
                     const harness::ExperimentResult& result,
                     const std::filesystem::path& out_dir) {
  write_json(harness::aggregate_to_json(result), out_dir / "aggregate.json");
  const auto predictions = harness::speaker_predictions(manifest, result.runs);
  report::write_speaker_predictions_csv(predictions,
                                        out_dir / "speaker_predictions.csv");
  report::write_speaker_predictions_svg(predictions,
                                        out_dir / "speaker_predictions.svg");
  std::printf("%s: rmse %.4f (%.4f)  r2 %.4f (%.4f)  ccc %.4f (%.4f)\n",
              harness::to_string(result.config.feature_set).c_str(),
              result.aggregate.rmse.mean, result.aggregate.rmse.stddev,
              result.aggregate.r2.mean, result.aggregate.r2.stddev,
              result.aggregate.ccc.mean, result.aggregate.ccc.stddev);
  for (const auto& id : result.aggregate.skipped_speakers) {
    std::fprintf(stderr, "warning: speaker '%s' produced no segments\n",
                 id.c_str());
  }
}

void run_extract(const std::string& manifest_path, const std::string& out,
                 const std::string& kind, const std::string& stream,
                 const std::string& feature_set, double segment_s, double hop_s,
                 bool csv, int threads) {
  const auto manifest = dataset::load_manifest(manifest_path);
  const auto out_dir = require_out_dir(out);
  if (stream != "mfcc" && stream != "dmfcc") {
    throw ConfigError("unknown stream '" + stream + "'");
  }
  if (kind != "frames" && kind != "fvtc" && kind != "evtc" && kind != "table") {
    throw ConfigError("unknown extraction kind '" + kind + "'");
  }

  if (kind == "table") {
    // Whole segment-level feature table in one container plus sidecar.
    harness::ExperimentConfig fcfg;
    fcfg.feature_set = harness::feature_set_from_string(feature_set);
    fcfg.segment_s = segment_s;
    if (hop_s > 0) fcfg.segment_hop_s = hop_s;
    fcfg.threads = threads;
    const auto features = harness::extract_features(manifest, fcfg);
    io::write_table_vtcf(features.table, out_dir / "features.vtcf");
    if (csv) baseline::export_table_csv(features.table, out_dir / "features.csv");
    for (const auto& id : features.skipped_speakers) {
      std::fprintf(stderr, "warning: speaker '%s' produced no segments\n",
                   id.c_str());
    }
    std::printf("wrote %zu x %zu feature table under %s\n",
                features.table.n_rows(), features.table.dim(),
                out_dir.string().c_str());
    return;
  }

  harness::ExperimentConfig cfg;  // dsp/vtc defaults
  cfg.threads = threads;
  nlohmann::json index;
  index["schema_version"] = 1;
  index["kind"] = kind;
  index["stream"] = stream;
  index["files"] = nlohmann::json::array();

  for (const auto& record : manifest.records) {
    auto audio = dsp::read_wav(record.wav_path);
    audio.speaker_id = record.speaker_id;
    auto frames = dsp::mfcc(audio, cfg.dsp);
    if (stream == "dmfcc") frames = dsp::delta(frames, cfg.dsp.delta_width);
    frames = dsp::cmvn(frames);

    if (kind == "frames") {
      const auto path = out_dir / (record.speaker_id + ".frames.vtcf");
      io::write_frames_vtcf(frames, path);
      if (csv) dsp::export_frames_csv(frames, out_dir / (record.speaker_id + ".frames.csv"));
      index["files"].push_back(path.filename().string());
      continue;
    }
    const auto segments =
        dsp::segment_frames(frames, segment_s, hop_s > 0 ? hop_s : segment_s);
    if (segments.empty()) {
      std::fprintf(stderr, "warning: speaker '%s' produced no segments\n",
                   record.speaker_id.c_str());
      continue;
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
      auto tensor = vtc::fvtc(segments[s], cfg.vtc);
      tensor.segment_index = static_cast<int>(s);
      const std::string base = record.speaker_id + "_seg" + std::to_string(s);
      if (kind == "fvtc") {
        const auto path = out_dir / (base + ".fvtc.vtcf");
        io::write_tensor_vtcf(tensor, path);
        if (csv) vtc::export_tensor_csv(tensor, out_dir / (base + ".fvtc.csv"));
        index["files"].push_back(path.filename().string());
      } else {
        const auto path = out_dir / (base + ".evtc.vtcf");
        io::write_evtc_vtcf(vtc::evtc(tensor), path);
        index["files"].push_back(path.filename().string());
      }
    }
  }
  write_json(index, out_dir / "extract_manifest.json");
  std::printf("wrote %zu file(s) under %s\n", index["files"].size(),
              out_dir.string().c_str());
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Vocal tract coordination features and motor-score regression"};
  app.require_subcommand(1);

  // ---- synth ---------------------------------------------------------------
  dataset::SynthConfig synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--out", synth_out, "corpus directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--controls", synth.n_control, "control speakers");
  synth_cmd->add_option("--premanifest", synth.n_premanifest, "premanifest speakers");
  synth_cmd->add_option("--early", synth.n_early, "early-stage speakers");
  synth_cmd->add_option("--late", synth.n_late, "late-stage speakers");
  synth_cmd->add_option("--duration", synth.duration_s, "recording length, seconds");
  synth_cmd->add_option("--sample-rate", synth.sample_rate, "sample rate, Hz");
  synth_cmd->add_option("--coupling", synth.coupling_strength,
                        "TMS-to-lag-jitter coupling strength");
  synth_cmd
      ->add_option("--coupled-channels", synth.coupled_channels,
                   "restrict coupling to these cepstral channels")
      ->delimiter(',');
  synth_cmd->add_option("--chain-spacing", synth.chain_spacing_s,
                        "inter-channel lag, seconds per chain position");

  // ---- extract ---------------------------------------------------------------
  std::string ex_manifest, ex_out, ex_kind = "frames", ex_stream = "dmfcc";
  std::string ex_feature_set = "fvtc_dmfcc";
  double ex_segment = 10.0, ex_hop = 0.0;
  bool ex_csv = false;
  int ex_threads = 1;
  auto* extract_cmd =
      app.add_subcommand("extract", "write frame/VTC features as VTCF files");
  extract_cmd->add_option("--manifest", ex_manifest, "corpus manifest CSV")
      ->required();
  extract_cmd->add_option("--out", ex_out, "output directory")->required();
  extract_cmd->add_option("--kind", ex_kind, "frames|fvtc|evtc|table");
  extract_cmd->add_option("--stream", ex_stream, "mfcc|dmfcc");
  extract_cmd->add_option("--feature-set", ex_feature_set,
                          "feature set for --kind table");
  extract_cmd->add_option("--segment-s", ex_segment, "segment length, seconds");
  extract_cmd->add_option("--segment-hop-s", ex_hop, "segment hop, seconds");
  extract_cmd->add_flag("--csv", ex_csv, "also write CSV exports");
  extract_cmd->add_option("--threads", ex_threads, "worker threads");

  // ---- run / sweep / compare / heatmap --------------------------------------
  ExperimentCli run_opts;
  run_opts.attach(app, "run", "run one feature set over n seeded runs");

  ExperimentCli sweep_opts;
  std::vector<double> sweep_sizes = {7, 10, 15, 20, 25, 30};
  std::string sweep_sets = "raw_dmfcc,fvtc_dmfcc";
  auto* sweep_cmd =
      sweep_opts.attach(app, "sweep", "segment-size sweep, segment-level metrics");
  sweep_cmd->add_option("--sizes", sweep_sizes, "segment sizes, seconds")
      ->delimiter(',');
  sweep_cmd->add_option("--feature-sets", sweep_sets, "comma-separated feature sets");

  ExperimentCli compare_opts;
  std::string compare_sets;
  auto* compare_cmd = compare_opts.attach(
      app, "compare", "multiple feature sets on shared plans + Tukey HSD");
  compare_cmd->add_option("--feature-sets", compare_sets,
                          "comma-separated feature sets")
      ->required();

  ExperimentCli heat_opts;
  auto* heat_cmd = heat_opts.attach(
      app, "heatmap", "channel-importance heatmap from FVTC F-values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) {
      const auto out_dir = require_out_dir(synth_out);
      const auto manifest = dataset::generate_synthetic_corpus(synth, out_dir);
      std::printf("wrote %zu speakers, manifest at %s\n",
                  manifest.records.size(),
                  (out_dir / "manifest.csv").string().c_str());
    } else if (extract_cmd->parsed()) {
      run_extract(ex_manifest, ex_out, ex_kind, ex_stream, ex_feature_set,
                  ex_segment, ex_hop, ex_csv, ex_threads);
    } else if (run_opts.cmd->parsed()) {
      const auto cfg = run_opts.build();
      const auto manifest = dataset::load_manifest(run_opts.manifest_path);
      const auto out_dir = require_out_dir(run_opts.out);
      const auto result = harness::run_experiment(manifest, cfg);
      emit_experiment(manifest, result, out_dir);
    } else if (sweep_cmd->parsed()) {
      auto cfg = sweep_opts.build();
      const auto manifest = dataset::load_manifest(sweep_opts.manifest_path);
      const auto out_dir = require_out_dir(sweep_opts.out);
      const auto sweep = harness::segment_sweep(manifest, cfg, sweep_sizes,
                                                parse_feature_sets(sweep_sets));
      report::write_sweep_csv(sweep, out_dir / "sweep.csv");
      for (double size : sweep.skipped_sizes) {
        std::fprintf(stderr, "warning: size %g s yields no segments, skipped\n",
                     size);
      }
      std::printf("wrote %s (%zu rows)\n",
                  (out_dir / "sweep.csv").string().c_str(), sweep.rows.size());
    } else if (compare_cmd->parsed()) {
      const auto cfg = compare_opts.build();
      const auto manifest = dataset::load_manifest(compare_opts.manifest_path);
      const auto out_dir = require_out_dir(compare_opts.out);
      const auto result = harness::compare_feature_sets(
          manifest, cfg, parse_feature_sets(compare_sets));
      write_json(report::compare_to_json(result), out_dir / "compare.json");
      report::write_significance_csv(result, out_dir / "significance.csv");
      for (const auto& experiment : result.experiments) {
        std::printf("%s: rmse %.4f  r2 %.4f  ccc %.4f\n",
                    harness::to_string(experiment.config.feature_set).c_str(),
                    experiment.aggregate.rmse.mean, experiment.aggregate.r2.mean,
                    experiment.aggregate.ccc.mean);
      }
    } else if (heat_cmd->parsed()) {
      auto cfg = heat_opts.build();
      if (!harness::is_fvtc(cfg.feature_set)) {
        cfg.feature_set = harness::FeatureSet::fvtc_dmfcc;
      }
      const auto manifest = dataset::load_manifest(heat_opts.manifest_path);
      const auto out_dir = require_out_dir(heat_opts.out);
      const auto result = harness::run_experiment(manifest, cfg);
      const auto heatmap = harness::fvalue_heatmap(result.runs, cfg.vtc);
      report::write_heatmap_csv(heatmap, out_dir / "heatmap.csv");
      report::write_heatmap_svg(heatmap, out_dir / "heatmap.svg");
      write_json({{"schema_version", 1},
                  {"config", harness::to_json(cfg)},
                  {"selected_fraction_channels_0_6",
                   heatmap.selected_fraction_low_channels}},
                 out_dir / "heatmap.json");
      std::printf("selected features with both channels in 0-6: %.1f%%\n",
                  100.0 * heatmap.selected_fraction_low_channels);
    }
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return dispatch(argc, argv); }
