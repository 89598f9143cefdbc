#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vtckit::dataset {

enum class Cohort { control, hd };

enum class Severity { control, premanifest, early, late };

std::string to_string(Cohort cohort);
std::string to_string(Severity severity);
Cohort cohort_from_string(const std::string& text);
Severity severity_from_string(const std::string& text);

struct SpeakerRecord {
  std::string speaker_id;
  std::filesystem::path wav_path;
  double tms = 0.0;  // Total Motor Score, 0 (healthy) .. 128 (severe)
  Cohort cohort = Cohort::control;
  Severity severity = Severity::control;
  std::optional<int> tfc;  // Total Functional Capacity, 0..13
  std::optional<int> dcl;  // diagnostic confidence level, 0..4

  bool operator==(const SpeakerRecord&) const = default;
};

struct DatasetManifest {
  std::vector<SpeakerRecord> records;
  std::optional<int> sample_rate_hint;

  const SpeakerRecord* find(const std::string& speaker_id) const;

  bool operator==(const DatasetManifest&) const = default;
};

/// Severity staging rules: control stays control; HD with dcl < 4 is
/// premanifest; manifest HD (dcl = 4) splits on TFC, 7-13 early and 0-6 late.
/// HD requires dcl; dcl = 4 additionally requires tfc.
Severity derive_severity(Cohort cohort, std::optional<int> dcl,
                         std::optional<int> tfc);

/// Reads a manifest CSV with header
/// `speaker_id,wav_path,tms,cohort,severity,tfc,dcl` (tfc/dcl may be empty).
/// An optional leading `# sample_rate_hint=<hz>` comment line is honored.
/// Validates all record invariants and cross-checks the stated severity
/// against derive_severity whenever dcl (and tfc where needed) are present.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Inverse of load_manifest: UTF-8, LF line endings, shortest round-trip
/// number formatting so load(save(m)) == m field-for-field.
void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);

/// Validates one record's invariants; throws ValidationError naming the
/// speaker and field.
void validate_record(const SpeakerRecord& record);

struct SynthConfig {
  int n_control = 7;
  int n_premanifest = 12;
  int n_early = 12;
  int n_late = 7;
  double duration_s = 30.0;
  int sample_rate = 16000;
  std::uint64_t seed = 0;

  // How strongly the planted TMS modulates inter-channel lag jitter. 0 means
  // the coupling structure is identical for every speaker regardless of TMS.
  double coupling_strength = 1.0;

  // Cepstral channels (0-based, post-c0-removal) that share the delayed
  // common source. Empty = all 15 channels form a delay chain. Two entries,
  // e.g. {2, 5}, plant coupling in exactly that pair.
  std::vector<int> coupled_channels;

  // Inter-channel lag of the chain, seconds per chain position.
  double chain_spacing_s = 0.03;
};

/// Writes one mono 16-bit PCM WAV per synthetic speaker plus manifest.csv
/// into out_dir and returns the manifest. Fully deterministic in cfg.seed.
///
/// Signal family: 40 band-limited oscillators at the mel filterbank centers,
/// amplitude-modulated so that cepstral channel c tracks a slow envelope
/// a_c(t). Coupled channels read a shared source at per-channel lags; each
/// channel's time axis is jittered with stddev proportional to
/// tms * coupling_strength, so channel-coupling crispness (not any marginal
/// statistic) carries the planted score. TMS values are truncated-normal
/// draws matching the clinical cohort statistics (HD 33.6 +/- 23.6, control
/// 4.4 +/- 2.7), clipped to [0, 128].
DatasetManifest generate_synthetic_corpus(const SynthConfig& cfg,
                                          const std::filesystem::path& out_dir);

}  // namespace vtckit::dataset
