#include <algorithm>
#include <cmath>
#include <numbers>

#include "vtckit/dataset.hpp"
#include "vtckit/dsp.hpp"
#include "vtckit/errors.hpp"
#include "vtckit/rng.hpp"
#include "vtckit/wav.hpp"

// Synthetic corpus generation.
//
// The analyzer measures delayed correlations between cepstral channels, so
// the generator plants its signal exactly there. Each retained cepstral
// channel c gets a slow envelope a_c(t); band m of a 40-oscillator bank is
// amplitude-modulated so its log power is sum_c a_c(t) cos(pi c (m+1/2)/40).
// Because the analysis DCT is orthogonal to that basis, MFCC channel c of
// the synthesized audio tracks a_c(t) up to an affine map that CMVN removes.
// Coupled channels read one shared source at per-channel lags through a
// per-channel time jitter whose stddev grows with tms * coupling_strength:
// low-TMS speakers show crisp lag structure, high-TMS speakers a smeared
// one, while every per-channel marginal statistic stays TMS-independent.

namespace vtckit::dataset {

namespace {

constexpr int kNumChannels = 15;   // retained cepstral channels
constexpr int kNumBands = 40;      // synthesis oscillators = mel filters
constexpr double kGridDt = 0.005;  // envelope grid step, seconds
constexpr double kPadLeft = 1.5;   // source history for lags + jitter, seconds
constexpr double kSourceKernelS = 0.05;   // source correlation width
constexpr double kJitterKernelS = 0.25;   // jitter correlation width
constexpr double kJitterFullS = 0.15;     // jitter stddev at tms=128, coupling=1
constexpr double kSharedFraction = 0.85;  // coupled-channel mix: shared vs own noise
constexpr double kCepstralAmp = 0.5;      // planted envelope stddev (log power units)

// Clinical cohort TMS statistics the draws mirror.
constexpr double kHdTmsMean = 33.6, kHdTmsStd = 23.6;
constexpr double kControlTmsMean = 4.4, kControlTmsStd = 2.7;

void box_blur(std::vector<double>& v, int radius) {
  if (radius < 1) return;
  const int n = static_cast<int>(v.size());
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + v[i];
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - radius);
    const int hi = std::min(n - 1, i + radius);
    v[i] = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1);
  }
}

// Unit-variance correlated noise: white Gaussian smoothed by four box
// passes (close to a Gaussian kernel of width kernel_s).
std::vector<double> smoothed_noise(rng::Xoshiro256pp& gen, int n, double kernel_s) {
  std::vector<double> v(n);
  for (auto& x : v) x = gen.gaussian();
  const int radius =
      std::max(1, static_cast<int>(std::lround(kernel_s * std::numbers::sqrt3 /
                                               (2.0 * kGridDt))));
  for (int pass = 0; pass < 4; ++pass) box_blur(v, radius);

  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= n;
  const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  for (auto& x : v) x = (x - mean) * inv;
  return v;
}

double interp(const std::vector<double>& v, double index) {
  if (index <= 0.0) return v.front();
  const auto last = static_cast<double>(v.size() - 1);
  if (index >= last) return v.back();
  const int i0 = static_cast<int>(index);
  const double frac = index - i0;
  return v[i0] * (1.0 - frac) + v[i0 + 1] * frac;
}

void standardize(std::vector<double>& v, double target_std) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= v.size();
  const double scale = var > 0.0 ? target_std / std::sqrt(var) : 0.0;
  for (auto& x : v) x = (x - mean) * scale;
}

struct SpeakerSpec {
  std::string id;
  Cohort cohort;
  Severity severity;
  double tms;
  std::optional<int> tfc;
  std::optional<int> dcl;
};

std::vector<double> synthesize_speaker(const SynthConfig& cfg, double tms,
                                       rng::Xoshiro256pp& gen,
                                       const std::vector<double>& band_hz) {
  const int n_samples = static_cast<int>(std::llround(cfg.duration_s * cfg.sample_rate));
  const int n_grid = static_cast<int>(std::ceil(cfg.duration_s / kGridDt)) + 2;
  // Source history on both sides: lags plus jitter excursions read the past,
  // negative jitter reads slightly ahead.
  const int pad_steps = static_cast<int>(kPadLeft / kGridDt) + 2;
  const int n_grid_padded = n_grid + 2 * pad_steps;

  std::vector<int> coupled = cfg.coupled_channels;
  if (coupled.empty()) {
    coupled.resize(kNumChannels);
    for (int c = 0; c < kNumChannels; ++c) coupled[c] = c;
  }

  // Shared source on the padded grid; per-channel envelopes on the emit grid.
  const auto source = smoothed_noise(gen, n_grid_padded, kSourceKernelS);
  const double jitter_std_s =
      cfg.coupling_strength * (tms / 128.0) * kJitterFullS;

  std::vector<std::vector<double>> envelope(kNumChannels);
  for (int c = 0; c < kNumChannels; ++c) {
    const auto own = smoothed_noise(gen, n_grid, kSourceKernelS);
    const auto it = std::find(coupled.begin(), coupled.end(), c);
    if (it == coupled.end()) {
      envelope[c] = own;
    } else {
      const double lag_s =
          cfg.chain_spacing_s * static_cast<double>(it - coupled.begin());
      const auto jitter = smoothed_noise(gen, n_grid, kJitterKernelS);
      std::vector<double> mixed(n_grid);
      for (int i = 0; i < n_grid; ++i) {
        const double lag_steps =
            (lag_s + jitter[i] * jitter_std_s) / kGridDt;
        const double src_index = pad_steps + i - lag_steps;
        mixed[i] = kSharedFraction * interp(source, src_index) +
                   (1.0 - kSharedFraction) * own[i];
      }
      envelope[c] = std::move(mixed);
    }
    standardize(envelope[c], kCepstralAmp);
  }

  // Band amplitudes: log power of band m carries the DCT-basis mix of the
  // channel envelopes, so amplitude is exp(half of that).
  std::vector<std::vector<double>> amp(kNumBands, std::vector<double>(n_grid));
  for (int m = 0; m < kNumBands; ++m) {
    for (int i = 0; i < n_grid; ++i) {
      double log_power = 0.0;
      for (int c = 0; c < kNumChannels; ++c) {
        log_power += envelope[c][i] *
                     std::cos(std::numbers::pi * (c + 1) * (2 * m + 1) /
                              (2.0 * kNumBands));
      }
      amp[m][i] = std::exp(0.5 * log_power);
    }
  }

  // Oscillator bank via complex rotation (one rotate per band per sample).
  std::vector<double> zr(kNumBands), zi(kNumBands), rr(kNumBands), ri(kNumBands);
  for (int m = 0; m < kNumBands; ++m) {
    const double phase = 2.0 * std::numbers::pi * gen.uniform();
    zr[m] = std::cos(phase);
    zi[m] = std::sin(phase);
    const double omega = 2.0 * std::numbers::pi * band_hz[m] / cfg.sample_rate;
    rr[m] = std::cos(omega);
    ri[m] = std::sin(omega);
  }

  std::vector<double> samples(n_samples);
  const double per_band_gain = 1.0 / kNumBands;
  for (int n = 0; n < n_samples; ++n) {
    const double grid_pos = n / (cfg.sample_rate * kGridDt);
    const int i0 = std::min(static_cast<int>(grid_pos), n_grid - 2);
    const double frac = grid_pos - i0;
    double acc = 0.0;
    for (int m = 0; m < kNumBands; ++m) {
      const double a = amp[m][i0] * (1.0 - frac) + amp[m][i0 + 1] * frac;
      acc += a * zi[m];
      const double nzr = zr[m] * rr[m] - zi[m] * ri[m];
      zi[m] = zr[m] * ri[m] + zi[m] * rr[m];
      zr[m] = nzr;
    }
    samples[n] = acc * per_band_gain;
  }

  double peak = 0.0;
  for (double s : samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.0) {
    const double gain = 0.9 / peak;
    for (auto& s : samples) s *= gain;
  }
  return samples;
}

}  // namespace

DatasetManifest generate_synthetic_corpus(const SynthConfig& cfg,
                                          const std::filesystem::path& out_dir) {
  if (cfg.n_control < 0 || cfg.n_premanifest < 0 || cfg.n_early < 0 ||
      cfg.n_late < 0) {
    throw InputError("synthetic corpus counts must be >= 0");
  }
  if (cfg.duration_s <= 0.0) throw InputError("duration_s must be positive");
  if (cfg.sample_rate < 8000) throw InputError("sample_rate must be >= 8000");
  if (cfg.coupling_strength < 0.0) {
    throw InputError("coupling_strength must be >= 0");
  }
  for (int c : cfg.coupled_channels) {
    if (c < 0 || c >= kNumChannels) {
      throw InputError("coupled channel " + std::to_string(c) +
                       " outside 0.." + std::to_string(kNumChannels - 1));
    }
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory: " + out_dir.string());

  // Band frequencies = centers of the filterbank the analyzer will apply.
  dsp::DspConfig dsp_cfg;
  const auto bank = dsp::make_mel_filterbank(
      cfg.sample_rate, dsp_cfg.fft_size(cfg.sample_rate), kNumBands);
  std::vector<double> band_hz(kNumBands);
  for (int m = 0; m < kNumBands; ++m) band_hz[m] = bank.center_hz(m);

  // Cohort targets: controls from the control distribution; HD speakers from
  // the HD distribution, sorted ascending so premanifest < early < late.
  rng::Xoshiro256pp tms_gen(rng::mix(cfg.seed, 0));
  const int n_hd = cfg.n_premanifest + cfg.n_early + cfg.n_late;
  std::vector<double> control_tms(cfg.n_control);
  for (auto& v : control_tms) {
    v = tms_gen.truncated_gaussian(kControlTmsMean, kControlTmsStd, 0.0, 128.0);
  }
  std::vector<double> hd_tms(n_hd);
  for (auto& v : hd_tms) {
    v = tms_gen.truncated_gaussian(kHdTmsMean, kHdTmsStd, 0.0, 128.0);
  }
  std::sort(hd_tms.begin(), hd_tms.end());

  std::vector<SpeakerSpec> specs;
  int index = 0;
  auto speaker_name = [&index] {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "spk%03d", index++);
    return std::string(buf);
  };
  for (int i = 0; i < cfg.n_control; ++i) {
    specs.push_back({speaker_name(), Cohort::control, Severity::control,
                     control_tms[i], std::nullopt, std::nullopt});
  }
  int hd_cursor = 0;
  for (int i = 0; i < cfg.n_premanifest; ++i) {
    const int dcl = static_cast<int>(tms_gen.below(4));  // 0..3
    const int tfc = 7 + static_cast<int>(tms_gen.below(7));
    specs.push_back({speaker_name(), Cohort::hd, Severity::premanifest,
                     hd_tms[hd_cursor++], tfc, dcl});
  }
  for (int i = 0; i < cfg.n_early; ++i) {
    const int tfc = 7 + static_cast<int>(tms_gen.below(7));  // 7..13
    specs.push_back({speaker_name(), Cohort::hd, Severity::early,
                     hd_tms[hd_cursor++], tfc, 4});
  }
  for (int i = 0; i < cfg.n_late; ++i) {
    const int tfc = static_cast<int>(tms_gen.below(7));  // 0..6
    specs.push_back({speaker_name(), Cohort::hd, Severity::late,
                     hd_tms[hd_cursor++], tfc, 4});
  }

  DatasetManifest manifest;
  manifest.sample_rate_hint = cfg.sample_rate;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    rng::Xoshiro256pp gen(rng::mix(cfg.seed, 1000 + i));
    const auto samples = synthesize_speaker(cfg, spec.tms, gen, band_hz);
    const auto wav_path = out_dir / (spec.id + ".wav");
    dsp::write_wav_mono16(wav_path, samples, cfg.sample_rate);

    SpeakerRecord record;
    record.speaker_id = spec.id;
    record.wav_path = wav_path;
    record.tms = spec.tms;
    record.cohort = spec.cohort;
    record.severity = spec.severity;
    record.tfc = spec.tfc;
    record.dcl = spec.dcl;
    validate_record(record);
    manifest.records.push_back(std::move(record));
  }

  save_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace vtckit::dataset
