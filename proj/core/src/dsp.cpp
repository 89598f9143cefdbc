#include "vtckit/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "vtckit/errors.hpp"

namespace vtckit::dsp {

namespace {

// Slaney mel scale: linear below 1 kHz (200/3 Hz per mel), logarithmic above
// with a step of ln(6.4)/27 per mel.
constexpr double kMelLinearHzPerMel = 200.0 / 3.0;
constexpr double kMelBreakHz = 1000.0;
constexpr double kMelBreak = kMelBreakHz / kMelLinearHzPerMel;  // 15 mel
const double kMelLogStep = std::log(6.4) / 27.0;

double hz_to_mel(double hz) {
  if (hz < kMelBreakHz) return hz / kMelLinearHzPerMel;
  return kMelBreak + std::log(hz / kMelBreakHz) / kMelLogStep;
}

double mel_to_hz(double mel) {
  if (mel < kMelBreak) return mel * kMelLinearHzPerMel;
  return kMelBreakHz * std::exp(kMelLogStep * (mel - kMelBreak));
}

}  // namespace

std::string to_string(ChannelKind kind) {
  return kind == ChannelKind::mfcc ? "mfcc" : "dmfcc";
}

int DspConfig::window_samples(int sample_rate) const {
  return static_cast<int>(std::llround(window_ms * sample_rate / 1000.0));
}

int DspConfig::hop_samples(int sample_rate) const {
  return static_cast<int>(std::llround(hop_ms * sample_rate / 1000.0));
}

int DspConfig::fft_size(int sample_rate) const {
  int n = 1;
  while (n < window_samples(sample_rate)) n <<= 1;
  return n;
}

long frame_count(long n_samples, int window, int hop) {
  if (n_samples < window) return 0;
  return 1 + (n_samples - window) / hop;
}

std::vector<double> hamming_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

void fft_radix2(std::span<double> re, std::span<double> im) {
  const std::size_t n = re.size();
  if (n == 0 || (n & (n - 1)) != 0 || im.size() != n) {
    throw InputError("fft_radix2 requires equal power-of-two sizes");
  }
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const double wr = std::cos(angle), wi = std::sin(angle);
    for (std::size_t start = 0; start < n; start += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::size_t a = start + k, b = start + k + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

MelFilterbank make_mel_filterbank(int sample_rate, int fft_size, int n_mels) {
  MelFilterbank bank;
  bank.n_mels = n_mels;
  bank.n_bins = fft_size / 2 + 1;
  bank.edges_hz.resize(n_mels + 2);

  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  for (int m = 0; m < n_mels + 2; ++m) {
    bank.edges_hz[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (n_mels + 1));
  }

  bank.weights.assign(static_cast<std::size_t>(n_mels) * bank.n_bins, 0.0);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = bank.edges_hz[m];
    const double mid = bank.edges_hz[m + 1];
    const double hi = bank.edges_hz[m + 2];
    const double area_norm = 2.0 / (hi - lo);
    for (int k = 0; k < bank.n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      double w = 0.0;
      if (f > lo && f < hi) {
        w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      }
      bank.weights[static_cast<std::size_t>(m) * bank.n_bins + k] = w * area_norm;
    }
  }
  return bank;
}

FrameMatrix mel_power_frames(const AudioBuffer& audio, const DspConfig& cfg) {
  if (!(cfg.window_ms > cfg.hop_ms && cfg.hop_ms > 0.0)) {
    throw InputError("window_ms must exceed hop_ms, both positive");
  }
  if (cfg.log_floor <= 0.0) throw InputError("log_floor must be positive");
  const int window = cfg.window_samples(audio.sample_rate);
  const int hop = cfg.hop_samples(audio.sample_rate);
  const int nfft = cfg.fft_size(audio.sample_rate);
  const long n_frames =
      frame_count(static_cast<long>(audio.samples.size()), window, hop);
  if (n_frames < 1) {
    throw InputError("audio shorter than one analysis window (" +
                     std::to_string(audio.samples.size()) + " < " +
                     std::to_string(window) + " samples)");
  }

  const auto win = hamming_window(window);
  const auto bank = make_mel_filterbank(audio.sample_rate, nfft, cfg.n_mels);

  FrameMatrix mel;
  mel.channels = cfg.n_mels;
  mel.frames = static_cast<int>(n_frames);
  mel.hop_ms = cfg.hop_ms;
  mel.speaker_id = audio.speaker_id;
  mel.values.assign(static_cast<std::size_t>(mel.channels) * mel.frames, 0.0);

  std::vector<double> re(nfft), im(nfft), power(bank.n_bins);
  for (long t = 0; t < n_frames; ++t) {
    const double* src = audio.samples.data() + t * hop;
    for (int i = 0; i < window; ++i) re[i] = src[i] * win[i];
    std::fill(re.begin() + window, re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    fft_radix2(re, im);
    for (int k = 0; k < bank.n_bins; ++k) power[k] = re[k] * re[k] + im[k] * im[k];
    for (int m = 0; m < cfg.n_mels; ++m) {
      const double* w = bank.weights.data() + static_cast<std::size_t>(m) * bank.n_bins;
      double acc = 0.0;
      for (int k = 0; k < bank.n_bins; ++k) acc += w[k] * power[k];
      mel.at(m, static_cast<int>(t)) = acc;
    }
  }
  return mel;
}

FrameMatrix mfcc(const AudioBuffer& audio, const DspConfig& cfg) {
  if (cfg.n_mfcc > cfg.n_mels) throw InputError("n_mfcc must be <= n_mels");
  FrameMatrix mel = mel_power_frames(audio, cfg);

  // Orthonormal DCT-II over the floored log energies; coefficient 0 carries
  // only overall log gain and is dropped.
  const int n_out = cfg.n_mfcc - 1;
  const int n_mels = cfg.n_mels;
  std::vector<double> dct(static_cast<std::size_t>(n_out) * n_mels);
  const double scale = std::sqrt(2.0 / n_mels);
  for (int k = 1; k < cfg.n_mfcc; ++k) {
    for (int m = 0; m < n_mels; ++m) {
      dct[static_cast<std::size_t>(k - 1) * n_mels + m] =
          scale * std::cos(std::numbers::pi * k * (2 * m + 1) / (2.0 * n_mels));
    }
  }

  FrameMatrix out;
  out.channels = n_out;
  out.frames = mel.frames;
  out.kind = ChannelKind::mfcc;
  out.hop_ms = cfg.hop_ms;
  out.speaker_id = audio.speaker_id;
  out.values.assign(static_cast<std::size_t>(n_out) * mel.frames, 0.0);

  std::vector<double> logmel(n_mels);
  for (int t = 0; t < mel.frames; ++t) {
    for (int m = 0; m < n_mels; ++m) {
      logmel[m] = std::log(std::max(mel.at(m, t), cfg.log_floor));
    }
    for (int k = 0; k < n_out; ++k) {
      const double* row = dct.data() + static_cast<std::size_t>(k) * n_mels;
      double acc = 0.0;
      for (int m = 0; m < n_mels; ++m) acc += row[m] * logmel[m];
      out.at(k, t) = acc;
    }
  }
  return out;
}

FrameMatrix delta(const FrameMatrix& frames, int width) {
  if (width < 3 || width % 2 == 0) {
    throw InputError("delta width must be odd and >= 3");
  }
  if (frames.frames < width) {
    throw InputError("delta needs at least " + std::to_string(width) +
                     " frames, got " + std::to_string(frames.frames));
  }
  const int half = (width - 1) / 2;
  double denom = 0.0;
  for (int k = 1; k <= half; ++k) denom += static_cast<double>(k) * k;
  denom *= 2.0;

  FrameMatrix out = frames;
  out.kind = ChannelKind::dmfcc;
  const int last = frames.frames - 1;
  for (int c = 0; c < frames.channels; ++c) {
    for (int t = 0; t < frames.frames; ++t) {
      double acc = 0.0;
      for (int k = 1; k <= half; ++k) {
        const double ahead = frames.at(c, std::min(t + k, last));
        const double behind = frames.at(c, std::max(t - k, 0));
        acc += k * (ahead - behind);
      }
      out.at(c, t) = acc / denom;
    }
  }
  return out;
}

FrameMatrix cmvn(const FrameMatrix& frames) {
  if (frames.frames < 2) throw InputError("cmvn needs at least 2 frames");
  FrameMatrix out = frames;
  const double n = frames.frames;
  for (int c = 0; c < frames.channels; ++c) {
    // Constancy is decided exactly (min == max): the accumulated mean of a
    // constant channel carries rounding error, so a variance test would
    // normalize rounding noise to unit scale.
    double lo = frames.at(c, 0), hi = frames.at(c, 0);
    for (int t = 1; t < frames.frames; ++t) {
      lo = std::min(lo, frames.at(c, t));
      hi = std::max(hi, frames.at(c, t));
    }
    if (lo == hi) {
      for (int t = 0; t < frames.frames; ++t) out.at(c, t) = 0.0;
      continue;
    }
    double mean = 0.0;
    for (int t = 0; t < frames.frames; ++t) mean += frames.at(c, t);
    mean /= n;
    double var = 0.0;
    for (int t = 0; t < frames.frames; ++t) {
      const double d = frames.at(c, t) - mean;
      var += d * d;
    }
    var /= n;
    const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (int t = 0; t < frames.frames; ++t) {
      out.at(c, t) = (frames.at(c, t) - mean) * inv;
    }
  }
  return out;
}

std::vector<FrameMatrix> segment_frames(const FrameMatrix& frames,
                                        double segment_s, double hop_s) {
  if (segment_s <= 0.0 || hop_s <= 0.0) {
    throw InputError("segment and hop must be positive");
  }
  const int seg_frames =
      static_cast<int>(std::llround(segment_s * 1000.0 / frames.hop_ms));
  const int hop_frames =
      static_cast<int>(std::llround(hop_s * 1000.0 / frames.hop_ms));
  if (seg_frames < 1 || hop_frames < 1) {
    throw InputError("segment or hop shorter than one frame");
  }

  std::vector<FrameMatrix> segments;
  for (int start = 0; start + seg_frames <= frames.frames; start += hop_frames) {
    FrameMatrix seg;
    seg.channels = frames.channels;
    seg.frames = seg_frames;
    seg.kind = frames.kind;
    seg.hop_ms = frames.hop_ms;
    seg.speaker_id = frames.speaker_id;
    seg.start_frame = frames.start_frame + start;
    seg.values.resize(static_cast<std::size_t>(seg.channels) * seg_frames);
    for (int c = 0; c < frames.channels; ++c) {
      const double* src = frames.values.data() +
                          static_cast<std::size_t>(c) * frames.frames + start;
      std::copy(src, src + seg_frames,
                seg.values.begin() + static_cast<std::size_t>(c) * seg_frames);
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

void export_frames_csv(const FrameMatrix& frames,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write csv: " + path.string());
  for (int c = 0; c < frames.channels; ++c) {
    out << (c ? "," : "") << "ch" << (c < 10 ? "0" : "") << c;
  }
  out << "\n";
  out.precision(17);
  for (int t = 0; t < frames.frames; ++t) {
    for (int c = 0; c < frames.channels; ++c) {
      out << (c ? "," : "") << frames.at(c, t);
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing csv: " + path.string());
}

}  // namespace vtckit::dsp
