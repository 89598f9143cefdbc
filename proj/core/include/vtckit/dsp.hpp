#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vtckit/wav.hpp"

namespace vtckit::dsp {

enum class ChannelKind { mfcc, dmfcc };

std::string to_string(ChannelKind kind);

struct DspConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_mfcc = 16;   // DCT coefficients kept before dropping c0
  int n_mels = 40;
  int delta_width = 9;      // odd, >= 3
  double log_floor = 1e-10; // power floor before the log

  int window_samples(int sample_rate) const;
  int hop_samples(int sample_rate) const;
  int fft_size(int sample_rate) const;  // next power of two >= window
};

/// channels x frames, row-major; one row per acoustic channel.
struct FrameMatrix {
  std::vector<double> values;
  int channels = 0;
  int frames = 0;
  ChannelKind kind = ChannelKind::mfcc;
  double hop_ms = 10.0;
  std::string speaker_id;
  int start_frame = 0;  // frame offset within the source recording

  double& at(int c, int t) { return values[static_cast<std::size_t>(c) * frames + t]; }
  double at(int c, int t) const { return values[static_cast<std::size_t>(c) * frames + t]; }
  std::span<const double> channel(int c) const {
    return {values.data() + static_cast<std::size_t>(c) * frames,
            static_cast<std::size_t>(frames)};
  }
};

/// Number of full analysis windows: 1 + floor((L - W) / H), valid for L >= W.
long frame_count(long n_samples, int window, int hop);

/// Periodic Hamming window of length n.
std::vector<double> hamming_window(int n);

/// In-place radix-2 FFT; sizes must be powers of two.
void fft_radix2(std::span<double> re, std::span<double> im);

struct MelFilterbank {
  int n_mels = 0;
  int n_bins = 0;                // fft_size / 2 + 1
  std::vector<double> weights;   // n_mels x n_bins, row-major
  std::vector<double> edges_hz;  // n_mels + 2 band edges
  double center_hz(int m) const { return edges_hz[m + 1]; }
};

/// Slaney-style triangular filters on the Slaney mel scale (linear below
/// 1 kHz, logarithmic above), area-normalized, spanning 0 .. sample_rate/2.
MelFilterbank make_mel_filterbank(int sample_rate, int fft_size, int n_mels);

/// Mel-band powers per frame (pre-log): Hamming window, zero-padded FFT,
/// one-sided power spectrum, triangular filterbank. n_mels x T.
FrameMatrix mel_power_frames(const AudioBuffer& audio, const DspConfig& cfg);

/// MFCC frames with the 0th coefficient removed: log of floored mel powers
/// followed by an orthonormal DCT-II, keeping coefficients 1..n_mfcc-1.
/// Result is (n_mfcc - 1) x T with kind mfcc.
FrameMatrix mfcc(const AudioBuffer& audio, const DspConfig& cfg);

/// Per-channel local linear-regression slope over a centered window of
/// `width` frames; edge frames replicate the boundary. Result kind is dmfcc.
FrameMatrix delta(const FrameMatrix& frames, int width);

/// Speaker-level cepstral mean and variance normalization: per channel,
/// subtract the mean, divide by the population standard deviation. A
/// zero-variance channel is mean-centered with divisor 1. Applies to the
/// full recording, before any segmentation.
FrameMatrix cmvn(const FrameMatrix& frames);

/// Slices into windows of exactly round(segment_s*1000/hop_ms) frames
/// starting every round(hop_s*1000/hop_ms) frames; a trailing partial window
/// is dropped. A recording shorter than one segment yields an empty list.
std::vector<FrameMatrix> segment_frames(const FrameMatrix& frames,
                                        double segment_s, double hop_s);

/// CSV export, one row per frame.
void export_frames_csv(const FrameMatrix& frames,
                       const std::filesystem::path& path);

}  // namespace vtckit::dsp
