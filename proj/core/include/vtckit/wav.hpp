#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vtckit::dsp {

struct AudioBuffer {
  std::vector<double> samples;  // mono, amplitude in [-1, 1]
  int sample_rate = 0;
  std::string speaker_id;
};

/// Reads a RIFF WAV. Supported codecs: PCM 16-bit and IEEE float 32-bit
/// (plain or WAVE_FORMAT_EXTENSIBLE). Multi-channel input is downmixed by
/// per-sample arithmetic mean; 16-bit samples scale by 1/32768. speaker_id
/// defaults to the file stem.
AudioBuffer read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM little-endian. Samples are clamped to [-1, 1] and
/// rounded to the nearest representable level.
void write_wav_mono16(const std::filesystem::path& path,
                      std::span<const double> samples, int sample_rate);

}  // namespace vtckit::dsp
