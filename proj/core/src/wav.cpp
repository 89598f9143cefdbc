#include "vtckit/wav.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "vtckit/errors.hpp"

namespace vtckit::dsp {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void append_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void append_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();

  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 ||
      std::memcmp(data + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_size = 0;
  bool saw_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const char* chunk_id = reinterpret_cast<const char*>(data + pos);
    const std::uint32_t chunk_size = read_u32(data + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > size) {
      throw IoError("truncated wav chunk '" + std::string(chunk_id, 4) + "' in " +
                    path.string());
    }
    if (std::memcmp(chunk_id, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError("short fmt chunk: " + path.string());
      format = read_u16(data + body);
      channels = read_u16(data + body + 2);
      sample_rate = read_u32(data + body + 4);
      bits = read_u16(data + body + 14);
      if (format == kFormatExtensible) {
        // Extensible: the real codec lives in the first two bytes of the GUID.
        if (chunk_size < 40) throw FormatError("short extensible fmt chunk");
        format = read_u16(data + body + 24);
      }
      saw_fmt = true;
    } else if (std::memcmp(chunk_id, "data", 4) == 0) {
      pcm = data + body;
      pcm_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!saw_fmt || pcm == nullptr) {
    throw IoError("wav missing fmt/data chunk: " + path.string());
  }
  if (channels == 0 || sample_rate == 0) {
    throw FormatError("wav has zero channels or sample rate: " + path.string());
  }

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw FormatError("unsupported wav codec (format=" + std::to_string(format) +
                      ", bits=" + std::to_string(bits) + "): " + path.string());
  }

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  if (pcm_size % frame_bytes != 0) {
    throw IoError("wav data size is not a whole number of frames: " + path.string());
  }
  const std::size_t n_frames = pcm_size / frame_bytes;

  AudioBuffer audio;
  audio.sample_rate = static_cast<int>(sample_rate);
  audio.speaker_id = path.stem().string();
  audio.samples.resize(n_frames);

  for (std::size_t t = 0; t < n_frames; ++t) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* p = pcm + t * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        const auto raw = static_cast<std::int16_t>(p[0] | (p[1] << 8));
        acc += raw / 32768.0;
      } else {
        const std::uint32_t u = read_u32(p);
        acc += std::bit_cast<float>(u);
      }
    }
    audio.samples[t] = acc / channels;
  }
  return audio;
}

void write_wav_mono16(const std::filesystem::path& path,
                      std::span<const double> samples, int sample_rate) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  append_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  append_u32(out, 16);
  append_u16(out, kFormatPcm);
  append_u16(out, 1);  // mono
  append_u32(out, static_cast<std::uint32_t>(sample_rate));
  append_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);  // byte rate
  append_u16(out, 2);   // block align
  append_u16(out, 16);  // bits per sample
  out += "data";
  append_u32(out, data_bytes);
  for (double s : samples) {
    double v = std::clamp(s, -1.0, 1.0) * 32767.0;
    const auto q = static_cast<std::int16_t>(std::lrint(v));
    append_u16(out, static_cast<std::uint16_t>(q));
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write wav: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed writing wav: " + path.string());
}

}  // namespace vtckit::dsp
