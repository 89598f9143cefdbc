#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

#include "vtckit/dsp.hpp"
#include "vtckit/rng.hpp"

namespace testing {

/// Scratch directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vtckit_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline vtckit::dsp::FrameMatrix random_frames(int channels, int frames,
                                              std::uint64_t seed,
                                              const std::string& speaker = "t") {
  vtckit::dsp::FrameMatrix m;
  m.channels = channels;
  m.frames = frames;
  m.speaker_id = speaker;
  m.values.resize(static_cast<std::size_t>(channels) * frames);
  vtckit::rng::Xoshiro256pp gen(seed);
  for (auto& v : m.values) v = gen.gaussian();
  return m;
}

}  // namespace testing
