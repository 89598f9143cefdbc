#include <doctest.h>

#include <cstring>
#include <fstream>

#include "helpers.hpp"
#include "vtckit/baseline.hpp"
#include "vtckit/errors.hpp"
#include "vtckit/vtc.hpp"
#include "vtckit/vtcf.hpp"
#include "vtckit/wav.hpp"

using namespace vtckit;

TEST_SUITE("io") {

TEST_CASE("pcm16 scaling and mean downmix") {
  testing::TempDir dir("wav");
  const auto path = dir.path() / "x.wav";

  // Hand-built stereo PCM16 file: frames (32767, 32767), (16384, -16384).
  std::string bytes;
  auto u16 = [&](std::uint16_t v) {
    bytes.push_back(static_cast<char>(v & 0xFF));
    bytes.push_back(static_cast<char>(v >> 8));
  };
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  bytes += "RIFF";
  u32(36 + 8);
  bytes += "WAVEfmt ";
  u32(16);
  u16(1);      // PCM
  u16(2);      // stereo
  u32(8000);
  u32(8000 * 4);
  u16(4);
  u16(16);
  bytes += "data";
  u32(8);
  u16(32767);
  u16(32767);
  u16(16384);
  u16(static_cast<std::uint16_t>(-16384));
  std::ofstream(path, std::ios::binary).write(bytes.data(), bytes.size());

  const auto audio = dsp::read_wav(path);
  CHECK(audio.sample_rate == 8000);
  REQUIRE(audio.samples.size() == 2);
  CHECK(audio.samples[0] == doctest::Approx(32767.0 / 32768.0));
  CHECK(audio.samples[1] == doctest::Approx(0.0));
  CHECK(audio.speaker_id == "x");
}

TEST_CASE("unsupported codec is a format error, truncation an io error") {
  testing::TempDir dir("wavbad");
  const auto gsm = dir.path() / "gsm.wav";
  std::string bytes;
  auto u16 = [&](std::uint16_t v) {
    bytes.push_back(static_cast<char>(v & 0xFF));
    bytes.push_back(static_cast<char>(v >> 8));
  };
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  bytes += "RIFF";
  u32(36);
  bytes += "WAVEfmt ";
  u32(16);
  u16(0x0031);  // GSM 6.10
  u16(1);
  u32(8000);
  u32(1625);
  u16(65);
  u16(0);
  bytes += "data";
  u32(0);
  std::ofstream(gsm, std::ios::binary).write(bytes.data(), bytes.size());
  CHECK_THROWS_AS(dsp::read_wav(gsm), FormatError);

  const auto cut = dir.path() / "cut.wav";
  std::ofstream(cut, std::ios::binary).write(bytes.data(), 20);
  CHECK_THROWS_AS(dsp::read_wav(cut), vtckit::Error);

  const auto nonwav = dir.path() / "n.wav";
  std::ofstream(nonwav, std::ios::binary).write("hello world, not audio", 22);
  CHECK_THROWS_AS(dsp::read_wav(nonwav), FormatError);
}

TEST_CASE("wav write/read round trip") {
  testing::TempDir dir("wavrt");
  std::vector<double> samples(512);
  rng::Xoshiro256pp gen(3);
  for (auto& s : samples) s = 0.8 * (gen.uniform() * 2.0 - 1.0);
  const auto path = dir.path() / "rt.wav";
  dsp::write_wav_mono16(path, samples, 16000);
  const auto audio = dsp::read_wav(path);
  REQUIRE(audio.samples.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(audio.samples[i] == doctest::Approx(samples[i]).epsilon(1e-3));
  }
}

TEST_CASE("float32 wav is accepted") {
  testing::TempDir dir("wavf32");
  const auto path = dir.path() / "f.wav";
  std::string bytes;
  auto u16 = [&](std::uint16_t v) {
    bytes.push_back(static_cast<char>(v & 0xFF));
    bytes.push_back(static_cast<char>(v >> 8));
  };
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  auto f32 = [&](float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  };
  bytes += "RIFF";
  u32(36 + 12);
  bytes += "WAVEfmt ";
  u32(16);
  u16(3);  // IEEE float
  u16(1);
  u32(16000);
  u32(16000 * 4);
  u16(4);
  u16(32);
  bytes += "data";
  u32(12);
  f32(0.25f);
  f32(-0.75f);
  f32(1.0f);
  std::ofstream(path, std::ios::binary).write(bytes.data(), bytes.size());

  const auto audio = dsp::read_wav(path);
  REQUIRE(audio.samples.size() == 3);
  CHECK(audio.samples[0] == doctest::Approx(0.25));
  CHECK(audio.samples[1] == doctest::Approx(-0.75));
  CHECK(audio.samples[2] == doctest::Approx(1.0));
}

TEST_CASE("vtcf frame matrix round trip and bad magic") {
  testing::TempDir dir("vtcf");
  auto frames = testing::random_frames(4, 17, 21, "spk7");
  const auto path = dir.path() / "f.frames.vtcf";
  io::write_frames_vtcf(frames, path);
  const auto loaded = io::read_frames_vtcf(path);
  CHECK(loaded.channels == 4);
  CHECK(loaded.frames == 17);
  CHECK(loaded.speaker_id == "spk7");
  for (std::size_t i = 0; i < frames.values.size(); ++i) {
    CHECK(loaded.values[i] ==
          doctest::Approx(static_cast<float>(frames.values[i])));
  }

  const auto bad = dir.path() / "bad.vtcf";
  std::ofstream(bad, std::ios::binary).write("NOPE\0\0\0\0more", 12);
  CHECK_THROWS_AS(io::read_frames_vtcf(bad), FormatError);
}

TEST_CASE("vtcf feature table round trip with sidecar metadata") {
  testing::TempDir dir("vtcftable");
  baseline::FeatureTable table;
  table.kind = baseline::FeatureKind::evtc;
  table.feature_names = {"eig0_d0", "eig0_d1", "eig1_d0"};
  table.rows = {{"spkA", 0, 12.5}, {"spkA", 1, 12.5}, {"spkB", 0, 40.0}};
  table.values = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const auto path = dir.path() / "features.vtcf";
  io::write_table_vtcf(table, path);
  CHECK(std::filesystem::exists(dir.path() / "features.vtcf.json"));

  const auto loaded = io::read_table_vtcf(path);
  CHECK(loaded.kind == table.kind);
  CHECK(loaded.feature_names == table.feature_names);
  REQUIRE(loaded.rows.size() == 3);
  CHECK(loaded.rows[2].speaker_id == "spkB");
  CHECK(loaded.rows[2].target_tms == 40.0);
  CHECK(loaded.rows[1].segment_index == 1);
  for (std::size_t i = 0; i < table.values.size(); ++i) {
    CHECK(loaded.values[i] == doctest::Approx(table.values[i]));
  }

  std::filesystem::remove(dir.path() / "features.vtcf.json");
  CHECK_THROWS_AS(io::read_table_vtcf(path), IoError);
}

TEST_CASE("vtcf tensor and evtc round trips keep shape and metadata") {
  testing::TempDir dir("vtcf2");
  vtc::VtcConfig cfg;
  cfg.n_channels = 3;
  cfg.max_delay = 5;
  auto frames = testing::random_frames(3, 40, 2, "spk1");
  auto tensor = vtc::fvtc(dsp::cmvn(frames), cfg);
  tensor.segment_index = 2;

  const auto tpath = dir.path() / "t.fvtc.vtcf";
  io::write_tensor_vtcf(tensor, tpath);
  const auto t2 = io::read_tensor_vtcf(tpath);
  CHECK(t2.n_channels == 3);
  CHECK(t2.delays == tensor.delays);
  CHECK(t2.segment_index == 2);
  CHECK(t2.speaker_id == "spk1");
  CHECK(t2.values.size() == tensor.values.size());

  const auto epath = dir.path() / "t.evtc.vtcf";
  auto matrix = vtc::evtc(tensor);
  io::write_evtc_vtcf(matrix, epath);
  const auto m2 = io::read_evtc_vtcf(epath);
  CHECK(m2.n_channels == 3);
  CHECK(m2.delays == matrix.delays);
  for (std::size_t i = 0; i < matrix.values.size(); ++i) {
    CHECK(m2.values[i] == doctest::Approx(static_cast<float>(matrix.values[i])));
  }
}

}  // TEST_SUITE
