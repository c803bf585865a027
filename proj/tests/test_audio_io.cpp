#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <vector>

#include "audioad/audio_io.hpp"
#include "audioad/error.hpp"
#include "oracles.hpp"

using namespace audioad;

namespace {

void put16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(v & 0xFF);
  b.push_back(v >> 8);
}
void put32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xFF);
}

// Hand-assembled WAV so the decoder is not checked against its own encoder.
std::vector<unsigned char> make_wav(std::uint16_t format, std::uint16_t channels, std::uint16_t bits,
                                    const std::vector<unsigned char>& payload, bool extra_chunk = false) {
  std::vector<unsigned char> b = {'R', 'I', 'F', 'F'};
  put32(b, 0);
  b.insert(b.end(), {'W', 'A', 'V', 'E'});
  if (extra_chunk) {
    b.insert(b.end(), {'L', 'I', 'S', 'T'});
    put32(b, 3);
    b.insert(b.end(), {'a', 'b', 'c', 0});  // odd size plus pad byte
  }
  b.insert(b.end(), {'f', 'm', 't', ' '});
  put32(b, 16);
  put16(b, format);
  put16(b, channels);
  put32(b, 16000);
  put32(b, 16000u * channels * bits / 8);
  put16(b, static_cast<std::uint16_t>(channels * bits / 8));
  put16(b, bits);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put32(b, static_cast<std::uint32_t>(payload.size()));
  b.insert(b.end(), payload.begin(), payload.end());
  const auto riff = static_cast<std::uint32_t>(b.size() - 8);
  std::memcpy(b.data() + 4, &riff, 4);
  return b;
}

std::vector<unsigned char> pcm16(const std::vector<std::int16_t>& v) {
  std::vector<unsigned char> out;
  for (auto s : v) put16(out, static_cast<std::uint16_t>(s));
  return out;
}

}  // namespace

TEST_CASE("PCM16 samples scale by 1/32768") {
  const auto b = decode_wav(make_wav(1, 1, 16, pcm16({0, 16384, -16384})));
  REQUIRE(b.size() == 3);
  CHECK(b.sample_rate == 16000);
  CHECK(b.samples[0] == 0.0);
  CHECK(b.samples[1] == 0.5);
  CHECK(b.samples[2] == -0.5);
}

TEST_CASE("stereo downmix is the channel mean") {
  const auto b = decode_wav(make_wav(1, 2, 16, pcm16({16384, -16384, 8192, 8192})));
  REQUIRE(b.size() == 2);
  CHECK(b.samples[0] == 0.0);
  CHECK(b.samples[1] == 0.25);
}

TEST_CASE("stereo (L, L) reads the same as mono L") {
  const std::vector<std::int16_t> mono = {100, -2000, 32767, -32768, 7};
  std::vector<std::int16_t> stereo;
  for (auto s : mono) stereo.insert(stereo.end(), {s, s});
  CHECK(decode_wav(make_wav(1, 1, 16, pcm16(mono))).samples ==
        decode_wav(make_wav(1, 2, 16, pcm16(stereo))).samples);
}

TEST_CASE("float32 data and unknown chunks") {
  std::vector<unsigned char> payload;
  for (float f : {0.25f, -1.0f}) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put32(payload, bits);
  }
  const auto b = decode_wav(make_wav(3, 1, 32, payload, true));
  REQUIRE(b.size() == 2);
  CHECK(b.samples[0] == 0.25);
  CHECK(b.samples[1] == -1.0);
}

TEST_CASE("container errors") {
  auto bytes = make_wav(1, 1, 16, pcm16({1, 2}));
  SUBCASE("RIFX magic") {
    bytes[3] = 'X';
    try {
      decode_wav(bytes);
      FAIL("expected MalformedContainer");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMalformedContainer);
    }
  }
  SUBCASE("chunk size past end of file") {
    bytes.resize(bytes.size() - 2);
    CHECK_THROWS_AS(decode_wav(bytes), Error);
  }
  SUBCASE("8-bit PCM is unsupported") {
    try {
      decode_wav(make_wav(1, 1, 8, {1, 2}));
      FAIL("expected UnsupportedEncoding");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnsupportedEncoding);
    }
  }
  SUBCASE("three channels are unsupported") {
    try {
      decode_wav(make_wav(1, 3, 16, pcm16({1, 2, 3})));
      FAIL("expected UnsupportedEncoding");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnsupportedEncoding);
    }
  }
  SUBCASE("empty data chunk") {
    try {
      decode_wav(make_wav(1, 1, 16, {}));
      FAIL("expected EmptyAudio");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyAudio);
    }
  }
}

TEST_CASE("write_wav clamps, rounds to the reader's step and saturates") {
  const auto bytes = encode_wav({{0.0, 1.5, -2.0, 0.5}, 16000});
  REQUIRE(bytes.size() == 44 + 8);
  auto at = [&](std::size_t i) { return static_cast<std::int16_t>(bytes[44 + 2 * i] | (bytes[45 + 2 * i] << 8)); };
  CHECK(at(0) == 0);
  CHECK(at(1) == 32767);
  CHECK(at(2) == -32768);
  CHECK(at(3) == 16384);
}

TEST_CASE("write/read round trip is within one LSB") {
  oracle::Lcg rng(7);
  AudioBuffer b;
  b.sample_rate = 22050;
  for (int i = 0; i < 1000; ++i) b.samples.push_back(rng.symmetric());
  const auto path = std::filesystem::temp_directory_path() / "audioad_roundtrip.wav";
  write_wav(b, path);
  const AudioBuffer r = read_wav(path);
  std::filesystem::remove(path);
  REQUIRE(r.size() == b.size());
  CHECK(r.sample_rate == 22050);
  double worst = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) worst = std::max(worst, std::abs(r.samples[i] - b.samples[i]));
  CHECK(worst <= 1.0 / 32767.0);
}

TEST_CASE("write_wav reports I/O failure") {
  try {
    write_wav({{0.1}, 16000}, "/nonexistent-dir/x.wav");
    FAIL("expected IoFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIoFailure);
  }
}

TEST_CASE("resample_linear") {
  SUBCASE("same rate is the identity") {
    const AudioBuffer b{{0.1, -0.2, 0.3}, 16000};
    CHECK(resample_linear(b, 16000).samples == b.samples);
  }
  SUBCASE("constant stays constant") {
    const AudioBuffer b{std::vector<double>(441, 0.3), 44100};
    for (int rate : {8000, 16000, 48000}) {
      for (double s : resample_linear(b, rate).samples) CHECK(s == 0.3);
    }
  }
  SUBCASE("ramp [0, 1] from 8 kHz to 16 kHz") {
    // Output j sits at input position j/2: 0, 0.5, 1, then held at the end.
    const auto r = resample_linear({{0.0, 1.0}, 8000}, 16000);
    REQUIRE(r.size() == 4);
    CHECK(r.samples[0] == 0.0);
    CHECK(r.samples[1] == 0.5);
    CHECK(r.samples[2] == 1.0);
    CHECK(r.samples[3] == 1.0);
  }
  SUBCASE("duration within one sample and bounds preserved") {
    oracle::Lcg rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      AudioBuffer b;
      b.sample_rate = 8000 + 1000 * trial;
      const std::size_t n = 50 + rng.index(500);
      for (std::size_t i = 0; i < n; ++i) b.samples.push_back(rng.symmetric());
      const int target = 11025 + 997 * trial;
      const auto r = resample_linear(b, target);
      const double lo = *std::min_element(b.samples.begin(), b.samples.end());
      const double hi = *std::max_element(b.samples.begin(), b.samples.end());
      CHECK(std::abs(r.duration_s() - b.duration_s()) <= 1.0 / target);
      for (double s : r.samples) {
        CHECK(s >= lo);
        CHECK(s <= hi);
      }
    }
  }
  CHECK_THROWS_AS(resample_linear({{0.0}, 16000}, 0), Error);
}
