#include "audioad/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "audioad/error.hpp"

namespace audioad {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  std::uint16_t block_align = 0;
};

}  // namespace

AudioBuffer decode_wav(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kMalformedContainer, "missing RIFF/WAVE header");
  }
  std::optional<FmtChunk> fmt;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    if (size > bytes.size() - pos - 8) {
      throw Error(ErrorCode::kMalformedContainer, "chunk size exceeds file length");
    }
    const unsigned char* body = chunk + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw Error(ErrorCode::kMalformedContainer, "fmt chunk too small");
      FmtChunk f;
      f.format = read_u16(body);
      f.channels = read_u16(body + 2);
      f.sample_rate = read_u32(body + 4);
      f.block_align = read_u16(body + 12);
      f.bits = read_u16(body + 14);
      if (f.format == kFormatExtensible && size >= 26) f.format = read_u16(body + 24);
      fmt = f;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = body;
      data_size = size;
    }
    // Chunks are word aligned.
    pos += 8 + size + (size & 1U);
  }
  if (!fmt) throw Error(ErrorCode::kMalformedContainer, "missing fmt chunk");
  if (data == nullptr) throw Error(ErrorCode::kMalformedContainer, "missing data chunk");

  const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
  const bool float32 = fmt->format == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::kUnsupportedEncoding, "format tag " + std::to_string(fmt->format) + " with " +
                                                     std::to_string(fmt->bits) + " bits");
  }
  if (fmt->channels != 1 && fmt->channels != 2) {
    throw Error(ErrorCode::kUnsupportedEncoding, std::to_string(fmt->channels) + " channels");
  }
  if (fmt->sample_rate == 0) throw Error(ErrorCode::kMalformedContainer, "zero sample rate");

  const std::size_t bytes_per_sample = fmt->bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  const std::size_t frames = data_size / frame_bytes;
  if (frames == 0) throw Error(ErrorCode::kEmptyAudio, "no samples in data chunk");

  AudioBuffer out;
  out.sample_rate = static_cast<int>(fmt->sample_rate);
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c) {
      const unsigned char* p = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<double>(static_cast<std::int16_t>(read_u16(p))) / 32768.0;
      } else {
        const std::uint32_t bits = read_u32(p);
        float v;
        std::memcpy(&v, &bits, sizeof v);
        acc += static_cast<double>(v);
      }
    }
    const double sample = acc / static_cast<double>(fmt->channels);
    out.samples[i] = std::isfinite(sample) ? sample : 0.0;
  }
  return out;
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<unsigned char> encode_wav(const AudioBuffer& buffer) {
  if (buffer.empty()) throw Error(ErrorCode::kEmptyAudio, "cannot write an empty buffer");
  if (buffer.sample_rate <= 0) throw Error(ErrorCode::kInvalidArgument, "sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(buffer.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (double s : buffer.samples) {
    const double clamped = std::isfinite(s) ? std::clamp(s, -1.0, 1.0) : 0.0;
    // Same 1/32768 step as the reader; +1.0 saturates at 32767.
    const auto v = static_cast<std::int16_t>(std::clamp(std::lround(clamped * 32768.0), -32768L, 32767L));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path) {
  const auto bytes = encode_wav(buffer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

AudioBuffer resample_linear(const AudioBuffer& buffer, int target_rate) {
  if (target_rate <= 0) throw Error(ErrorCode::kInvalidArgument, "target rate must be positive");
  if (target_rate == buffer.sample_rate || buffer.empty()) {
    AudioBuffer same = buffer;
    same.sample_rate = target_rate;
    return same;
  }
  const auto in_rate = static_cast<std::int64_t>(buffer.sample_rate);
  const auto out_rate = static_cast<std::int64_t>(target_rate);
  const auto n_in = static_cast<std::int64_t>(buffer.size());
  // Round to the nearest output count so the duration differs by < 1 sample.
  const std::int64_t n_out = std::max<std::int64_t>(1, (n_in * out_rate + in_rate / 2) / in_rate);

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (std::int64_t j = 0; j < n_out; ++j) {
    const std::int64_t num = j * in_rate;
    const std::int64_t i0 = num / out_rate;
    const double frac = static_cast<double>(num % out_rate) / static_cast<double>(out_rate);
    const double a = buffer.samples[static_cast<std::size_t>(std::min(i0, n_in - 1))];
    const double b = buffer.samples[static_cast<std::size_t>(std::min(i0 + 1, n_in - 1))];
    out.samples[static_cast<std::size_t>(j)] =
        frac == 0.0 ? a : std::clamp(a + frac * (b - a), std::min(a, b), std::max(a, b));
  }
  return out;
}

}  // namespace audioad
