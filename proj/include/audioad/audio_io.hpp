#pragma once

#include <filesystem>
#include <vector>

namespace audioad {

inline constexpr int kDefaultSampleRate = 16000;

// Mono floating-point audio. Amplitudes are nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

// Reads a RIFF/WAVE file holding PCM16 or float32 data in one or two
// channels. Stereo is downmixed by the per-sample channel mean.
AudioBuffer read_wav(const std::filesystem::path& path);

// Decodes WAV bytes already in memory; same contract as read_wav.
AudioBuffer decode_wav(const std::vector<unsigned char>& bytes);

// Writes 16-bit mono PCM. Samples are clamped to [-1, 1], scaled by 32768,
// rounded to nearest and saturated at 32767, so a read recovers each
// sample within half a step (one step at +1.0).
void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path);

std::vector<unsigned char> encode_wav(const AudioBuffer& buffer);

// Linear-interpolation resampler. Output sample j sits at input position
// j * in_rate / out_rate; positions past the last sample hold its value.
AudioBuffer resample_linear(const AudioBuffer& buffer, int target_rate);

}  // namespace audioad
