#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "audioad/audio_io.hpp"

namespace audioad {

inline constexpr std::size_t kDefaultFrameLen = 400;
inline constexpr std::size_t kDefaultHop = 160;
inline constexpr std::size_t kDefaultNFft = 512;
inline constexpr double kLogFloor = 1e-10;

using Complex = std::complex<double>;

// Row-major (num_frames x frame_len) block of analysis frames.
struct FrameMatrix {
  std::vector<double> data;
  std::size_t num_frames = 0;
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  int sample_rate = kDefaultSampleRate;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * frame_len, frame_len}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * frame_len, frame_len}; }
};

enum class SpectrumScale { kMagnitude, kPower, kLogPower };

// Row-major (num_frames x (n_fft/2 + 1)). Bin b is at b * sample_rate / n_fft Hz.
struct Spectrogram {
  std::vector<double> bins;
  std::size_t num_frames = 0;
  std::size_t n_fft = 0;
  std::size_t hop = 0;
  int sample_rate = kDefaultSampleRate;
  SpectrumScale scale = SpectrumScale::kPower;

  std::size_t num_bins() const noexcept { return n_fft / 2 + 1; }
  std::span<const double> row(std::size_t i) const { return {bins.data() + i * num_bins(), num_bins()}; }
  double bin_hz(std::size_t b) const noexcept {
    return static_cast<double>(b) * sample_rate / static_cast<double>(n_fft);
  }
};

bool is_power_of_two(std::size_t n) noexcept;

// Periodic Hann: w[k] = 0.5 * (1 - cos(2 pi k / n)).
std::vector<double> hann_window(std::size_t n);

// Forward transform of a real frame zero-padded to n_fft (power of two).
std::vector<Complex> dft(std::span<const double> frame, std::size_t n_fft);

// In-place radix-2 transform; `inverse` applies the 1/n scaling.
void fft_inplace(std::vector<Complex>& x, bool inverse);

// Real part of the inverse transform of a full n-point spectrum.
std::vector<double> inverse_dft(std::vector<Complex> spectrum);

std::size_t frame_count(std::size_t signal_len, std::size_t frame_len, std::size_t hop) noexcept;

// Frame i covers samples [i*hop, i*hop + frame_len); the trailing partial
// frame is dropped. When require_frame is set a signal shorter than one
// frame raises SignalTooShort instead of returning zero frames.
FrameMatrix frame_signal(const AudioBuffer& buffer, std::size_t frame_len, std::size_t hop, bool window,
                         bool require_frame = false);

// Per-frame magnitude, power, or 10*log10(power + 1e-10) over bins 0..n_fft/2.
Spectrogram power_spectrogram(const FrameMatrix& frames, std::size_t n_fft, SpectrumScale scale);

}  // namespace audioad
