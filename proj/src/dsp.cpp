#include "audioad/dsp.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "audioad/error.hpp"

namespace audioad {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

std::vector<double> hann_window(std::size_t n) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "window length must be >= 2");
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n)));
  }
  return w;
}

void fft_inplace(std::vector<Complex>& x, bool inverse) {
  const std::size_t n = x.size();
  if (!is_power_of_two(n)) {
    throw Error(ErrorCode::kNFftNotPowerOfTwo, "transform length " + std::to_string(n));
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles are evaluated directly rather than by recurrence so error
    // stays at a few ulps for every stage.
    for (std::size_t k = 0; k < half; ++k) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      const Complex w(std::cos(angle), std::sin(angle));
      for (std::size_t start = 0; start < n; start += len) {
        const Complex u = x[start + k];
        const Complex v = x[start + k + half] * w;
        x[start + k] = u + v;
        x[start + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : x) v *= scale;
  }
}

std::vector<Complex> dft(std::span<const double> frame, std::size_t n_fft) {
  if (!is_power_of_two(n_fft)) {
    throw Error(ErrorCode::kNFftNotPowerOfTwo, "n_fft " + std::to_string(n_fft));
  }
  if (frame.size() > n_fft) {
    throw Error(ErrorCode::kInvalidArgument, "frame longer than n_fft");
  }
  std::vector<Complex> x(n_fft);
  for (std::size_t i = 0; i < frame.size(); ++i) x[i] = frame[i];
  fft_inplace(x, false);
  return x;
}

std::vector<double> inverse_dft(std::vector<Complex> spectrum) {
  fft_inplace(spectrum, true);
  std::vector<double> out(spectrum.size());
  for (std::size_t i = 0; i < spectrum.size(); ++i) out[i] = spectrum[i].real();
  return out;
}

std::size_t frame_count(std::size_t signal_len, std::size_t frame_len, std::size_t hop) noexcept {
  if (signal_len < frame_len || hop == 0) return 0;
  return 1 + (signal_len - frame_len) / hop;
}

FrameMatrix frame_signal(const AudioBuffer& buffer, std::size_t frame_len, std::size_t hop, bool window,
                         bool require_frame) {
  if (frame_len < 2) throw Error(ErrorCode::kInvalidArgument, "frame_len must be >= 2");
  if (hop < 1) throw Error(ErrorCode::kInvalidArgument, "hop must be >= 1");
  FrameMatrix m;
  m.frame_len = frame_len;
  m.hop = hop;
  m.sample_rate = buffer.sample_rate;
  m.num_frames = frame_count(buffer.size(), frame_len, hop);
  if (m.num_frames == 0 && require_frame) {
    throw Error(ErrorCode::kSignalTooShort, std::to_string(buffer.size()) + " samples < frame_len " +
                                                std::to_string(frame_len));
  }
  m.data.resize(m.num_frames * frame_len);
  const std::vector<double> w = window ? hann_window(frame_len) : std::vector<double>{};
  for (std::size_t i = 0; i < m.num_frames; ++i) {
    auto dst = m.row(i);
    const double* src = buffer.samples.data() + i * hop;
    for (std::size_t k = 0; k < frame_len; ++k) dst[k] = window ? src[k] * w[k] : src[k];
  }
  return m;
}

Spectrogram power_spectrogram(const FrameMatrix& frames, std::size_t n_fft, SpectrumScale scale) {
  if (frames.frame_len > n_fft) throw Error(ErrorCode::kInvalidArgument, "frame_len exceeds n_fft");
  if (!is_power_of_two(n_fft)) {
    throw Error(ErrorCode::kNFftNotPowerOfTwo, "n_fft " + std::to_string(n_fft));
  }
  Spectrogram s;
  s.num_frames = frames.num_frames;
  s.n_fft = n_fft;
  s.hop = frames.hop;
  s.sample_rate = frames.sample_rate;
  s.scale = scale;
  const std::size_t nb = s.num_bins();
  s.bins.resize(s.num_frames * nb);
  for (std::size_t f = 0; f < frames.num_frames; ++f) {
    const auto spec = dft(frames.row(f), n_fft);
    double* dst = s.bins.data() + f * nb;
    for (std::size_t k = 0; k < nb; ++k) {
      const double p = std::norm(spec[k]);
      switch (scale) {
        case SpectrumScale::kMagnitude: dst[k] = std::abs(spec[k]); break;
        case SpectrumScale::kPower: dst[k] = p; break;
        case SpectrumScale::kLogPower: dst[k] = 10.0 * std::log10(p + kLogFloor); break;
      }
    }
  }
  return s;
}

}  // namespace audioad
