#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "audioad/audio_io.hpp"
#include "audioad/dsp.hpp"

namespace audioad {

// Mean Hann-windowed magnitude spectrum of the noise-only lead of a clip.
struct NoiseProfile {
  std::vector<double> mean_magnitude;  // n_fft/2 + 1 bins
  std::size_t n_fft = kDefaultNFft;
  std::size_t frame_len = kDefaultFrameLen;
  std::size_t source_frames = 0;
};

struct SpectralSubtractionParams {
  std::size_t frame_len = kDefaultFrameLen;
  std::size_t n_fft = kDefaultNFft;
  double alpha = 2.0;  // over-subtraction
  double beta = 0.01;  // spectral floor
};

// Analysis/synthesis hop used by the noise profile and overlap-add: half a
// frame, where the periodic Hann window sums to one.
inline std::size_t subtraction_hop(std::size_t frame_len) noexcept { return frame_len / 2; }

NoiseProfile estimate_noise_profile(const AudioBuffer& buffer, double lead_ms,
                                    std::size_t frame_len = kDefaultFrameLen,
                                    std::size_t n_fft = kDefaultNFft);

// M'[k] = max(M[k] - alpha * N[k], beta * M[k]).
std::vector<double> subtract_magnitudes(std::span<const double> magnitude, std::span<const double> noise,
                                        double alpha, double beta);

struct SubtractionTrace {
  AudioBuffer output;
  Spectrogram input_magnitude;   // per analysis frame, before subtraction
  Spectrogram output_magnitude;  // per analysis frame, after subtraction
};

AudioBuffer spectral_subtract(const AudioBuffer& buffer, const NoiseProfile& profile,
                              const SpectralSubtractionParams& params);

// Same as spectral_subtract, also returning the per-frame magnitudes.
SubtractionTrace spectral_subtract_traced(const AudioBuffer& buffer, const NoiseProfile& profile,
                                          const SpectralSubtractionParams& params);

struct AdaptiveFilterState {
  std::vector<double> weights;
  double mu = 0.5;
  std::size_t taps = 32;
  double eps = 1e-8;
};

struct NlmsResult {
  AudioBuffer cleaned;
  AdaptiveFilterState state;
};

// Normalized LMS noise canceller. The filter predicts the primary from the
// last `taps` reference samples; the prediction error is the cleaned signal.
NlmsResult nlms_cancel(const AudioBuffer& primary, const AudioBuffer& reference, double mu, std::size_t taps);

enum class NormalizeMode { kPeak, kRms };

struct NormalizeResult {
  AudioBuffer buffer;
  bool silent = false;
};

NormalizeResult normalize(const AudioBuffer& buffer, NormalizeMode mode, double target);

enum class PadPolicy { kZeroPadLast, kDropLast };

struct SegmentSet {
  std::vector<AudioBuffer> segments;
  std::size_t seg_len = 0;
  PadPolicy pad_policy = PadPolicy::kZeroPadLast;
  std::size_t source_length = 0;  // samples before segmentation
};

std::size_t segment_length(double seg_len_s, int sample_rate);

SegmentSet segment(const AudioBuffer& buffer, double seg_len_s, PadPolicy pad_policy);

// Inverse of segment() under zero-pad-last: concatenation trimmed to the
// source length.
AudioBuffer concatenate(const SegmentSet& set);

struct PreprocessParams {
  double noise_lead_ms = 250.0;
  SpectralSubtractionParams subtraction;
  double nlms_mu = 0.5;
  std::size_t nlms_taps = 32;
  NormalizeMode norm_mode = NormalizeMode::kPeak;
  double norm_target = 0.99;
  double seg_len_s = 1.0;
  PadPolicy pad_policy = PadPolicy::kZeroPadLast;
};

struct PreprocessResult {
  SegmentSet segments;
  bool silent = false;
  bool adaptive_filter_applied = false;
};

// Noise reduction (spectral subtraction, then NLMS when a reference channel
// is given), normalization, segmentation.
PreprocessResult preprocess_clip(const AudioBuffer& clip, const std::optional<AudioBuffer>& reference,
                                 const PreprocessParams& params);

}  // namespace audioad
