#include "audioad/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "audioad/error.hpp"

namespace audioad {
namespace {

void check_subtraction_params(const SpectralSubtractionParams& p) {
  if (p.frame_len < 2 || p.frame_len > p.n_fft) {
    throw Error(ErrorCode::kInvalidArgument, "frame_len must be in [2, n_fft]");
  }
  if (!is_power_of_two(p.n_fft)) throw Error(ErrorCode::kNFftNotPowerOfTwo, std::to_string(p.n_fft));
  if (!(p.alpha >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be >= 0");
  if (!(p.beta >= 0.0 && p.beta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "beta must be in [0, 1]");
}

}  // namespace

NoiseProfile estimate_noise_profile(const AudioBuffer& buffer, double lead_ms, std::size_t frame_len,
                                    std::size_t n_fft) {
  if (frame_len < 2 || frame_len > n_fft) throw Error(ErrorCode::kInvalidArgument, "frame_len must be in [2, n_fft]");
  const auto lead = std::min(
      buffer.size(), static_cast<std::size_t>(std::llround(lead_ms * buffer.sample_rate / 1000.0)));
  const std::size_t hop = std::max<std::size_t>(1, subtraction_hop(frame_len));
  AudioBuffer head{{buffer.samples.begin(), buffer.samples.begin() + static_cast<std::ptrdiff_t>(lead)},
                   buffer.sample_rate};
  const FrameMatrix frames = frame_signal(head, frame_len, hop, true);
  if (frames.num_frames == 0) {
    throw Error(ErrorCode::kTooShortForProfile,
                "lead of " + std::to_string(lead) + " samples holds no full frame of " + std::to_string(frame_len));
  }
  const Spectrogram mag = power_spectrogram(frames, n_fft, SpectrumScale::kMagnitude);
  NoiseProfile profile;
  profile.n_fft = n_fft;
  profile.frame_len = frame_len;
  profile.source_frames = frames.num_frames;
  profile.mean_magnitude.assign(mag.num_bins(), 0.0);
  for (std::size_t f = 0; f < mag.num_frames; ++f) {
    const auto row = mag.row(f);
    for (std::size_t k = 0; k < row.size(); ++k) profile.mean_magnitude[k] += row[k];
  }
  for (auto& v : profile.mean_magnitude) v /= static_cast<double>(frames.num_frames);
  return profile;
}

std::vector<double> subtract_magnitudes(std::span<const double> magnitude, std::span<const double> noise,
                                        double alpha, double beta) {
  if (magnitude.size() != noise.size()) throw Error(ErrorCode::kProfileMismatch, "bin count differs");
  std::vector<double> out(magnitude.size());
  for (std::size_t k = 0; k < magnitude.size(); ++k) {
    out[k] = std::max(magnitude[k] - alpha * noise[k], beta * magnitude[k]);
  }
  return out;
}

SubtractionTrace spectral_subtract_traced(const AudioBuffer& buffer, const NoiseProfile& profile,
                                          const SpectralSubtractionParams& params) {
  check_subtraction_params(params);
  if (profile.n_fft != params.n_fft || profile.frame_len != params.frame_len ||
      profile.mean_magnitude.size() != params.n_fft / 2 + 1) {
    throw Error(ErrorCode::kProfileMismatch, "profile built for n_fft " + std::to_string(profile.n_fft) +
                                                 ", frame_len " + std::to_string(profile.frame_len));
  }
  const std::size_t n = params.frame_len;
  const std::size_t n_fft = params.n_fft;
  const std::size_t hop = std::max<std::size_t>(1, subtraction_hop(n));
  const std::size_t nb = n_fft / 2 + 1;

  // Pad so every input sample is covered by the same number of frames.
  AudioBuffer padded;
  padded.sample_rate = buffer.sample_rate;
  padded.samples.assign(hop + buffer.size() + n_fft, 0.0);
  std::copy(buffer.samples.begin(), buffer.samples.end(), padded.samples.begin() + static_cast<std::ptrdiff_t>(hop));

  const FrameMatrix frames = frame_signal(padded, n, hop, true);
  const std::vector<double> window = hann_window(n);

  SubtractionTrace trace;
  for (Spectrogram* s : {&trace.input_magnitude, &trace.output_magnitude}) {
    s->num_frames = frames.num_frames;
    s->n_fft = n_fft;
    s->hop = hop;
    s->sample_rate = buffer.sample_rate;
    s->scale = SpectrumScale::kMagnitude;
    s->bins.resize(frames.num_frames * nb);
  }

  std::vector<double> accum(padded.size() + n_fft, 0.0);
  std::vector<double> wsum(padded.size() + n_fft, 0.0);
  for (std::size_t f = 0; f < frames.num_frames; ++f) {
    std::vector<Complex> spec = dft(frames.row(f), n_fft);
    std::vector<double> mag(nb);
    for (std::size_t k = 0; k < nb; ++k) mag[k] = std::abs(spec[k]);
    const std::vector<double> cleaned = subtract_magnitudes(mag, profile.mean_magnitude, params.alpha, params.beta);
    std::copy(mag.begin(), mag.end(), trace.input_magnitude.bins.begin() + static_cast<std::ptrdiff_t>(f * nb));
    std::copy(cleaned.begin(), cleaned.end(), trace.output_magnitude.bins.begin() + static_cast<std::ptrdiff_t>(f * nb));

    // Scale each bin by a real gain so phase is kept and the spectrum stays
    // Hermitian.
    for (std::size_t k = 0; k < nb; ++k) {
      const double gain = mag[k] > 0.0 ? cleaned[k] / mag[k] : 0.0;
      spec[k] *= gain;
      if (k != 0 && k != n_fft / 2) spec[n_fft - k] *= gain;
    }
    const std::vector<double> frame_out = inverse_dft(std::move(spec));
    const std::size_t start = f * hop;
    for (std::size_t i = 0; i < n_fft; ++i) accum[start + i] += frame_out[i];
    for (std::size_t i = 0; i < n; ++i) wsum[start + i] += window[i];
  }

  trace.output.sample_rate = buffer.sample_rate;
  trace.output.samples.resize(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const std::size_t p = i + hop;
    trace.output.samples[i] = wsum[p] > 1e-12 ? accum[p] / wsum[p] : 0.0;
  }
  return trace;
}

AudioBuffer spectral_subtract(const AudioBuffer& buffer, const NoiseProfile& profile,
                              const SpectralSubtractionParams& params) {
  return spectral_subtract_traced(buffer, profile, params).output;
}

NlmsResult nlms_cancel(const AudioBuffer& primary, const AudioBuffer& reference, double mu, std::size_t taps) {
  if (primary.size() != reference.size() || primary.sample_rate != reference.sample_rate) {
    throw Error(ErrorCode::kLengthMismatch, "primary has " + std::to_string(primary.size()) +
                                                " samples, reference " + std::to_string(reference.size()));
  }
  if (!(mu > 0.0 && mu < 2.0)) throw Error(ErrorCode::kInvalidArgument, "mu must be in (0, 2)");
  if (taps < 1) throw Error(ErrorCode::kInvalidArgument, "taps must be >= 1");

  NlmsResult result;
  result.state.mu = mu;
  result.state.taps = taps;
  result.state.weights.assign(taps, 0.0);
  result.cleaned.sample_rate = primary.sample_rate;
  result.cleaned.samples.resize(primary.size());

  auto& w = result.state.weights;
  const auto& r = reference.samples;
  std::vector<double> window(taps, 0.0);  // window[j] = r[n - j]
  for (std::size_t n = 0; n < primary.size(); ++n) {
    std::copy_backward(window.begin(), window.end() - 1, window.end());
    window[0] = r[n];
    double y = 0.0;
    double energy = 0.0;
    for (std::size_t j = 0; j < taps; ++j) {
      y += w[j] * window[j];
      energy += window[j] * window[j];
    }
    const double e = primary.samples[n] - y;
    result.cleaned.samples[n] = e;
    const double step = mu / (result.state.eps + energy) * e;
    for (std::size_t j = 0; j < taps; ++j) w[j] += step * window[j];
  }
  return result;
}

NormalizeResult normalize(const AudioBuffer& buffer, NormalizeMode mode, double target) {
  if (!(target > 0.0)) throw Error(ErrorCode::kInvalidArgument, "normalization target must be > 0");
  if (mode == NormalizeMode::kPeak && target > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "peak target must be in (0, 1]");
  }
  NormalizeResult out{buffer, false};
  double peak = 0.0;
  double energy = 0.0;
  for (double s : buffer.samples) {
    peak = std::max(peak, std::abs(s));
    energy += s * s;
  }
  if (peak == 0.0) {
    out.silent = true;
    return out;
  }
  if (mode == NormalizeMode::kPeak) {
    const double scale = target / peak;
    // Peak samples are set to exactly +-target so a second pass scales by 1.0.
    for (double& s : out.buffer.samples) {
      s = std::abs(s) == peak ? std::copysign(target, s) : std::clamp(s * scale, -target, target);
    }
  } else {
    const double rms = std::sqrt(energy / static_cast<double>(buffer.size()));
    const double scale = target / rms;
    for (double& s : out.buffer.samples) s = std::clamp(s * scale, -1.0, 1.0);
  }
  return out;
}

std::size_t segment_length(double seg_len_s, int sample_rate) {
  if (!(seg_len_s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "segment length must be > 0");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(seg_len_s * sample_rate)));
}

SegmentSet segment(const AudioBuffer& buffer, double seg_len_s, PadPolicy pad_policy) {
  SegmentSet set;
  set.seg_len = segment_length(seg_len_s, buffer.sample_rate);
  set.pad_policy = pad_policy;
  set.source_length = buffer.size();
  const std::size_t full = buffer.size() / set.seg_len;
  const bool partial = buffer.size() % set.seg_len != 0;
  const std::size_t count = full + ((partial && pad_policy == PadPolicy::kZeroPadLast) ? 1 : 0);
  for (std::size_t i = 0; i < count; ++i) {
    AudioBuffer seg;
    seg.sample_rate = buffer.sample_rate;
    seg.samples.assign(set.seg_len, 0.0);
    const std::size_t begin = i * set.seg_len;
    const std::size_t end = std::min(buffer.size(), begin + set.seg_len);
    std::copy(buffer.samples.begin() + static_cast<std::ptrdiff_t>(begin),
              buffer.samples.begin() + static_cast<std::ptrdiff_t>(end), seg.samples.begin());
    set.segments.push_back(std::move(seg));
  }
  return set;
}

AudioBuffer concatenate(const SegmentSet& set) {
  AudioBuffer out;
  if (!set.segments.empty()) out.sample_rate = set.segments.front().sample_rate;
  for (const auto& s : set.segments) out.samples.insert(out.samples.end(), s.samples.begin(), s.samples.end());
  if (out.samples.size() > set.source_length) out.samples.resize(set.source_length);
  return out;
}

PreprocessResult preprocess_clip(const AudioBuffer& clip, const std::optional<AudioBuffer>& reference,
                                 const PreprocessParams& params) {
  const NoiseProfile profile = estimate_noise_profile(clip, params.noise_lead_ms, params.subtraction.frame_len,
                                                      params.subtraction.n_fft);
  AudioBuffer denoised = spectral_subtract(clip, profile, params.subtraction);
  PreprocessResult result;
  if (reference) {
    denoised = nlms_cancel(denoised, *reference, params.nlms_mu, params.nlms_taps).cleaned;
    result.adaptive_filter_applied = true;
  }
  NormalizeResult normalized = normalize(denoised, params.norm_mode, params.norm_target);
  result.silent = normalized.silent;
  result.segments = segment(normalized.buffer, params.seg_len_s, params.pad_policy);
  return result;
}

}  // namespace audioad
