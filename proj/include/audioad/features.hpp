#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "audioad/audio_io.hpp"
#include "audioad/dsp.hpp"

namespace audioad {

struct MfccConfig {
  std::size_t n_mels = 26;
  std::size_t n_coeffs = 13;
  double fmin = 0.0;
  std::optional<double> fmax;  // unset means sample_rate / 2
  double pre_emphasis = 0.97;
  std::size_t frame_len = kDefaultFrameLen;
  std::size_t hop = kDefaultHop;
  std::size_t n_fft = kDefaultNFft;

  double resolved_fmax(int sample_rate) const { return fmax.value_or(sample_rate / 2.0); }
  // Throws InvalidArgument when the configuration cannot be used at this rate.
  void validate(int sample_rate) const;
};

// Dense row-major matrix used for filterbanks and per-frame coefficients.
struct Matrix {
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : data(r * c, 0.0), rows(r), cols(c) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

AudioBuffer pre_emphasis(const AudioBuffer& buffer, double coeff);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Bin index of each of the n_mels + 2 mel-spaced points (two edges plus the
// filter centers): floor(hz * n_fft / sample_rate).
std::vector<std::size_t> mel_bin_points(const MfccConfig& config, int sample_rate);

// Peak-normalized triangular filters, n_mels x (n_fft/2 + 1).
Matrix mel_filterbank(const MfccConfig& config, int sample_rate);

// Orthonormal DCT-II basis truncated to n_coeffs rows.
Matrix dct_matrix(std::size_t n_coeffs, std::size_t n_inputs);

// num_frames x n_coeffs cepstra. Column c is coefficient c + 1.
Matrix mfcc(const AudioBuffer& buffer, const MfccConfig& config);

double zero_crossing_rate(std::span<const double> frame);

struct CentroidResult {
  double hz = 0.0;
  bool silent = false;
};

CentroidResult spectral_centroid(std::span<const double> power_bins, int sample_rate, std::size_t n_fft);

// Named per-clip feature values plus optional class label.
struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
  std::optional<int> label;
  std::string clip_id;
};

struct FeatureSet {
  std::vector<FeatureVector> vectors;
  std::vector<std::string> names;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return vectors.size(); }
  std::size_t num_features() const noexcept { return names.size(); }
  // Throws SchemaMismatch naming the first offending vector/column.
  void check_schema() const;
  std::vector<int> labels() const;
};

// MFCC_mean_1..n, MFCC_std_1..n, ZCR_mean, ZCR_std, Centroid_mean, Centroid_std.
std::vector<std::string> feature_schema(std::size_t n_coeffs = 13);

// Per-frame MFCC, ZCR (raw unwindowed frames) and spectral centroid
// (Hann-windowed raw frames), aggregated by mean and population std.
FeatureVector extract_clip_features(const AudioBuffer& segment, const MfccConfig& config);

// CSV: header clip_id,label,<names>; one row per vector; shortest
// round-trip decimal for every value.
std::string feature_set_to_csv(const FeatureSet& set);
void write_feature_csv(const FeatureSet& set, const std::string& path);

// Labels are mapped onto `class_names` when given (unknown labels are
// appended), otherwise classes are numbered in order of first appearance.
FeatureSet parse_feature_csv(const std::string& text, std::vector<std::string> class_names = {});
FeatureSet read_feature_csv(const std::string& path, std::vector<std::string> class_names = {});

}  // namespace audioad
