#include "audioad/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>
#include <unordered_set>

#include "audioad/error.hpp"
#include "audioad/text.hpp"

namespace audioad {

void MfccConfig::validate(int sample_rate) const {
  const double top = resolved_fmax(sample_rate);
  if (n_coeffs < 1 || n_coeffs > n_mels) throw Error(ErrorCode::kInvalidArgument, "need 1 <= n_coeffs <= n_mels");
  if (!(fmin >= 0.0 && fmin < top && top <= sample_rate / 2.0)) {
    throw Error(ErrorCode::kInvalidArgument, "need 0 <= fmin < fmax <= sample_rate/2");
  }
  if (!(pre_emphasis >= 0.0 && pre_emphasis < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pre_emphasis must be in [0, 1)");
  }
  if (frame_len < 2 || hop < 1 || frame_len > n_fft) {
    throw Error(ErrorCode::kInvalidArgument, "need frame_len >= 2, hop >= 1, frame_len <= n_fft");
  }
  if (!is_power_of_two(n_fft)) throw Error(ErrorCode::kNFftNotPowerOfTwo, std::to_string(n_fft));
}

AudioBuffer pre_emphasis(const AudioBuffer& buffer, double coeff) {
  AudioBuffer out{std::vector<double>(buffer.size()), buffer.sample_rate};
  for (std::size_t n = 0; n < buffer.size(); ++n) {
    out.samples[n] = n == 0 ? buffer.samples[0] : buffer.samples[n] - coeff * buffer.samples[n - 1];
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::size_t> mel_bin_points(const MfccConfig& config, int sample_rate) {
  config.validate(sample_rate);
  const double lo = hz_to_mel(config.fmin);
  const double hi = hz_to_mel(config.resolved_fmax(sample_rate));
  const std::size_t count = config.n_mels + 2;
  std::vector<std::size_t> points(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double m = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    const double bin = std::floor(mel_to_hz(m) * static_cast<double>(config.n_fft) / sample_rate);
    points[i] = std::min(static_cast<std::size_t>(std::max(bin, 0.0)), config.n_fft / 2);
  }
  for (std::size_t i = 1; i < count; ++i) {
    if (points[i] <= points[i - 1]) {
      throw Error(ErrorCode::kDegenerateFilter, "mel points " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                                    " share bin " + std::to_string(points[i]) + " at n_fft " +
                                                    std::to_string(config.n_fft));
    }
  }
  return points;
}

Matrix mel_filterbank(const MfccConfig& config, int sample_rate) {
  const auto pts = mel_bin_points(config, sample_rate);
  Matrix fb(config.n_mels, config.n_fft / 2 + 1);
  for (std::size_t m = 0; m < config.n_mels; ++m) {
    const std::size_t left = pts[m];
    const std::size_t center = pts[m + 1];
    const std::size_t right = pts[m + 2];
    for (std::size_t k = left; k <= center; ++k) {
      fb(m, k) = static_cast<double>(k - left) / static_cast<double>(center - left);
    }
    for (std::size_t k = center + 1; k <= right; ++k) {
      fb(m, k) = static_cast<double>(right - k) / static_cast<double>(right - center);
    }
  }
  return fb;
}

Matrix dct_matrix(std::size_t n_coeffs, std::size_t n_inputs) {
  Matrix d(n_coeffs, n_inputs);
  const double n = static_cast<double>(n_inputs);
  for (std::size_t k = 0; k < n_coeffs; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t m = 0; m < n_inputs; ++m) {
      d(k, m) = scale * std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(m) + 0.5) / n);
    }
  }
  return d;
}

Matrix mfcc(const AudioBuffer& buffer, const MfccConfig& config) {
  config.validate(buffer.sample_rate);
  const Matrix fb = mel_filterbank(config, buffer.sample_rate);
  const Matrix dct = dct_matrix(config.n_coeffs, config.n_mels);
  const FrameMatrix frames =
      frame_signal(pre_emphasis(buffer, config.pre_emphasis), config.frame_len, config.hop, true, true);
  const Spectrogram power = power_spectrogram(frames, config.n_fft, SpectrumScale::kPower);

  Matrix out(frames.num_frames, config.n_coeffs);
  std::vector<double> logmel(config.n_mels);
  for (std::size_t f = 0; f < frames.num_frames; ++f) {
    const auto p = power.row(f);
    for (std::size_t m = 0; m < config.n_mels; ++m) {
      double e = 0.0;
      const auto weights = fb.row(m);
      for (std::size_t k = 0; k < p.size(); ++k) e += weights[k] * p[k];
      logmel[m] = std::log(e + kLogFloor);
    }
    for (std::size_t c = 0; c < config.n_coeffs; ++c) {
      const auto basis = dct.row(c);
      double acc = 0.0;
      // Rows c >= 1 sum to zero, so subtracting a constant leaves them
      // unchanged mathematically and makes a constant input map to exactly 0.
      const double offset = c == 0 ? 0.0 : logmel[0];
      for (std::size_t m = 0; m < config.n_mels; ++m) acc += basis[m] * (logmel[m] - offset);
      out(f, c) = acc;
    }
  }
  return out;
}

double zero_crossing_rate(std::span<const double> frame) {
  if (frame.size() < 2) throw Error(ErrorCode::kFrameTooShort, "zero-crossing rate needs >= 2 samples");
  // Exact zeros inherit the previous sign; leading zeros count as positive.
  bool positive = frame[0] >= 0.0;
  std::size_t changes = 0;
  for (std::size_t i = 1; i < frame.size(); ++i) {
    bool sign = positive;
    if (frame[i] > 0.0) sign = true;
    else if (frame[i] < 0.0) sign = false;
    if (sign != positive) ++changes;
    positive = sign;
  }
  return static_cast<double>(changes) / static_cast<double>(frame.size() - 1);
}

CentroidResult spectral_centroid(std::span<const double> power_bins, int sample_rate, std::size_t n_fft) {
  if (power_bins.size() != n_fft / 2 + 1) {
    throw Error(ErrorCode::kInvalidArgument, "expected n_fft/2 + 1 bins");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < power_bins.size(); ++k) {
    const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
    num += f * power_bins[k];
    den += power_bins[k];
  }
  if (den <= 0.0) return {0.0, true};
  return {num / den, false};
}

std::vector<std::string> feature_schema(std::size_t n_coeffs) {
  std::vector<std::string> names;
  for (std::size_t c = 1; c <= n_coeffs; ++c) names.push_back("MFCC_mean_" + std::to_string(c));
  for (std::size_t c = 1; c <= n_coeffs; ++c) names.push_back("MFCC_std_" + std::to_string(c));
  names.insert(names.end(), {"ZCR_mean", "ZCR_std", "Centroid_mean", "Centroid_std"});
  return names;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(var / static_cast<double>(v.size()));
  return r;
}

}  // namespace

FeatureVector extract_clip_features(const AudioBuffer& segment, const MfccConfig& config) {
  const Matrix cep = mfcc(segment, config);
  const FrameMatrix raw = frame_signal(segment, config.frame_len, config.hop, false, true);
  const FrameMatrix windowed = frame_signal(segment, config.frame_len, config.hop, true, true);
  const Spectrogram power = power_spectrogram(windowed, config.n_fft, SpectrumScale::kPower);

  const std::size_t frames = cep.rows;
  FeatureVector fv;
  fv.names = feature_schema(config.n_coeffs);
  fv.values.resize(fv.names.size());
  std::vector<double> column(frames);
  for (std::size_t c = 0; c < config.n_coeffs; ++c) {
    for (std::size_t f = 0; f < frames; ++f) column[f] = cep(f, c);
    const MeanStd ms = mean_std(column);
    fv.values[c] = ms.mean;
    fv.values[config.n_coeffs + c] = ms.std;
  }
  std::vector<double> zcr(frames);
  std::vector<double> centroid(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    zcr[f] = zero_crossing_rate(raw.row(f));
    centroid[f] = spectral_centroid(power.row(f), segment.sample_rate, config.n_fft).hz;
  }
  const std::size_t base = 2 * config.n_coeffs;
  const MeanStd z = mean_std(zcr);
  const MeanStd ct = mean_std(centroid);
  fv.values[base] = z.mean;
  fv.values[base + 1] = z.std;
  fv.values[base + 2] = ct.mean;
  fv.values[base + 3] = ct.std;
  return fv;
}

void FeatureSet::check_schema() const {
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw Error(ErrorCode::kSchemaMismatch, "duplicate feature name " + n);
  }
  for (const auto& v : vectors) {
    if (v.names != names) {
      for (std::size_t i = 0; i < std::max(v.names.size(), names.size()); ++i) {
        const std::string got = i < v.names.size() ? v.names[i] : "<missing>";
        const std::string want = i < names.size() ? names[i] : "<none>";
        if (got != want) {
          throw Error(ErrorCode::kSchemaMismatch,
                      "clip " + v.clip_id + " column " + std::to_string(i) + ": '" + got + "' != '" + want + "'");
        }
      }
    }
    if (v.values.size() != names.size()) {
      throw Error(ErrorCode::kSchemaMismatch, "clip " + v.clip_id + " has " + std::to_string(v.values.size()) +
                                                  " values for " + std::to_string(names.size()) + " names");
    }
    if (v.label && (*v.label < 0 || static_cast<std::size_t>(*v.label) >= class_names.size())) {
      throw Error(ErrorCode::kLabelOutOfRange, "clip " + v.clip_id);
    }
  }
}

std::vector<int> FeatureSet::labels() const {
  std::vector<int> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (!v.label) throw Error(ErrorCode::kInvalidArgument, "clip " + v.clip_id + " is unlabeled");
    out.push_back(*v.label);
  }
  return out;
}

std::string feature_set_to_csv(const FeatureSet& set) {
  std::string out = "clip_id,label";
  for (const auto& n : set.names) out += "," + n;
  out += "\n";
  for (const auto& v : set.vectors) {
    out += v.clip_id;
    out += ",";
    if (v.label) out += set.class_names.at(static_cast<std::size_t>(*v.label));
    for (double x : v.values) {
      out += ",";
      out += format_double(x);
    }
    out += "\n";
  }
  return out;
}

void write_feature_csv(const FeatureSet& set, const std::string& path) {
  write_text_file(path, feature_set_to_csv(set));
}

FeatureSet parse_feature_csv(const std::string& text, std::vector<std::string> class_names) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(ErrorCode::kSchemaMismatch, "feature CSV is empty");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "clip_id" || header[1] != "label") {
    throw Error(ErrorCode::kSchemaMismatch, "header must start with clip_id,label");
  }
  FeatureSet set;
  set.names.assign(header.begin() + 2, header.end());
  set.class_names = std::move(class_names);
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < set.class_names.size(); ++i) index[set.class_names[i]] = static_cast<int>(i);

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kSchemaMismatch, "row " + std::to_string(li) + " has " + std::to_string(cells.size()) +
                                                  " cells, header has " + std::to_string(header.size()));
    }
    FeatureVector v;
    v.clip_id = cells[0];
    v.names = set.names;
    if (!cells[1].empty()) {
      auto [it, inserted] = index.try_emplace(cells[1], static_cast<int>(set.class_names.size()));
      if (inserted) set.class_names.push_back(cells[1]);
      v.label = it->second;
    }
    v.values.reserve(set.names.size());
    for (std::size_t c = 2; c < cells.size(); ++c) {
      const double x = parse_double(cells[c]);
      if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidArgument, "non-finite value in row " + std::to_string(li));
      v.values.push_back(x);
    }
    set.vectors.push_back(std::move(v));
  }
  set.check_schema();
  return set;
}

FeatureSet read_feature_csv(const std::string& path, std::vector<std::string> class_names) {
  return parse_feature_csv(read_text_file(path), std::move(class_names));
}

}  // namespace audioad
