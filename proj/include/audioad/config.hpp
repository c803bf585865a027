#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "audioad/features.hpp"
#include "audioad/models.hpp"
#include "audioad/preprocess.hpp"
#include "audioad/synthgen.hpp"

namespace audioad {

inline constexpr int kConfigVersion = 1;

// Every tunable of the pipeline. Loaded from a flat JSON object whose keys
// match the field names below; unknown keys are rejected.
struct PipelineConfig {
  int sample_rate = kDefaultSampleRate;
  std::size_t frame_len = kDefaultFrameLen;
  std::size_t hop = kDefaultHop;
  std::size_t n_fft = kDefaultNFft;

  double noise_lead_ms = 250.0;
  double ss_alpha = 2.0;
  double ss_beta = 0.01;
  double nlms_mu = 0.5;
  std::size_t nlms_taps = 32;
  std::string norm_mode = "peak";
  double norm_target = 0.99;
  double seg_len_s = 1.0;
  std::string seg_pad = "zero-pad-last";

  std::size_t n_mels = 26;
  std::size_t n_coeffs = 13;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 = sample_rate / 2
  double pre_emphasis = 0.97;

  std::size_t forest_trees = 100;
  std::size_t forest_mtry = 0;  // 0 = round(sqrt(n_features))
  std::size_t tree_max_depth = 0;
  std::size_t tree_min_samples_leaf = 1;
  double svm_lambda = 0.01;
  std::size_t svm_epochs = 50;
  double ensemble_forest_weight = 0.5;
  double ensemble_svm_weight = 0.5;

  std::uint64_t seed = 42;
  double test_frac = 0.3;

  std::size_t synth_n_per_class = 100;
  double synth_clip_s = 1.0;
  double synth_lead_s = 0.25;
  double synth_snr_db = 20.0;
  double synth_jitter_hz = 3.0;

  // Throws Error(kConfigError) naming the key and the violated bound.
  void validate() const;

  // Sets one key from its textual value.
  void set(const std::string& key, const std::string& value);

  // All keys (plus format_version) rendered as text, sorted by key.
  std::map<std::string, std::string> echo() const;

  PreprocessParams preprocess_params() const;
  MfccConfig mfcc_config() const;
  ForestParams forest_params(std::size_t threads) const;
  SvmParams svm_params() const;
  CorpusSpec corpus_spec() const;
};

PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::string& path);
std::string render_config(const PipelineConfig& config);

}  // namespace audioad
