#include "audioad/config.hpp"

#include <functional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "audioad/error.hpp"
#include "audioad/text.hpp"

namespace audioad {
namespace {

struct Field {
  const char* key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::kConfigError, key + " " + why);
}

double to_real(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const Error&) {
    bad(key, "expects a number, got '" + v + "'");
  }
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  const double d = to_real(key, v);
  if (!(d >= 0.0) || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
    bad(key, "expects a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::uint64_t>(d);
}

template <typename T>
Field count_field(const char* key, T PipelineConfig::*member) {
  return {key, [key, member](PipelineConfig& c, const std::string& v) { c.*member = static_cast<T>(to_count(key, v)); },
          [member](const PipelineConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(const char* key, double PipelineConfig::*member) {
  return {key, [key, member](PipelineConfig& c, const std::string& v) { c.*member = to_real(key, v); },
          [member](const PipelineConfig& c) { return format_double(c.*member); }};
}

Field text_field(const char* key, std::string PipelineConfig::*member) {
  return {key, [member](PipelineConfig& c, const std::string& v) { c.*member = v; },
          [member](const PipelineConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  using C = PipelineConfig;
  static const std::vector<Field> all = {
      count_field("sample_rate", &C::sample_rate),
      count_field("frame_len", &C::frame_len),
      count_field("hop", &C::hop),
      count_field("n_fft", &C::n_fft),
      real_field("noise_lead_ms", &C::noise_lead_ms),
      real_field("ss_alpha", &C::ss_alpha),
      real_field("ss_beta", &C::ss_beta),
      real_field("nlms_mu", &C::nlms_mu),
      count_field("nlms_taps", &C::nlms_taps),
      text_field("norm_mode", &C::norm_mode),
      real_field("norm_target", &C::norm_target),
      real_field("seg_len_s", &C::seg_len_s),
      text_field("seg_pad", &C::seg_pad),
      count_field("n_mels", &C::n_mels),
      count_field("n_coeffs", &C::n_coeffs),
      real_field("fmin", &C::fmin),
      real_field("fmax", &C::fmax),
      real_field("pre_emphasis", &C::pre_emphasis),
      count_field("forest_trees", &C::forest_trees),
      count_field("forest_mtry", &C::forest_mtry),
      count_field("tree_max_depth", &C::tree_max_depth),
      count_field("tree_min_samples_leaf", &C::tree_min_samples_leaf),
      real_field("svm_lambda", &C::svm_lambda),
      count_field("svm_epochs", &C::svm_epochs),
      real_field("ensemble_forest_weight", &C::ensemble_forest_weight),
      real_field("ensemble_svm_weight", &C::ensemble_svm_weight),
      count_field("seed", &C::seed),
      real_field("test_frac", &C::test_frac),
      count_field("synth_n_per_class", &C::synth_n_per_class),
      real_field("synth_clip_s", &C::synth_clip_s),
      real_field("synth_lead_s", &C::synth_lead_s),
      real_field("synth_snr_db", &C::synth_snr_db),
      real_field("synth_jitter_hz", &C::synth_jitter_hz),
  };
  return all;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (key == "format_version") {
    if (value != std::to_string(kConfigVersion)) bad(key, "must be " + std::to_string(kConfigVersion));
    return;
  }
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  }
  throw Error(ErrorCode::kConfigError, "unknown config key '" + key + "'");
}

std::map<std::string, std::string> PipelineConfig::echo() const {
  std::map<std::string, std::string> out;
  out["format_version"] = std::to_string(kConfigVersion);
  for (const auto& f : fields()) out[f.key] = f.get(*this);
  return out;
}

void PipelineConfig::validate() const {
  if (sample_rate <= 0) bad("sample_rate", "must be > 0");
  if (frame_len < 2) bad("frame_len", "must be >= 2");
  if (hop < 1) bad("hop", "must be >= 1");
  if (!is_power_of_two(n_fft)) bad("n_fft", "must be a power of two");
  if (frame_len > n_fft) bad("frame_len", "must be <= n_fft");
  if (!(noise_lead_ms > 0.0)) bad("noise_lead_ms", "must be > 0");
  if (!(ss_alpha >= 0.0)) bad("ss_alpha", "must be >= 0");
  if (!(ss_beta >= 0.0 && ss_beta <= 1.0)) bad("ss_beta", "must be in [0, 1]");
  if (!(nlms_mu > 0.0 && nlms_mu < 2.0)) bad("nlms_mu", "must be in (0, 2)");
  if (nlms_taps < 1) bad("nlms_taps", "must be >= 1");
  if (norm_mode != "peak" && norm_mode != "rms") bad("norm_mode", "must be 'peak' or 'rms'");
  if (!(norm_target > 0.0)) bad("norm_target", "must be > 0");
  if (norm_mode == "peak" && norm_target > 1.0) bad("norm_target", "must be <= 1 in peak mode");
  if (!(seg_len_s > 0.0)) bad("seg_len_s", "must be > 0");
  if (seg_pad != "zero-pad-last" && seg_pad != "drop-last") bad("seg_pad", "must be 'zero-pad-last' or 'drop-last'");
  if (n_coeffs < 1 || n_coeffs > n_mels) bad("n_coeffs", "must be in [1, n_mels]");
  const double top = fmax == 0.0 ? sample_rate / 2.0 : fmax;
  if (!(fmin >= 0.0 && fmin < top)) bad("fmin", "must be in [0, fmax)");
  if (!(top <= sample_rate / 2.0)) bad("fmax", "must be <= sample_rate / 2");
  if (!(pre_emphasis >= 0.0 && pre_emphasis < 1.0)) bad("pre_emphasis", "must be in [0, 1)");
  try {
    mel_bin_points(mfcc_config(), sample_rate);
  } catch (const Error& e) {
    bad("n_mels", std::string("is invalid for this n_fft: ") + e.what());
  }
  if (forest_trees < 1) bad("forest_trees", "must be >= 1");
  if (forest_mtry > 2 * n_coeffs + 4) bad("forest_mtry", "must be <= the feature count");
  if (tree_min_samples_leaf < 1) bad("tree_min_samples_leaf", "must be >= 1");
  if (!(svm_lambda > 0.0)) bad("svm_lambda", "must be > 0");
  if (!(ensemble_forest_weight >= 0.0)) bad("ensemble_forest_weight", "must be >= 0");
  if (!(ensemble_svm_weight >= 0.0)) bad("ensemble_svm_weight", "must be >= 0");
  if (!(ensemble_forest_weight + ensemble_svm_weight > 0.0)) bad("ensemble weights", "must not both be 0");
  if (!(test_frac > 0.0 && test_frac < 1.0)) bad("test_frac", "must be in (0, 1)");
  if (synth_n_per_class < 1) bad("synth_n_per_class", "must be >= 1");
  if (!(synth_clip_s > 0.0)) bad("synth_clip_s", "must be > 0");
  if (!(synth_lead_s >= 0.0 && synth_lead_s < synth_clip_s)) bad("synth_lead_s", "must be in [0, synth_clip_s)");
  if (!(synth_jitter_hz >= 0.0)) bad("synth_jitter_hz", "must be >= 0");
}

PreprocessParams PipelineConfig::preprocess_params() const {
  PreprocessParams p;
  p.noise_lead_ms = noise_lead_ms;
  p.subtraction = {frame_len, n_fft, ss_alpha, ss_beta};
  p.nlms_mu = nlms_mu;
  p.nlms_taps = nlms_taps;
  p.norm_mode = norm_mode == "rms" ? NormalizeMode::kRms : NormalizeMode::kPeak;
  p.norm_target = norm_target;
  p.seg_len_s = seg_len_s;
  p.pad_policy = seg_pad == "drop-last" ? PadPolicy::kDropLast : PadPolicy::kZeroPadLast;
  return p;
}

MfccConfig PipelineConfig::mfcc_config() const {
  MfccConfig m;
  m.n_mels = n_mels;
  m.n_coeffs = n_coeffs;
  m.fmin = fmin;
  if (fmax != 0.0) m.fmax = fmax;
  m.pre_emphasis = pre_emphasis;
  m.frame_len = frame_len;
  m.hop = hop;
  m.n_fft = n_fft;
  return m;
}

ForestParams PipelineConfig::forest_params(std::size_t threads) const {
  ForestParams p;
  p.n_trees = forest_trees;
  p.mtry = forest_mtry;
  p.tree.max_depth = tree_max_depth;
  p.tree.min_samples_leaf = tree_min_samples_leaf;
  p.threads = threads;
  return p;
}

SvmParams PipelineConfig::svm_params() const { return {svm_lambda, svm_epochs}; }

CorpusSpec PipelineConfig::corpus_spec() const {
  CorpusSpec s;
  s.n_per_class = synth_n_per_class;
  s.seed = seed;
  s.sample_rate = sample_rate;
  s.clip_s = synth_clip_s;
  s.lead_s = synth_lead_s;
  s.snr_db = synth_snr_db;
  s.jitter_hz = synth_jitter_hz;
  return s;
}

PipelineConfig parse_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kConfigError, "config must be a JSON object");
  if (!j.contains("format_version")) throw Error(ErrorCode::kConfigError, "config lacks format_version");
  PipelineConfig c;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) c.set(key, value.get<std::string>());
    else if (value.is_number()) c.set(key, value.dump());
    else throw Error(ErrorCode::kConfigError, key + " must be a number or string");
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  return parse_config(text);
}

std::string render_config(const PipelineConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : config.echo()) {
    if (key == "norm_mode" || key == "seg_pad") j[key] = value;
    else j[key] = nlohmann::json::parse(value);
  }
  return j.dump(2) + "\n";
}

}  // namespace audioad
