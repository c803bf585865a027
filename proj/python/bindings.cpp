#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <iostream>
#include <sstream>

#include "audioad/audio_io.hpp"
#include "audioad/cli.hpp"
#include "audioad/dsp.hpp"
#include "audioad/error.hpp"
#include "audioad/eval.hpp"
#include "audioad/features.hpp"
#include "audioad/models.hpp"
#include "audioad/preprocess.hpp"
#include "audioad/synthgen.hpp"

namespace py = pybind11;
using namespace audioad;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

AudioBuffer to_buffer(const Array& samples, int sample_rate) {
  if (samples.ndim() != 1) throw py::value_error("samples must be one-dimensional");
  AudioBuffer b;
  b.sample_rate = sample_rate;
  b.samples.assign(samples.data(), samples.data() + samples.size());
  return b;
}

Array to_array(const std::vector<double>& v) {
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array to_array(const std::vector<double>& data, std::size_t rows, std::size_t cols) {
  Array out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

FeatureSet to_feature_set(const Array& x, const std::vector<int>& y, const std::vector<std::string>& feature_names,
                          const std::vector<std::string>& class_names) {
  if (x.ndim() != 2) throw py::value_error("X must be two-dimensional");
  const auto rows = static_cast<std::size_t>(x.shape(0));
  const auto cols = static_cast<std::size_t>(x.shape(1));
  if (rows != y.size()) throw py::value_error("X and y differ in length");
  FeatureSet set;
  set.class_names = class_names;
  set.names = feature_names;
  if (set.names.empty()) {
    for (std::size_t j = 0; j < cols; ++j) set.names.push_back("f" + std::to_string(j));
  }
  if (set.names.size() != cols) throw py::value_error("feature_names length differs from X columns");
  for (std::size_t i = 0; i < rows; ++i) {
    FeatureVector v;
    v.names = set.names;
    v.values.assign(x.data() + i * cols, x.data() + (i + 1) * cols);
    v.label = y[i];
    v.clip_id = std::to_string(i);
    set.vectors.push_back(std::move(v));
  }
  return set;
}

// Held by value so pybind11 binds it as a class rather than converting the
// variant to whichever alternative is active.
struct Model {
  AnyModel model;
};

Array proba_matrix(const Model& m, const Array& x) {
  const AnyModel& model = m.model;
  if (x.ndim() != 2) throw py::value_error("X must be two-dimensional");
  const auto rows = static_cast<std::size_t>(x.shape(0));
  const auto cols = static_cast<std::size_t>(x.shape(1));
  if (cols != schema_of(model).feature_names.size()) throw py::value_error("X has the wrong number of columns");
  const std::size_t k = schema_of(model).class_names.size();
  std::vector<double> out;
  out.reserve(rows * k);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto p = predict_proba(model, std::span<const double>(x.data() + i * cols, cols));
    out.insert(out.end(), p.begin(), p.end());
  }
  return to_array(out, rows, k);
}

}  // namespace

PYBIND11_MODULE(_audioad, m) {
  m.doc() = "Audio anomaly detection pipeline: preprocessing, features, classical models, evaluation";

  static py::exception<Error> error_type(m, "AudioadError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error_type(e.what());
    }
  });

  m.def("read_wav", [](const std::string& path) {
    const AudioBuffer b = read_wav(path);
    return py::make_tuple(to_array(b.samples), b.sample_rate);
  }, py::arg("path"), "Returns (samples, sample_rate).");
  m.def("write_wav", [](const Array& samples, int sample_rate, const std::string& path) {
    write_wav(to_buffer(samples, sample_rate), path);
  }, py::arg("samples"), py::arg("sample_rate"), py::arg("path"));
  m.def("resample_linear", [](const Array& samples, int sample_rate, int target_rate) {
    return to_array(resample_linear(to_buffer(samples, sample_rate), target_rate).samples);
  }, py::arg("samples"), py::arg("sample_rate"), py::arg("target_rate"));

  m.def("hann_window", &hann_window, py::arg("n"));
  m.def("power_spectrogram", [](const Array& samples, int sample_rate, std::size_t frame_len, std::size_t hop,
                                std::size_t n_fft) {
    const auto s = power_spectrogram(frame_signal(to_buffer(samples, sample_rate), frame_len, hop, true), n_fft,
                                     SpectrumScale::kPower);
    return to_array(s.bins, s.num_frames, s.num_bins());
  }, py::arg("samples"), py::arg("sample_rate"), py::arg("frame_len") = kDefaultFrameLen,
     py::arg("hop") = kDefaultHop, py::arg("n_fft") = kDefaultNFft);

  m.def("spectral_subtract", [](const Array& samples, int sample_rate, double lead_ms, double alpha, double beta,
                                std::size_t frame_len, std::size_t n_fft) {
    const AudioBuffer b = to_buffer(samples, sample_rate);
    const NoiseProfile profile = estimate_noise_profile(b, lead_ms, frame_len, n_fft);
    return to_array(spectral_subtract(b, profile, {frame_len, n_fft, alpha, beta}).samples);
  }, py::arg("samples"), py::arg("sample_rate"), py::arg("lead_ms") = 250.0, py::arg("alpha") = 2.0,
     py::arg("beta") = 0.01, py::arg("frame_len") = kDefaultFrameLen, py::arg("n_fft") = kDefaultNFft);

  m.def("nlms_cancel", [](const Array& primary, const Array& reference, double mu, std::size_t taps) {
    const NlmsResult r = nlms_cancel(to_buffer(primary, kDefaultSampleRate), to_buffer(reference, kDefaultSampleRate),
                                     mu, taps);
    return py::make_tuple(to_array(r.cleaned.samples), to_array(r.state.weights));
  }, py::arg("primary"), py::arg("reference"), py::arg("mu") = 0.5, py::arg("taps") = 32,
     "Returns (cleaned, weights).");

  m.def("normalize", [](const Array& samples, const std::string& mode, double target) {
    const auto r = normalize(to_buffer(samples, kDefaultSampleRate),
                             mode == "rms" ? NormalizeMode::kRms : NormalizeMode::kPeak, target);
    return py::make_tuple(to_array(r.buffer.samples), r.silent);
  }, py::arg("samples"), py::arg("mode") = "peak", py::arg("target") = 0.99, "Returns (samples, silent).");

  m.def("mfcc", [](const Array& samples, int sample_rate, std::size_t n_mels, std::size_t n_coeffs) {
    MfccConfig cfg;
    cfg.n_mels = n_mels;
    cfg.n_coeffs = n_coeffs;
    const Matrix c = mfcc(to_buffer(samples, sample_rate), cfg);
    return to_array(c.data, c.rows, c.cols);
  }, py::arg("samples"), py::arg("sample_rate") = kDefaultSampleRate, py::arg("n_mels") = 26,
     py::arg("n_coeffs") = 13);

  m.def("zero_crossing_rate", [](const Array& frame) {
    return zero_crossing_rate(std::span<const double>(frame.data(), static_cast<std::size_t>(frame.size())));
  }, py::arg("frame"));
  m.def("spectral_centroid", [](const Array& power, int sample_rate, std::size_t n_fft) {
    const auto r = spectral_centroid(std::span<const double>(power.data(), static_cast<std::size_t>(power.size())),
                                     sample_rate, n_fft);
    return py::make_tuple(r.hz, r.silent);
  }, py::arg("power"), py::arg("sample_rate"), py::arg("n_fft"));

  m.def("feature_schema", &feature_schema, py::arg("n_coeffs") = 13);
  m.def("extract_features", [](const Array& samples, int sample_rate) {
    const FeatureVector fv = extract_clip_features(to_buffer(samples, sample_rate), MfccConfig{});
    py::dict out;
    for (std::size_t i = 0; i < fv.names.size(); ++i) out[py::str(fv.names[i])] = fv.values[i];
    return out;
  }, py::arg("samples"), py::arg("sample_rate") = kDefaultSampleRate);

  m.def("synthesize_clip", [](std::size_t index, std::size_t n_per_class, std::uint64_t seed) {
    CorpusSpec spec;
    spec.n_per_class = n_per_class;
    spec.seed = seed;
    const SynthClip c = synthesize_clip(spec, index);
    return py::make_tuple(to_array(c.audio.samples), c.audio.sample_rate, kCorpusClasses[c.label]);
  }, py::arg("index"), py::arg("n_per_class") = 100, py::arg("seed") = 42,
     "Returns (samples, sample_rate, label).");

  py::class_<Model>(m, "Model")
      .def("predict_proba", &proba_matrix, py::arg("X"))
      .def("predict", [](const Model& model, const Array& x) {
        const Array p = proba_matrix(model, x);
        const auto k = static_cast<std::size_t>(p.shape(1));
        std::vector<int> labels;
        for (py::ssize_t i = 0; i < p.shape(0); ++i) {
          labels.push_back(argmax_class(std::span<const double>(p.data() + i * k, k)));
        }
        return labels;
      }, py::arg("X"))
      .def_property_readonly("class_names", [](const Model& m) { return schema_of(m.model).class_names; })
      .def_property_readonly("feature_names", [](const Model& m) { return schema_of(m.model).feature_names; })
      .def_property_readonly("kind", [](const Model& m) {
        static const char* kinds[] = {"decision_tree", "random_forest", "linear_svm", "ensemble"};
        return std::string(kinds[m.model.index()]);
      })
      .def("feature_importance", [](const Model& m) {
        const auto* forest = std::get_if<RandomForest>(&m.model);
        if (forest == nullptr) throw py::type_error("feature importance needs a random forest");
        return feature_importance(*forest).ranking;
      })
      .def("to_json", [](const Model& m) { return serialize_model(m.model); })
      .def_static("from_json", [](const std::string& text) { return Model{deserialize_model(text)}; },
                  py::arg("text"));

  m.def("train_forest", [](const Array& x, const std::vector<int>& y, const std::vector<std::string>& class_names,
                           std::size_t n_trees, std::size_t mtry, std::uint64_t seed,
                           const std::vector<std::string>& feature_names) {
    ForestParams p;
    p.n_trees = n_trees;
    p.mtry = mtry;
    return Model{train_forest(to_feature_set(x, y, feature_names, class_names), p, seed)};
  }, py::arg("X"), py::arg("y"), py::arg("class_names"), py::arg("n_trees") = 100, py::arg("mtry") = 0,
     py::arg("seed") = 42, py::arg("feature_names") = std::vector<std::string>{});

  m.def("train_svm", [](const Array& x, const std::vector<int>& y, const std::vector<std::string>& class_names,
                        double lambda, std::size_t epochs, std::uint64_t seed,
                        const std::vector<std::string>& feature_names) {
    return Model{train_svm(to_feature_set(x, y, feature_names, class_names), {lambda, epochs}, seed)};
  }, py::arg("X"), py::arg("y"), py::arg("class_names"), py::arg("lambda_") = 0.01, py::arg("epochs") = 50,
     py::arg("seed") = 42, py::arg("feature_names") = std::vector<std::string>{});

  m.def("make_ensemble", [](const std::vector<std::pair<Model, double>>& members) {
    std::vector<EnsembleMember> ms;
    for (const auto& [holder, weight] : members) {
      ms.push_back({std::visit([](const auto& v) -> BaseModel {
                      using T = std::decay_t<decltype(v)>;
                      if constexpr (std::is_same_v<T, EnsembleModel>) throw py::type_error("ensembles cannot nest");
                      else return v;
                    }, holder.model),
                    weight});
    }
    return Model{make_ensemble(std::move(ms))};
  }, py::arg("members"));

  m.def("confusion_matrix", [](const std::vector<int>& y_true, const std::vector<int>& y_pred, std::size_t k) {
    const ConfusionMatrix cm = confusion_matrix(y_true, y_pred, k);
    std::vector<std::vector<std::size_t>> rows(k);
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t p = 0; p < k; ++p) rows[t].push_back(cm.at(t, p));
    }
    return rows;
  }, py::arg("y_true"), py::arg("y_pred"), py::arg("num_classes"));

  m.def("metrics", [](const std::vector<int>& y_true, const std::vector<int>& y_pred, std::size_t k) {
    const Metrics mt = compute_metrics(confusion_matrix(y_true, y_pred, k));
    py::dict out;
    out["accuracy"] = mt.accuracy;
    out["macro_precision"] = mt.macro_precision;
    out["macro_recall"] = mt.macro_recall;
    std::vector<double> precision;
    std::vector<double> recall;
    for (const auto& pc : mt.per_class) {
      precision.push_back(pc.precision);
      recall.push_back(pc.recall);
    }
    out["precision"] = precision;
    out["recall"] = recall;
    return out;
  }, py::arg("y_true"), py::arg("y_pred"), py::arg("num_classes"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs a CLI subcommand in-process; returns (exit_code, stdout, stderr).");
}
