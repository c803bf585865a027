#include "audioad/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <variant>

#include <CLI11.hpp>

#include "audioad/error.hpp"
#include "audioad/eval.hpp"
#include "audioad/parallel.hpp"
#include "audioad/text.hpp"

namespace audioad::cli {
namespace {

namespace fs = std::filesystem;

std::string resolve(const std::string& base_file, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute()) return p.string();
  return (fs::path(base_file).parent_path() / p).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + dir + ": " + ec.message());
}

AudioBuffer read_at_rate(const std::string& path, int rate) {
  AudioBuffer b = read_wav(path);
  return b.sample_rate == rate ? b : resample_linear(b, rate);
}

std::string segment_name(const std::string& clip_id, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_seg%03zu", index);
  return clip_id + buf;
}

struct SegmentRow {
  std::string clip_id;
  std::size_t index = 0;
  std::string path;
  std::string label;
};

std::vector<SegmentRow> read_segment_manifest(const std::string& path) {
  const auto lines = split_lines(read_text_file(path));
  if (lines.empty() || lines[0] != "clip_id,segment_index,path,label") {
    throw Error(ErrorCode::kConfigError, path + ": header must be clip_id,segment_index,path,label");
  }
  std::vector<SegmentRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv_line(lines[i]);
    if (cells.size() != 4) throw Error(ErrorCode::kConfigError, path + ": row " + std::to_string(i) + " malformed");
    rows.push_back({cells[0], static_cast<std::size_t>(parse_double(cells[1])), cells[2], cells[3]});
  }
  return rows;
}

}  // namespace

void synth(const Context& ctx, const std::string& out_dir) {
  ctx.config.validate();
  generate_corpus(ctx.config.corpus_spec(), out_dir, ctx.threads);
}

std::string preprocess(const Context& ctx, const std::string& manifest, const std::string& out_dir) {
  ctx.config.validate();
  auto rows = parse_manifest(read_text_file(manifest));
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ManifestRow& a, const ManifestRow& b) { return a.clip_id < b.clip_id; });
  ensure_dir((fs::path(out_dir) / "segments").string());
  const PreprocessParams params = ctx.config.preprocess_params();
  const int rate = ctx.config.sample_rate;

  std::vector<std::vector<SegmentRow>> produced(rows.size());
  parallel_for(rows.size(), ctx.threads, [&](std::size_t i) {
    const auto& row = rows[i];
    const AudioBuffer clip = read_at_rate(resolve(manifest, row.path), rate);
    std::optional<AudioBuffer> reference;
    if (!row.reference.empty()) reference = read_at_rate(resolve(manifest, row.reference), rate);
    const PreprocessResult result = preprocess_clip(clip, reference, params);
    for (std::size_t s = 0; s < result.segments.segments.size(); ++s) {
      const std::string rel = "segments/" + segment_name(row.clip_id, s) + ".wav";
      write_wav(result.segments.segments[s], (fs::path(out_dir) / rel).string());
      produced[i].push_back({row.clip_id, s, rel, row.label});
    }
  });

  std::string csv = "clip_id,segment_index,path,label\n";
  for (const auto& clip_rows : produced) {
    for (const auto& r : clip_rows) csv += r.clip_id + "," + std::to_string(r.index) + "," + r.path + "," + r.label + "\n";
  }
  const std::string out_manifest = (fs::path(out_dir) / "segments.csv").string();
  write_text_file(out_manifest, csv);
  return out_manifest;
}

void extract(const Context& ctx, const std::string& segment_manifest, const std::string& out_csv) {
  ctx.config.validate();
  const auto rows = read_segment_manifest(segment_manifest);
  const MfccConfig mfcc_cfg = ctx.config.mfcc_config();
  FeatureSet set;
  set.names = feature_schema(mfcc_cfg.n_coeffs);
  for (const auto& r : rows) {
    if (std::find(set.class_names.begin(), set.class_names.end(), r.label) == set.class_names.end()) {
      set.class_names.push_back(r.label);
    }
  }
  set.vectors.resize(rows.size());
  parallel_for(rows.size(), ctx.threads, [&](std::size_t i) {
    const auto& r = rows[i];
    const AudioBuffer seg = read_at_rate(resolve(segment_manifest, r.path), ctx.config.sample_rate);
    FeatureVector fv = extract_clip_features(seg, mfcc_cfg);
    fv.clip_id = segment_name(r.clip_id, r.index);
    fv.label = static_cast<int>(std::find(set.class_names.begin(), set.class_names.end(), r.label) -
                                set.class_names.begin());
    set.vectors[i] = std::move(fv);
  });
  write_feature_csv(set, out_csv);
}

void split(const Context& ctx, const std::string& features_csv, const std::string& train_csv,
           const std::string& test_csv) {
  ctx.config.validate();
  const FeatureSet data = read_feature_csv(features_csv);
  const TrainTestSplit parts = stratified_split(data, ctx.config.test_frac, ctx.config.seed);
  write_feature_csv(parts.train, train_csv);
  write_feature_csv(parts.test, test_csv);
}

void train(const Context& ctx, const std::string& train_csv, const std::string& model_dir) {
  ctx.config.validate();
  const FeatureSet data = read_feature_csv(train_csv);
  ensure_dir(model_dir);
  const auto echo = ctx.config.echo();
  RandomForest forest = train_forest(data, ctx.config.forest_params(ctx.threads), ctx.config.seed);
  LinearSvm svm = train_svm(data, ctx.config.svm_params(), ctx.config.seed);
  save_model(forest, (fs::path(model_dir) / "forest.json").string(), echo);
  save_model(svm, (fs::path(model_dir) / "svm.json").string(), echo);
  const EnsembleModel ensemble = make_ensemble(
      {{std::move(forest), ctx.config.ensemble_forest_weight}, {std::move(svm), ctx.config.ensemble_svm_weight}});
  save_model(ensemble, (fs::path(model_dir) / "ensemble.json").string(), echo);
}

namespace {

std::string kind_name(const AnyModel& m) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DecisionTree>) return "decision_tree";
        else if constexpr (std::is_same_v<T, RandomForest>) return "random_forest";
        else if constexpr (std::is_same_v<T, LinearSvm>) return "linear_svm";
        else return "ensemble";
      },
      m);
}

ConfusionMatrix score(const AnyModel& model, const FeatureSet& test) {
  std::vector<int> predicted;
  predicted.reserve(test.size());
  for (const auto& v : test.vectors) predicted.push_back(argmax_class(predict_proba(model, v)));
  ConfusionMatrix cm = confusion_matrix(test.labels(), predicted, schema_of(model).class_names.size());
  cm.class_names = schema_of(model).class_names;
  return cm;
}

}  // namespace

void evaluate(const Context& ctx, const std::string& model_path, const std::string& test_csv,
              const std::string& report_path, const std::optional<std::string>& confusion_csv) {
  ctx.config.validate();
  const AnyModel model = load_model(model_path);
  const ModelSchema schema = schema_of(model);
  const FeatureSet test = read_feature_csv(test_csv, schema.class_names);
  if (test.class_names.size() != schema.class_names.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "label '" + test.class_names[schema.class_names.size()] +
                                                "' is not a class of the model");
  }
  const auto& want = schema.feature_names;
  for (std::size_t i = 0; i < std::max(want.size(), test.names.size()); ++i) {
    const std::string got = i < test.names.size() ? test.names[i] : "<missing>";
    const std::string exp = i < want.size() ? want[i] : "<none>";
    if (got != exp) {
      throw Error(ErrorCode::kSchemaMismatch, "first mismatched column " + std::to_string(i + 2) + ": got '" + got +
                                                  "', model expects '" + exp + "'");
    }
  }

  EvaluationReport report = make_report(kind_name(model), score(model, test), ctx.config.seed, ctx.config.echo());
  const RandomForest* forest = std::get_if<RandomForest>(&model);
  if (const auto* ensemble = std::get_if<EnsembleModel>(&model)) {
    for (const auto& member : ensemble->members) {
      const AnyModel m = std::visit([](const auto& v) -> AnyModel { return v; }, member.model);
      const Metrics mm = compute_metrics(score(m, test));
      report.comparison.push_back({kind_name(m), mm.accuracy, mm.macro_precision, mm.macro_recall});
      if (forest == nullptr) forest = std::get_if<RandomForest>(&member.model);
    }
    report.comparison.push_back(
        {"ensemble", report.metrics.accuracy, report.metrics.macro_precision, report.metrics.macro_recall});
  }
  if (forest != nullptr) {
    FeatureImportance imp = feature_importance(*forest);
    if (imp.ranking.size() > 10) imp.ranking.resize(10);
    report.importance_top10 = imp.ranking;
    report.importance_no_splits = imp.no_splits;
  }
  emit_report(report, report_path);
  if (confusion_csv) write_text_file(*confusion_csv, confusion_to_csv(report.confusion));
}

void pipeline(const Context& ctx, const std::string& out_dir) {
  ctx.config.validate();
  const fs::path root(out_dir);
  ensure_dir(out_dir);
  const std::string corpus = (root / "corpus").string();
  synth(ctx, corpus);
  const std::string segments = preprocess(ctx, (root / "corpus" / "manifest.csv").string(), (root / "preprocessed").string());
  const std::string features = (root / "features.csv").string();
  extract(ctx, segments, features);
  const std::string train_csv = (root / "train.csv").string();
  const std::string test_csv = (root / "test.csv").string();
  split(ctx, features, train_csv, test_csv);
  train(ctx, train_csv, (root / "models").string());
  evaluate(ctx, (root / "models" / "ensemble.json").string(), test_csv, (root / "report.json").string(),
           (root / "confusion.csv").string());
}

void render(const Context& ctx, const std::string& clip, RenderKind kind, const std::string& out) {
  ctx.config.validate();
  const AudioBuffer audio = read_at_rate(clip, ctx.config.sample_rate);
  const auto& cfg = ctx.config;
  if (kind == RenderKind::kWaveform) {
    std::string csv = "time_s,amplitude\n";
    for (std::size_t i = 0; i < audio.size(); ++i) {
      csv += format_double(static_cast<double>(i) / audio.sample_rate) + "," + format_double(audio.samples[i]) + "\n";
    }
    write_text_file(out, csv);
    return;
  }
  const FrameMatrix frames = frame_signal(audio, cfg.frame_len, cfg.hop, true, true);
  const Spectrogram power = power_spectrogram(frames, cfg.n_fft, SpectrumScale::kPower);
  const std::size_t nb = power.num_bins();
  // dB relative to a full-scale bin-aligned sinusoid: |X| = sum(w) / 2.
  const auto window = hann_window(cfg.frame_len);
  const double full_scale = std::pow(std::accumulate(window.begin(), window.end(), 0.0) / 2.0, 2);
  auto to_db = [&](double p) { return 10.0 * std::log10(p / full_scale + kLogFloor); };
  if (kind == RenderKind::kSpectrum) {
    std::string csv = "freq_hz,power_db\n";
    for (std::size_t k = 0; k < nb; ++k) {
      double mean = 0.0;
      for (std::size_t f = 0; f < power.num_frames; ++f) mean += power.row(f)[k];
      mean /= static_cast<double>(power.num_frames);
      csv += format_double(power.bin_hz(k)) + "," + format_double(to_db(mean)) + "\n";
    }
    write_text_file(out, csv);
    return;
  }
  // Binary PGM: x = frame, y = bin with bin 0 on the bottom row; dB in
  // [-80, 0] maps linearly onto [0, 255].
  const std::size_t width = power.num_frames;
  const std::size_t height = nb;
  std::string pgm = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  const std::size_t header = pgm.size();
  pgm.resize(header + width * height);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t bin = height - 1 - y;
    for (std::size_t x = 0; x < width; ++x) {
      const double db = to_db(power.row(x)[bin]);
      const double level = std::clamp((db + 80.0) / 80.0, 0.0, 1.0);
      pgm[header + y * width + x] = static_cast<char>(static_cast<unsigned char>(std::lround(level * 255.0)));
    }
  }
  write_text_file(out, pgm);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Audio anomaly detection pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  app.add_option("--config", config_path, "Pipeline config file (JSON); default from $AUDIOAD_CONFIG");
  app.add_option("--set", overrides, "Override a config key: --set key=value (repeatable)");
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--threads", threads, "Worker threads (0 = all cores); default from $AUDIOAD_THREADS");

  std::string out_path;
  std::string in_path;
  std::optional<std::size_t> n_per_class;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic two-class corpus");
  synth_cmd->add_option("--out", out_path, "Output directory")->required();
  synth_cmd->add_option("--n", n_per_class, "Clips per class");

  std::string manifest;
  auto* pre_cmd = app.add_subcommand("preprocess", "Noise reduction, normalization, segmentation");
  pre_cmd->add_option("--manifest", manifest, "Clip manifest CSV")->required();
  pre_cmd->add_option("--out", out_path, "Output directory")->required();

  auto* ext_cmd = app.add_subcommand("extract", "Extract per-segment features");
  ext_cmd->add_option("--segments", in_path, "Segment manifest CSV")->required();
  ext_cmd->add_option("--out", out_path, "Feature CSV to write")->required();

  std::string train_out;
  std::string test_out;
  auto* split_cmd = app.add_subcommand("split", "Stratified train/test split of a feature CSV");
  split_cmd->add_option("--features", in_path, "Feature CSV")->required();
  split_cmd->add_option("--train", train_out, "Train CSV to write")->required();
  split_cmd->add_option("--test", test_out, "Test CSV to write")->required();

  auto* train_cmd = app.add_subcommand("train", "Train forest, SVM and ensemble");
  train_cmd->add_option("--features", in_path, "Training feature CSV")->required();
  train_cmd->add_option("--out", out_path, "Model directory")->required();

  std::string model_path;
  std::optional<std::string> confusion_csv;
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a model file on a feature CSV");
  eval_cmd->add_option("--model", model_path, "Model file")->required();
  eval_cmd->add_option("--features", in_path, "Test feature CSV")->required();
  eval_cmd->add_option("--out", out_path, "Report file")->required();
  eval_cmd->add_option("--confusion-csv", confusion_csv, "Also write the confusion matrix as CSV");

  auto* pipe_cmd = app.add_subcommand("pipeline", "synth -> preprocess -> extract -> split -> train -> evaluate");
  pipe_cmd->add_option("--out", out_path, "Output directory")->required();
  pipe_cmd->add_option("--n", n_per_class, "Clips per class");

  std::string kind_text;
  auto* render_cmd = app.add_subcommand("render", "Waveform CSV, spectrum CSV or spectrogram PGM of one clip");
  render_cmd->add_option("--clip", in_path, "WAV file")->required();
  render_cmd->add_option("--kind", kind_text, "waveform | spectrogram | spectrum")
      ->required()
      ->check(CLI::IsMember({"waveform", "spectrogram", "spectrum"}));
  render_cmd->add_option("--out", out_path, "Output file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    Context ctx;
    if (config_path.empty()) {
      if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') config_path = env;
    }
    if (!config_path.empty()) ctx.config = load_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::kConfigError, "--set expects key=value, got '" + kv + "'");
      ctx.config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) ctx.config.seed = *seed;
    if (n_per_class) ctx.config.synth_n_per_class = *n_per_class;
    if (threads) {
      ctx.threads = *threads;
    } else if (const char* env = std::getenv(kThreadsEnv); env != nullptr && *env != '\0') {
      try {
        ctx.threads = static_cast<std::size_t>(std::stoul(env));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kConfigError, std::string(kThreadsEnv) + " must be a non-negative integer");
      }
    }
    ctx.config.validate();

    if (*synth_cmd) synth(ctx, out_path);
    else if (*pre_cmd) preprocess(ctx, manifest, out_path);
    else if (*ext_cmd) extract(ctx, in_path, out_path);
    else if (*split_cmd) split(ctx, in_path, train_out, test_out);
    else if (*train_cmd) train(ctx, in_path, out_path);
    else if (*eval_cmd) evaluate(ctx, model_path, in_path, out_path, confusion_csv);
    else if (*pipe_cmd) pipeline(ctx, out_path);
    else if (*render_cmd) {
      const RenderKind kind = kind_text == "waveform"    ? RenderKind::kWaveform
                              : kind_text == "spectrum" ? RenderKind::kSpectrum
                                                        : RenderKind::kSpectrogram;
      render(ctx, in_path, kind, out_path);
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return (e.code() == ErrorCode::kConfigError || e.code() == ErrorCode::kSchemaMismatch) ? kExitConfig
                                                                                            : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace audioad::cli
