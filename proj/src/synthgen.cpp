#include "audioad/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "audioad/error.hpp"
#include "audioad/parallel.hpp"
#include "audioad/rng.hpp"
#include "audioad/text.hpp"

namespace audioad {

void CorpusSpec::validate() const {
  if (n_per_class < 1) throw Error(ErrorCode::kConfigError, "n_per_class must be >= 1");
  if (!(clip_s > 0.0)) throw Error(ErrorCode::kConfigError, "clip_s must be > 0");
  if (!(lead_s >= 0.0 && lead_s < clip_s)) throw Error(ErrorCode::kConfigError, "lead_s must be in [0, clip_s)");
  if (sample_rate <= 0) throw Error(ErrorCode::kConfigError, "sample_rate must be > 0");
  if (!(f0_min_hz > 0.0 && f0_min_hz < f0_max_hz)) throw Error(ErrorCode::kConfigError, "need 0 < f0_min < f0_max");
  if (!(3.0 * f0_max_hz < sample_rate / 2.0)) throw Error(ErrorCode::kConfigError, "third harmonic above Nyquist");
  if (!(jitter_hz >= 0.0)) throw Error(ErrorCode::kConfigError, "jitter must be >= 0");
  if (!(wobble_min_hz > 0.0 && wobble_min_hz <= wobble_max_hz)) throw Error(ErrorCode::kConfigError, "bad wobble range");
  if (!(wobble_depth >= 0.0 && wobble_depth < 1.0)) throw Error(ErrorCode::kConfigError, "wobble_depth in [0, 1)");
  if (!(peak > 0.0 && peak <= 0.95)) throw Error(ErrorCode::kConfigError, "peak must be in (0, 0.95]");
}

std::string corpus_clip_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip_%04zu", index);
  return buf;
}

SynthClip synthesize_clip(const CorpusSpec& spec, std::size_t index) {
  spec.validate();
  if (index >= 2 * spec.n_per_class) throw Error(ErrorCode::kInvalidArgument, "clip index out of range");
  const bool anomalous = index >= spec.n_per_class;
  Rng rng = Rng::stream(spec.seed, index);

  const double sr = spec.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(spec.clip_s * sr));
  const auto lead = static_cast<std::size_t>(std::llround(spec.lead_s * sr));
  const std::size_t step = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(sr / 1000.0)));

  const double base_amp[3] = {1.0, 0.6, 0.4};
  double amp[3];
  for (int h = 0; h < 3; ++h) {
    const double tilt = anomalous ? std::pow(10.0, spec.tilt_db_per_octave * std::log2(h + 1.0) / 20.0) : 1.0;
    amp[h] = base_amp[h] * tilt;
  }

  double f0 = rng.uniform(spec.f0_min_hz, spec.f0_max_hz);
  const double wobble_hz = rng.uniform(spec.wobble_min_hz, spec.wobble_max_hz);
  const double wobble_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double start_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  std::vector<double> voiced(n, 0.0);
  double phase = start_phase;
  for (std::size_t i = lead; i < n; ++i) {
    if (anomalous && (i - lead) % step == 0 && i != lead) {
      f0 += spec.jitter_hz * rng.normal();
      // Reflect at the range edges.
      if (f0 < spec.f0_min_hz) f0 = 2.0 * spec.f0_min_hz - f0;
      if (f0 > spec.f0_max_hz) f0 = 2.0 * spec.f0_max_hz - f0;
      f0 = std::clamp(f0, spec.f0_min_hz, spec.f0_max_hz);
    }
    const double t = static_cast<double>(i - lead) / sr;
    const double env =
        anomalous ? 1.0 + spec.wobble_depth * std::sin(2.0 * std::numbers::pi * wobble_hz * t + wobble_phase) : 1.0;
    double s = 0.0;
    for (int h = 0; h < 3; ++h) s += amp[h] * std::sin((h + 1) * phase);
    voiced[i] = env * s;
    phase = std::fmod(phase + 2.0 * std::numbers::pi * f0 / sr, 2.0 * std::numbers::pi);
  }

  double energy = 0.0;
  for (std::size_t i = lead; i < n; ++i) energy += voiced[i] * voiced[i];
  const double rms = lead < n ? std::sqrt(energy / static_cast<double>(n - lead)) : 0.0;
  const double snr = anomalous ? spec.snr_db - spec.extra_noise_db : spec.snr_db;
  const double noise_std = rms * std::pow(10.0, -snr / 20.0);

  SynthClip clip;
  clip.clip_id = corpus_clip_id(index);
  clip.label = anomalous ? 1 : 0;
  clip.audio.sample_rate = spec.sample_rate;
  clip.clean.sample_rate = spec.sample_rate;
  clip.audio.samples.resize(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    clip.audio.samples[i] = voiced[i] + noise_std * rng.normal();
    peak = std::max(peak, std::abs(clip.audio.samples[i]));
  }
  const double scale = peak > 0.0 ? spec.peak / peak : 1.0;
  for (double& s : clip.audio.samples) s *= scale;
  clip.clean.samples = std::move(voiced);
  for (double& s : clip.clean.samples) s *= scale;
  return clip;
}

std::vector<ManifestRow> generate_corpus(const CorpusSpec& spec, const std::string& out_dir, std::size_t threads) {
  spec.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "clips", ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + out_dir + ": " + ec.message());

  const std::size_t total = 2 * spec.n_per_class;
  std::vector<ManifestRow> rows(total);
  parallel_for(total, threads, [&](std::size_t i) {
    const SynthClip clip = synthesize_clip(spec, i);
    const std::string rel = "clips/" + clip.clip_id + ".wav";
    write_wav(clip.audio, (fs::path(out_dir) / rel).string());
    rows[i] = {clip.clip_id, rel, kCorpusClasses[static_cast<std::size_t>(clip.label)], ""};
  });
  write_text_file((fs::path(out_dir) / "manifest.csv").string(), render_manifest(rows));
  return rows;
}

std::string render_manifest(const std::vector<ManifestRow>& rows) {
  const bool with_reference =
      std::any_of(rows.begin(), rows.end(), [](const ManifestRow& r) { return !r.reference.empty(); });
  std::string out = with_reference ? "clip_id,path,label,reference\n" : "clip_id,path,label\n";
  for (const auto& r : rows) {
    out += r.clip_id + "," + r.path + "," + r.label;
    if (with_reference) out += "," + r.reference;
    out += "\n";
  }
  return out;
}

std::vector<ManifestRow> parse_manifest(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(ErrorCode::kConfigError, "manifest is empty");
  const auto header = split_csv_line(lines[0]);
  const bool with_reference = header.size() == 4 && header[3] == "reference";
  if (header.size() < 3 || header[0] != "clip_id" || header[1] != "path" || header[2] != "label" ||
      (header.size() == 4 && !with_reference) || header.size() > 4) {
    throw Error(ErrorCode::kConfigError, "manifest header must be clip_id,path,label[,reference]");
  }
  std::vector<ManifestRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv_line(lines[i]);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kConfigError, "manifest row " + std::to_string(i) + " has " +
                                               std::to_string(cells.size()) + " cells");
    }
    rows.push_back({cells[0], cells[1], cells[2], with_reference ? cells[3] : ""});
  }
  return rows;
}

}  // namespace audioad
