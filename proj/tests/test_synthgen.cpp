#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "audioad/dsp.hpp"
#include "audioad/error.hpp"
#include "audioad/features.hpp"
#include "audioad/synthgen.hpp"
#include "audioad/text.hpp"

namespace fs = std::filesystem;
using namespace audioad;

namespace {

std::vector<char> bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Variance of the per-frame zero-crossing rate over the voiced component.
double zcr_variance(const AudioBuffer& voiced) {
  const auto frames = frame_signal(voiced, 400, 160, false);
  double sum = 0, sq = 0;
  for (std::size_t i = 0; i < frames.num_frames; ++i) {
    const double z = zero_crossing_rate(frames.row(i));
    sum += z;
    sq += z * z;
  }
  const double n = static_cast<double>(frames.num_frames);
  return sq / n - (sum / n) * (sum / n);
}

}  // namespace

TEST_CASE("corpus files and manifest") {
  CorpusSpec spec;
  spec.n_per_class = 4;
  const auto dir_a = fs::temp_directory_path() / "audioad_synth_a";
  const auto dir_b = fs::temp_directory_path() / "audioad_synth_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  const auto rows = generate_corpus(spec, dir_a.string());
  generate_corpus(spec, dir_b.string(), 3);
  REQUIRE(rows.size() == 8);
  CHECK(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.label == "normal"; }) == 4);
  const auto manifest = parse_manifest(read_text_file((dir_a / "manifest.csv").string()));
  REQUIRE(manifest.size() == 8);
  CHECK(read_text_file((dir_a / "manifest.csv").string()) == read_text_file((dir_b / "manifest.csv").string()));
  for (const auto& r : manifest) {
    CHECK(fs::exists(dir_a / r.path));
    CHECK(bytes_of(dir_a / r.path) == bytes_of(dir_b / r.path));
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("clips are independent of generation order") {
  CorpusSpec spec;
  spec.n_per_class = 10;
  const auto a = synthesize_clip(spec, 13);
  synthesize_clip(spec, 2);
  const auto b = synthesize_clip(spec, 13);
  CHECK(a.audio.samples == b.audio.samples);
  CHECK(a.label == 1);
  CHECK(synthesize_clip(spec, 9).label == 0);
  CHECK(a.clip_id == "clip_0013");
  CHECK(a.audio.size() == 16000);
}

TEST_CASE("samples stay within +-0.95") {
  CorpusSpec spec;
  spec.n_per_class = 20;
  for (std::size_t i = 0; i < 40; ++i) {
    for (double v : synthesize_clip(spec, i).audio.samples) {
      CHECK(std::abs(v) <= 0.95);
    }
  }
}

TEST_CASE("anomalous class has more f0 jitter") {
  CorpusSpec spec;
  spec.n_per_class = 30;
  double normal = 0, anomalous = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    const auto clip = synthesize_clip(spec, i);
    const auto lead = static_cast<std::size_t>(spec.lead_s * spec.sample_rate);
    const AudioBuffer voiced{{clip.clean.samples.begin() + lead, clip.clean.samples.end()}, spec.sample_rate};
    (clip.label == 0 ? normal : anomalous) += zcr_variance(voiced);
  }
  MESSAGE("mean ZCR variance normal " << normal / 30 << ", anomalous " << anomalous / 30);
  CHECK(anomalous > normal);
}

TEST_CASE("manifest parsing") {
  const std::vector<ManifestRow> rows = {{"a", "clips/a.wav", "normal", ""}, {"b", "/abs/b.wav", "anomalous", "ref.wav"}};
  const auto text = render_manifest(rows);
  const auto back = parse_manifest(text);
  REQUIRE(back.size() == 2);
  CHECK(back[1].reference == "ref.wav");
  CHECK(back[0].path == "clips/a.wav");
  CHECK_THROWS_AS(parse_manifest("id,file\n"), Error);
}

TEST_CASE("spec validation") {
  CorpusSpec spec;
  spec.n_per_class = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = CorpusSpec{};
  spec.clip_s = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
}
