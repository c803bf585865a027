#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "audioad/audio_io.hpp"
#include "audioad/cli.hpp"
#include "audioad/text.hpp"

namespace fs = std::filesystem;
using namespace audioad;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("synth") {
  const auto dir = fresh_dir("audioad_cli_synth");
  const auto r = run({"--threads", "2", "synth", "--n", "100", "--seed", "42", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(count_lines(read_text_file((dir / "manifest.csv").string())) == 201);
  std::size_t wavs = 0;
  for (const auto& e : fs::directory_iterator(dir / "clips")) wavs += e.path().extension() == ".wav";
  CHECK(wavs == 200);

  const auto bad = run({"synth", "--n", "0", "--out", dir.string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("synth_n_per_class") != std::string::npos);
  CHECK(run({"synth"}).code == 2);
  CHECK(run({"--set", "nonsense=1", "synth", "--out", dir.string()}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("preprocess and extract") {
  const auto dir = fresh_dir("audioad_cli_pre");
  AudioBuffer clip;
  for (int i = 0; i < 40000; ++i) {
    clip.samples.push_back(i < 4000 ? 0.01 * std::sin(1.7 * i) : 0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 16000.0));
  }
  write_wav(clip, dir / "long.wav");
  write_text_file((dir / "manifest.csv").string(), "clip_id,path,label\nlong,long.wav,normal\n");

  REQUIRE(run({"preprocess", "--manifest", (dir / "manifest.csv").string(), "--out", (dir / "seg").string()}).code == 0);
  const auto segs = read_text_file((dir / "seg" / "segments.csv").string());
  CHECK(segs.rfind("clip_id,segment_index,path,label\n", 0) == 0);
  CHECK(count_lines(segs) == 4);
  const auto first = read_wav(dir / "seg" / "segments" / "long_seg000.wav");
  CHECK(first.size() == 16000);

  REQUIRE(run({"extract", "--segments", (dir / "seg" / "segments.csv").string(), "--out", (dir / "f.csv").string()}).code == 0);
  const auto csv = read_text_file((dir / "f.csv").string());
  CHECK(csv.substr(0, csv.find('\n')).find("MFCC_mean_12") != std::string::npos);
  CHECK(count_lines(csv) == 4);
  REQUIRE(run({"extract", "--segments", (dir / "seg" / "segments.csv").string(), "--out", (dir / "g.csv").string()}).code == 0);
  CHECK(read_text_file((dir / "g.csv").string()) == csv);

  write_text_file((dir / "missing.csv").string(), "clip_id,path,label\nghost,ghost.wav,normal\n");
  const auto missing = run({"preprocess", "--manifest", (dir / "missing.csv").string(), "--out", (dir / "seg2").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("ghost.wav") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("render") {
  const auto dir = fresh_dir("audioad_cli_render");
  write_wav({std::vector<double>(16000, 0.0), 16000}, dir / "silence.wav");
  AudioBuffer tone;
  for (int i = 0; i < 16000; ++i) tone.samples.push_back(0.5 * std::cos(2.0 * std::numbers::pi * 64.0 * 16000.0 / 512.0 * i / 16000.0));
  write_wav(tone, dir / "tone.wav");

  REQUIRE(run({"render", "--clip", (dir / "silence.wav").string(), "--kind", "waveform", "--out", (dir / "w.csv").string()}).code == 0);
  const auto wave = read_text_file((dir / "w.csv").string());
  CHECK(wave.rfind("time_s,amplitude\n", 0) == 0);
  CHECK(count_lines(wave) == 16001);

  REQUIRE(run({"render", "--clip", (dir / "silence.wav").string(), "--kind", "spectrogram", "--out", (dir / "s.pgm").string()}).code == 0);
  auto read_pgm = [](const fs::path& p, std::size_t& w, std::size_t& h) {
    std::ifstream in(p, std::ios::binary);
    std::string magic;
    int maxval;
    in >> magic >> w >> h >> maxval;
    in.get();
    CHECK(magic == "P5");
    CHECK(maxval == 255);
    std::vector<unsigned char> px(w * h);
    in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
    CHECK(in.gcount() == static_cast<std::streamsize>(px.size()));
    return px;
  };
  std::size_t w = 0, h = 0;
  for (unsigned char v : read_pgm(dir / "s.pgm", w, h)) CHECK(v == 0);
  CHECK(h == 257);

  REQUIRE(run({"render", "--clip", (dir / "tone.wav").string(), "--kind", "spectrogram", "--out", (dir / "t.pgm").string()}).code == 0);
  const auto px = read_pgm(dir / "t.pgm", w, h);
  // Row r from the top holds bin h - 1 - r.
  std::size_t best_row = 0;
  double best = -1;
  for (std::size_t r = 0; r < h; ++r) {
    double sum = 0;
    for (std::size_t c = 0; c < w; ++c) sum += px[r * w + c];
    if (sum > best) {
      best = sum;
      best_row = r;
    }
  }
  CHECK(h - 1 - best_row == 64);

  REQUIRE(run({"render", "--clip", (dir / "tone.wav").string(), "--kind", "spectrum", "--out", (dir / "p.csv").string()}).code == 0);
  const auto spec = read_text_file((dir / "p.csv").string());
  CHECK(spec.rfind("freq_hz,power_db\n", 0) == 0);
  CHECK(count_lines(spec) == 258);

  CHECK(run({"render", "--clip", (dir / "tone.wav").string(), "--kind", "bogus", "--out", (dir / "x").string()}).code == 2);
  CHECK(run({"render", "--clip", (dir / "nope.wav").string(), "--kind", "waveform", "--out", (dir / "x").string()}).code == 1);
  fs::remove_all(dir);
}

TEST_CASE("pipeline equals the individual commands") {
  const auto dir = fresh_dir("audioad_cli_pipe");
  const std::vector<std::string> common = {"--seed", "7", "--set", "forest_trees=20", "--set", "synth_n_per_class=12"};
  auto with = [&](std::vector<std::string> rest) {
    auto args = common;
    args.insert(args.end(), rest.begin(), rest.end());
    return run(args);
  };
  const auto p = (dir / "p").string();
  const auto s = (dir / "s").string();
  REQUIRE(with({"pipeline", "--out", p}).code == 0);

  REQUIRE(with({"synth", "--out", s + "/corpus"}).code == 0);
  REQUIRE(with({"preprocess", "--manifest", s + "/corpus/manifest.csv", "--out", s + "/preprocessed"}).code == 0);
  REQUIRE(with({"extract", "--segments", s + "/preprocessed/segments.csv", "--out", s + "/features.csv"}).code == 0);
  REQUIRE(with({"split", "--features", s + "/features.csv", "--train", s + "/train.csv", "--test", s + "/test.csv"}).code == 0);
  REQUIRE(with({"train", "--features", s + "/train.csv", "--out", s + "/models"}).code == 0);
  REQUIRE(with({"evaluate", "--model", s + "/models/ensemble.json", "--features", s + "/test.csv", "--out",
                s + "/report.json", "--confusion-csv", s + "/confusion.csv"}).code == 0);

  for (const char* f : {"features.csv", "train.csv", "test.csv", "models/forest.json", "models/svm.json",
                        "models/ensemble.json", "report.json", "confusion.csv"}) {
    CAPTURE(f);
    CHECK(read_text_file(p + "/" + f) == read_text_file(s + "/" + f));
  }

  // A test CSV whose columns do not match the model.
  auto text = read_text_file(s + "/test.csv");
  text.replace(text.find("ZCR_mean"), 8, "ZCR_mode");
  write_text_file(s + "/bad.csv", text);
  const auto bad = with({"evaluate", "--model", s + "/models/ensemble.json", "--features", s + "/bad.csv", "--out",
                         s + "/bad.json"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("ZCR_mode") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("installed binary reports usage errors") {
  const char* exe = std::getenv("AUDIOAD_CLI");
  if (exe == nullptr) return;
  CHECK(std::system((std::string(exe) + " --help > /dev/null").c_str()) == 0);
  const int status = std::system((std::string(exe) + " synth --n 0 --out /tmp/audioad_never 2> /dev/null").c_str());
  CHECK(WEXITSTATUS(status) == 2);
}
