#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "audioad/audio_io.hpp"

namespace audioad {

inline const std::vector<std::string> kCorpusClasses = {"normal", "anomalous"};

// Two-class proxy corpus: steady harmonic tones ("normal") against tones
// with f0 jitter, amplitude wobble, extra noise and a downward spectral
// tilt ("anomalous"). Every clip opens with a noise-only lead.
struct CorpusSpec {
  std::size_t n_per_class = 100;
  std::uint64_t seed = 42;
  int sample_rate = kDefaultSampleRate;
  double clip_s = 1.0;
  double lead_s = 0.25;
  double snr_db = 20.0;
  double f0_min_hz = 110.0;
  double f0_max_hz = 220.0;
  double jitter_hz = 3.0;  // random-walk step std per millisecond
  double wobble_min_hz = 2.0;
  double wobble_max_hz = 6.0;
  double wobble_depth = 0.5;
  double extra_noise_db = 6.0;
  double tilt_db_per_octave = -6.0;
  double peak = 0.9;

  void validate() const;
};

struct SynthClip {
  std::string clip_id;
  int label = 0;  // index into kCorpusClasses
  AudioBuffer audio;
  AudioBuffer clean;  // voiced component before noise, same scale as audio
};

std::string corpus_clip_id(std::size_t index);

// Clip `index` in [0, 2 * n_per_class); the first half is class 0. Uses an
// RNG stream derived from (seed, index) only.
SynthClip synthesize_clip(const CorpusSpec& spec, std::size_t index);

struct ManifestRow {
  std::string clip_id;
  std::string path;  // relative to the manifest's directory unless absolute
  std::string label;
  std::string reference;  // optional reference-channel WAV for NLMS
};

// Writes clips/<clip_id>.wav plus manifest.csv under out_dir.
std::vector<ManifestRow> generate_corpus(const CorpusSpec& spec, const std::string& out_dir, std::size_t threads = 1);

// Header clip_id,path,label with an optional fourth column "reference".
std::string render_manifest(const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> parse_manifest(const std::string& text);

}  // namespace audioad
