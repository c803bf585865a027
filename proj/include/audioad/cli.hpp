#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "audioad/config.hpp"

namespace audioad::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

inline constexpr const char* kConfigEnv = "AUDIOAD_CONFIG";
inline constexpr const char* kThreadsEnv = "AUDIOAD_THREADS";

struct Context {
  PipelineConfig config;
  std::size_t threads = 0;  // 0 = hardware concurrency; never affects outputs
};

// Each command throws audioad::Error on failure; run() maps errors to exit codes.
void synth(const Context& ctx, const std::string& out_dir);
// Returns the path of the written segment manifest.
std::string preprocess(const Context& ctx, const std::string& manifest, const std::string& out_dir);
void extract(const Context& ctx, const std::string& segment_manifest, const std::string& out_csv);
void split(const Context& ctx, const std::string& features_csv, const std::string& train_csv,
           const std::string& test_csv);
void train(const Context& ctx, const std::string& train_csv, const std::string& model_dir);
void evaluate(const Context& ctx, const std::string& model_path, const std::string& test_csv,
              const std::string& report_path, const std::optional<std::string>& confusion_csv);
void pipeline(const Context& ctx, const std::string& out_dir);

enum class RenderKind { kWaveform, kSpectrogram, kSpectrum };
void render(const Context& ctx, const std::string& clip, RenderKind kind, const std::string& out);

// Parses argv-style arguments (without the program name) and runs the
// selected subcommand. Exit codes: 0 success, 1 runtime error, 2 usage or
// configuration error (including schema mismatches).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace audioad::cli
