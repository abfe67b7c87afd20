// Subcommand implementations behind the CLI binary. Each command takes a
// parsed config plus global options, writes its outputs under `out_dir`,
// and returns the process exit code (0 ok, 3 convergence failure under
// --strict). Config and data problems throw ConfigError / DataError.

#pragma once

#include "qus/io.hpp"

#include <optional>

namespace qus::cmd {

inline constexpr const char* kToolName = "qus";
inline constexpr const char* kToolVersion = "1.0.0";

struct GlobalOptions {
    std::optional<long> seed;  // overrides [noise] seed
    bool strict = false;
    std::filesystem::path out_dir = ".";
};

int run_synth(Config cfg, const GlobalOptions& opts);
int run_estimate(Config cfg, const GlobalOptions& opts);
int run_weights(Config cfg, const GlobalOptions& opts);
int run_evaluate(Config cfg, const GlobalOptions& opts);
int run_sweep(Config cfg, const GlobalOptions& opts);

}  // namespace qus::cmd
