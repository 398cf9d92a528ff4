#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "slowfast/config.hpp"

namespace slowfast {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kNumericalError = 3,
    kIoError = 4,
};

struct CliOptions {
    std::string config_path;
    int workers = 0;  ///< 0 = auto
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
};

/// Command drivers. Each writes its CSV outputs under the effective output
/// directory and returns the paths written. Exceptions propagate; the binary
/// maps them to exit codes.
std::vector<std::string> run_analyze(const ExperimentConfig& config, const CliOptions& opts);
std::vector<std::string> run_simulate(const ExperimentConfig& config, const CliOptions& opts);
std::vector<std::string> run_rate(const ExperimentConfig& config, const CliOptions& opts);
std::vector<std::string> run_mc(const ExperimentConfig& config, const CliOptions& opts);
std::vector<std::string> run_validate(const ExperimentConfig& config, const CliOptions& opts);

/// Full front end: parses argv, dispatches, maps exceptions to exit codes.
int cli_main(int argc, char** argv);

}  // namespace slowfast
