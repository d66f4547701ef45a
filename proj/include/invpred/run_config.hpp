#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "invpred/numcore.hpp"

namespace invpred {

enum class Command { MvnRisk, GpRisk, GpImprovement, MvnGrid, CheckInvariance };

std::string_view to_string(Command command);
std::optional<Command> parse_command(std::string_view name);

struct GridSpec {
    std::string center = "mean";  // the only policy: sample mean of the data file
    double halfWidth = 5.0;       // in sample standard deviations per axis
    Index resolution = 201;       // points per axis
};

// Experiment configuration. Text form is flat `key = value` lines; list keys
// (n, predictor) may repeat and may hold several whitespace-separated values.
//
//   command      mvn-risk | gp-risk | gp-improvement | mvn-grid | check-invariance
//   seed         uint64
//   samples      Monte Carlo samples per cell
//   shards       worker threads for the risk engine
//   n            observation counts
//   predictor    kind tags (default: every kind of the model)
//   dimension    MVN dimension (default 2)
//   theta_mu     MVN true mean, d values (default 0)
//   theta_u      MVN true U, d*d values row-major, upper triangular (default I)
//   design       GP design file
//   lengthscale  RBF lengthscale (default 1)
//   beta         GP true coefficients (default 0)
//   sigma_y      GP true amplitude (default 1)
//   data         MVN data file for mvn-grid
//   grid_center, grid_halfwidth, grid_resolution
//   cases        random MVN/G_N instances per property in check-invariance
//   gp_cases     random GP instances per property in check-invariance
//   out          output path prefix
//
// Relative design/data paths resolve against the config file's directory;
// out is taken relative to the working directory.
struct RunConfig {
    Command command = Command::MvnRisk;
    std::uint64_t seed = 1;
    std::uint64_t nSamples = std::uint64_t{1} << 20;
    unsigned shards = 1;
    std::vector<Index> nRange;
    std::vector<std::string> predictors;
    Index dimension = 2;
    std::optional<Vector> thetaMu;
    std::optional<Matrix> thetaU;
    std::filesystem::path designFile;
    double lengthscale = 1.0;
    std::optional<Vector> beta;
    double sigmaY = 1.0;
    std::filesystem::path dataFile;
    GridSpec grid;
    int cases = 50;
    int gpCases = 20;
    std::filesystem::path outPath;
};

// Throws ConfigError naming the line for malformed or unknown entries.
// `command` is optional in the text when `defaultCommand` is given; if both
// are present they must agree.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& baseDir,
                           std::optional<Command> defaultCommand = std::nullopt);
RunConfig load_run_config(const std::filesystem::path& path, std::optional<Command> defaultCommand = std::nullopt);

// Checks that the fields the command needs are present and consistent.
// Throws ConfigError.
void validate_run_config(const RunConfig& config);

// Canonical text of every field that affects results. Excludes the output
// path and the shard count (results are shard-independent). Referenced files
// enter by content.
std::string canonical_form(const RunConfig& config);

// 64-bit FNV-1a of canonical_form.
std::uint64_t config_hash(const RunConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace invpred
