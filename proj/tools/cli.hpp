#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fmflow/coefficients.hpp"
#include "fmflow/diffusion.hpp"
#include "fmflow/formal_mapping.hpp"

namespace fmflow::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kValidation = 2, kBlowup = 3, kCheckFailed = 4 };

/// Coefficients drawn from a seeded generator instead of listed literally.
/// Entries are uniform in [-scale, scale]; with linear_noise false the
/// degree-1 diffusion tensor is zero.
struct RandomInstance {
    std::uint64_t seed = 1;
    double drift_scale = 0.5;
    double noise_scale = 0.3;
    bool linear_noise = true;
};

/// Test problem of the convergence subcommand: "gbm", "bernoulli" or
/// "second-component".
struct ProblemSpec {
    std::string kind = "gbm";
    double alpha = 1.0;
    double beta = 0.5;
    double gamma = 0.5;
    double y0 = 0.1;
};

struct ExperimentConfig {
    int dy = 1;
    int m = 1;
    int order = 1;
    double horizon = 1.0;
    int steps = 64;
    std::uint64_t seed = 0;
    int paths = 1;

    // Constant-in-time coefficients; absent means zero.
    std::optional<FormalMapping> drift;
    std::optional<DiffusionFamily> diffusion;
    std::optional<RandomInstance> random;
    /// S(s,s); absent means the identity.
    std::optional<FormalMapping> initial;

    std::optional<int> split_knot;  // evolution-check, default steps / 2
    std::optional<double> tolerance;  // *-check subcommands
    std::vector<double> y0;  // taylor-check, default 0.1 in every coordinate
    int halvings = 4;
    std::vector<int> schedule{16, 32, 64, 128, 256, 512};  // convergence
    ProblemSpec problem;
    std::optional<FormalMapping> outer;  // compose-check
    std::optional<FormalMapping> inner;
};

/// Parses and validates a config document. Throws DomainError whose message
/// starts with the offending field ("config.drift.components[1]: ...").
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Canonical form with every default spelled out; parses back to the same config.
nlohmann::json to_json(const ExperimentConfig& config);

CoefficientFamily coefficients(const ExperimentConfig& config);

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> paths;
    std::optional<int> steps;
};

struct RunResult {
    int exit_code = kOk;
    /// One-line human summary.
    std::string summary;
    /// Deterministic in (subcommand, config).
    nlohmann::json results;
    /// (file name, contents)
    std::vector<std::pair<std::string, std::string>> csv;
};

extern const std::vector<std::string> kSubcommands;

/// Runs a subcommand in memory. Throws DomainError / UnsupportedCase on
/// validation problems and NumericalBlowup on non-finite states.
RunResult execute(const std::string& subcommand, const ExperimentConfig& config);

/// Full front end: reads the config, applies overrides, runs, and writes
/// report.json plus CSV files into out_dir. Diagnostics go to `err`, the
/// summary line to `out`. Returns the exit code.
int run(const std::string& subcommand, const std::optional<std::filesystem::path>& config_path,
        const Overrides& overrides, const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace fmflow::cli
