#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "qdiff/errors.hpp"

namespace qdiff::harness {

/// Every parameter any registered experiment reads. Sections:
/// [experiment] [lattice] [spectral] [time] [sampling] [numerics] [rmt] [walk].
struct ExperimentConfig {
    // [experiment]
    std::string name;
    std::string output_dir = "results";
    std::uint64_t seed = 1;  ///< master seed for Monte-Carlo streams

    // [lattice]
    int d = 2;
    int L = 32;
    double lambda = 0.1;

    // [spectral]
    double E = 1.0;
    double eta = 0.04;
    std::vector<double> energies;
    std::vector<double> etas;
    std::vector<double> deltas;
    double p = 1.0;
    double q = 6.0;
    double c1 = 0.5;
    double radius_scale = 0.5;  ///< ball radius in units of lambda eta^{-1/2}

    // [time]
    std::vector<double> times;
    double t_max = 0.0;
    double dt = 0.0;
    double fit_start = 0.0;
    double fit_end = 0.0;
    int quad_nodes = 12;

    // [sampling]
    std::vector<std::uint64_t> seeds{1};
    int n_samples = 100;
    long long n_trials = 10000;

    // [numerics]
    double tol = 1e-8;
    int resolution = 0;
    std::string norm_mode = "exact";

    // [rmt]
    int N = 100;
    double alpha = 4.0;
    std::string ensemble = "both";
    int matrix_size = 10;

    // [walk]
    std::vector<int> checkpoints{16, 64, 256, 1024};
    int kernel_L = 128;
    double walk_radius = 0.0;  ///< <= 0: the step standard deviation sigma

    /// times, or dt, 2 dt, ... up to t_max when times is empty.
    std::vector<double> time_grid() const;

    bool operator==(const ExperimentConfig&) const = default;
};

using FieldRef = std::variant<std::string ExperimentConfig::*, int ExperimentConfig::*, double ExperimentConfig::*,
                              std::uint64_t ExperimentConfig::*, long long ExperimentConfig::*,
                              std::vector<double> ExperimentConfig::*, std::vector<int> ExperimentConfig::*,
                              std::vector<std::uint64_t> ExperimentConfig::*>;

struct KeySpec {
    const char* section;
    const char* key;
    FieldRef field;
};

/// Keys in canonical order.
const std::vector<KeySpec>& config_schema();

/// Carries every problem found in a configuration, not just the first.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

/// Parses `key = value` lines under `[section]` headers (`#` starts a comment),
/// then validates. Throws ConfigError listing every violation.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Syntax and type errors only, no precondition checks.
ExperimentConfig parse_config_unvalidated(const std::string& text);

/// Precondition violations, each naming the offending key (empty when valid).
std::vector<std::string> validate_config(const ExperimentConfig& config);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Edit distance, used for "did you mean" suggestions.
std::size_t levenshtein(const std::string& a, const std::string& b);

}  // namespace qdiff::harness
