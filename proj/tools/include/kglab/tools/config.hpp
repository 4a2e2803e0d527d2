#pragma once

#include "kglab/factorization.hpp"
#include "kglab/inverses.hpp"
#include "kglab/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace kglab::tools {

using Json = nlohmann::json;

/// Raised for anything wrong with a configuration document; maps to exit 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string name = "default";
    std::string out = "out/default";

    struct Grid {
        int N = 128;
        double L = 40.0;
    } grid;

    struct TimeGridSection {
        int J = 801;
        double T = 40.0;
    } timegrid;

    struct Model {
        double mu = 1.0;
        double delta = 1.5;
        double c_V = 0.1;
        double c_b = 0.1;
        double sigma = 3.0;
        double taper = 0.6;  ///< spatial cutoff radius as a fraction of L
    } model;

    struct Factorization {
        std::string method = "adiabatic";
        int K = 2;
        double floor = 0.5;
    } factorization;

    struct Solver {
        double tol = 1e-6;
        int k_max = 20;
        double gamma = 1.0;
        double s = 0.0;
        double stepper_tol = 1e-9;
        std::string boundary = "free";
    } solver;

    /// Gaussian source for `solve`.
    struct SourceSection {
        double t0 = 0.0;
        double x0 = 0.0;
        double width_t = 1.0;
        double width_x = 1.0;
    } source;

    PerturbationSpec perturbation() const;
    FactorOptions factor_options() const;
    SolveOptions solve_options() const;
};

/// Strict parse: unknown keys, wrong types and missing sections are errors.
/// Absent keys inside a present section keep their defaults.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

Json to_json(const ExperimentConfig& cfg);

/// Checks every precondition that does not need a computation: grid shapes,
/// the short-range condition, ellipticity, the boundary tail on this grid,
/// solver options. Throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// Canonical serialization of the effective configuration (sorted keys,
/// trailing newline); the config hash is taken over these bytes.
std::string canonical_text(const ExperimentConfig& cfg);

/// SHA-1 of "blob <size>\0<bytes>", as `git hash-object` computes it.
std::string git_blob_hash(const std::string& bytes);

std::string config_hash(const ExperimentConfig& cfg);

} // namespace kglab::tools
