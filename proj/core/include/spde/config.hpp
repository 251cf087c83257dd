#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spde/integrator.hpp"

namespace spde {

/// Driving-noise description for config files.
struct NoiseSpec {
    int m = 1;
    std::string q_kind = "identity";  // identity | diagonal | zero
    double q_scale = 1.0;
    std::vector<double> q_diag;
    std::string phi_kind = "identity";  // identity | matrix | sine_modes
    double phi_scale = 1.0;
    std::vector<std::vector<double>> phi;  // rows of the constant matrix
};

/// Problem description for config files; `name` selects the gallery
/// constructor and the remaining fields parameterize it.
struct ProblemSpec {
    std::string name = "ou";  // ou | porous_media | degenerate_plaplacian | zero_b
    double horizon = 1.0;

    // ou / zero_b
    int d = 1;
    double lambda = 1.0;
    double sigma = 1.0;
    std::string a_kind = "linear";  // zero_b: linear | cubic
    double a_coeff = 1.0;

    // grid problems
    int n = 32;
    double length = 1.0;
    double p = 2.0;
    std::string b_profile = "one";  // one | half_zero | ramp

    std::vector<double> u0;        // explicit initial state
    std::string u0_profile;        // grid problems: "sin" | "bump" (when u0 empty)
    double u0_scale = 1.0;

    NoiseSpec noise;
};

/// Knobs for the verification subcommands. Calibrated tolerances and bias
/// allowances live in fixture files, not in code.
struct CheckSpec {
    double bias_kappa = 1.0;
    double slack_c = 1.0;
    double rel_tol = 0.05;
    int min_level = 6;
    int max_level = 14;
    int n_seeds = 100;
    int level = 10;
    double z0 = 0.0;
    double z1 = 1.0;
    std::vector<double> dts;
    std::string mode = "strong";  // convergence: strong | residual
    double band_lo = 1.3;
    double band_hi = 3.5;
};

/// One experiment: problem, solver settings, batch size, and check knobs.
/// Serialization is strict both ways: unknown keys are rejected with the
/// offending key named, and to_json_text(from_json_text(s)) is a fixed point.
struct ExperimentConfig {
    int schema = 1;
    ProblemSpec problem;
    SolverConfig solver;
    std::int64_t n_paths = 100;
    std::uint64_t master_seed = 1;
    std::vector<double> t_checks;
    int workers = 0;
    std::string out;  // CSV output path; the --out flag overrides
    CheckSpec check;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    std::string to_json_text() const;

    Problem build_problem() const;
};

std::string scheme_name(Scheme scheme);
Scheme scheme_from_name(const std::string& name);

}  // namespace spde
