#include "spde/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spde/problems.hpp"

namespace spde {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("unknown key \"" + key + "\" in " + where);
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("bad value for key \"") + key + "\"");
        }
    }
}

NoiseSpec parse_noise(const json& obj) {
    require_keys(obj, "noise",
                 {"m", "q_kind", "q_scale", "q_diag", "phi_kind", "phi_scale", "phi"});
    NoiseSpec spec;
    read(obj, "m", spec.m);
    read(obj, "q_kind", spec.q_kind);
    read(obj, "q_scale", spec.q_scale);
    read(obj, "q_diag", spec.q_diag);
    read(obj, "phi_kind", spec.phi_kind);
    read(obj, "phi_scale", spec.phi_scale);
    read(obj, "phi", spec.phi);
    return spec;
}

json noise_to_json(const NoiseSpec& spec) {
    json obj;
    obj["m"] = spec.m;
    obj["q_kind"] = spec.q_kind;
    obj["q_scale"] = spec.q_scale;
    obj["q_diag"] = spec.q_diag;
    obj["phi_kind"] = spec.phi_kind;
    obj["phi_scale"] = spec.phi_scale;
    obj["phi"] = spec.phi;
    return obj;
}

ProblemSpec parse_problem(const json& obj) {
    require_keys(obj, "problem",
                 {"name", "horizon", "d", "lambda", "sigma", "a_kind", "a_coeff", "n",
                  "length", "p", "b_profile", "u0", "u0_profile", "u0_scale", "noise"});
    ProblemSpec spec;
    read(obj, "name", spec.name);
    read(obj, "horizon", spec.horizon);
    read(obj, "d", spec.d);
    read(obj, "lambda", spec.lambda);
    read(obj, "sigma", spec.sigma);
    read(obj, "a_kind", spec.a_kind);
    read(obj, "a_coeff", spec.a_coeff);
    read(obj, "n", spec.n);
    read(obj, "length", spec.length);
    read(obj, "p", spec.p);
    read(obj, "b_profile", spec.b_profile);
    read(obj, "u0", spec.u0);
    read(obj, "u0_profile", spec.u0_profile);
    read(obj, "u0_scale", spec.u0_scale);
    if (obj.contains("noise")) {
        spec.noise = parse_noise(obj.at("noise"));
    }
    return spec;
}

json problem_to_json(const ProblemSpec& spec) {
    json obj;
    obj["name"] = spec.name;
    obj["horizon"] = spec.horizon;
    obj["d"] = spec.d;
    obj["lambda"] = spec.lambda;
    obj["sigma"] = spec.sigma;
    obj["a_kind"] = spec.a_kind;
    obj["a_coeff"] = spec.a_coeff;
    obj["n"] = spec.n;
    obj["length"] = spec.length;
    obj["p"] = spec.p;
    obj["b_profile"] = spec.b_profile;
    obj["u0"] = spec.u0;
    obj["u0_profile"] = spec.u0_profile;
    obj["u0_scale"] = spec.u0_scale;
    obj["noise"] = noise_to_json(spec.noise);
    return obj;
}

SolverConfig parse_solver(const json& obj) {
    require_keys(obj, "solver",
                 {"scheme", "epsilon", "dt", "newton_tol", "newton_max_iter",
                  "picard_tol", "picard_max_iter", "radius_base", "escape_base",
                  "seed"});
    SolverConfig config;
    std::string scheme = scheme_name(config.scheme);
    read(obj, "scheme", scheme);
    config.scheme = scheme_from_name(scheme);
    read(obj, "epsilon", config.epsilon);
    read(obj, "dt", config.dt);
    read(obj, "newton_tol", config.newton_tol);
    read(obj, "newton_max_iter", config.newton_max_iter);
    read(obj, "picard_tol", config.picard_tol);
    read(obj, "picard_max_iter", config.picard_max_iter);
    read(obj, "radius_base", config.radius_base);
    read(obj, "escape_base", config.escape_base);
    read(obj, "seed", config.seed);
    return config;
}

json solver_to_json(const SolverConfig& config) {
    json obj;
    obj["scheme"] = scheme_name(config.scheme);
    obj["epsilon"] = config.epsilon;
    obj["dt"] = config.dt;
    obj["newton_tol"] = config.newton_tol;
    obj["newton_max_iter"] = config.newton_max_iter;
    obj["picard_tol"] = config.picard_tol;
    obj["picard_max_iter"] = config.picard_max_iter;
    obj["radius_base"] = config.radius_base;
    obj["escape_base"] = config.escape_base;
    obj["seed"] = config.seed;
    return obj;
}

CheckSpec parse_check(const json& obj) {
    require_keys(obj, "check",
                 {"bias_kappa", "slack_c", "rel_tol", "min_level", "max_level",
                  "n_seeds", "level", "z0", "z1", "dts", "mode", "band_lo", "band_hi"});
    CheckSpec spec;
    read(obj, "bias_kappa", spec.bias_kappa);
    read(obj, "slack_c", spec.slack_c);
    read(obj, "rel_tol", spec.rel_tol);
    read(obj, "min_level", spec.min_level);
    read(obj, "max_level", spec.max_level);
    read(obj, "n_seeds", spec.n_seeds);
    read(obj, "level", spec.level);
    read(obj, "z0", spec.z0);
    read(obj, "z1", spec.z1);
    read(obj, "dts", spec.dts);
    read(obj, "mode", spec.mode);
    read(obj, "band_lo", spec.band_lo);
    read(obj, "band_hi", spec.band_hi);
    return spec;
}

json check_to_json(const CheckSpec& spec) {
    json obj;
    obj["bias_kappa"] = spec.bias_kappa;
    obj["slack_c"] = spec.slack_c;
    obj["rel_tol"] = spec.rel_tol;
    obj["min_level"] = spec.min_level;
    obj["max_level"] = spec.max_level;
    obj["n_seeds"] = spec.n_seeds;
    obj["level"] = spec.level;
    obj["z0"] = spec.z0;
    obj["z1"] = spec.z1;
    obj["dts"] = spec.dts;
    obj["mode"] = spec.mode;
    obj["band_lo"] = spec.band_lo;
    obj["band_hi"] = spec.band_hi;
    return obj;
}

Eigen::VectorXd build_u0(const ProblemSpec& spec, const Grid1D& grid) {
    if (!spec.u0.empty()) {
        if (static_cast<int>(spec.u0.size()) != grid.n) {
            throw ConfigError("u0 length does not match grid size");
        }
        return Eigen::Map<const Eigen::VectorXd>(spec.u0.data(),
                                                 static_cast<Eigen::Index>(spec.u0.size()));
    }
    const Eigen::VectorXd x = grid.nodes();
    Eigen::VectorXd u0(grid.n);
    if (spec.u0_profile == "sin" || spec.u0_profile.empty()) {
        for (int i = 0; i < grid.n; ++i) {
            u0(i) = spec.u0_scale * std::sin(M_PI * x(i) / spec.length);
        }
    } else if (spec.u0_profile == "bump") {
        for (int i = 0; i < grid.n; ++i) {
            const double s = x(i) / spec.length;
            u0(i) = spec.u0_scale * 16.0 * s * s * (1.0 - s) * (1.0 - s);
        }
    } else {
        throw ConfigError("unknown u0_profile \"" + spec.u0_profile + "\"");
    }
    return u0;
}

Eigen::VectorXd build_dense_u0(const ProblemSpec& spec, Eigen::Index d) {
    if (spec.u0.empty()) {
        throw ConfigError("u0 is required for problem \"" + spec.name + "\"");
    }
    if (spec.u0.size() == 1 && d > 1) {
        return Eigen::VectorXd::Constant(d, spec.u0[0]);
    }
    if (static_cast<Eigen::Index>(spec.u0.size()) != d) {
        throw ConfigError("u0 length does not match d");
    }
    return Eigen::Map<const Eigen::VectorXd>(spec.u0.data(),
                                             static_cast<Eigen::Index>(spec.u0.size()));
}

NoiseModel build_noise(const NoiseSpec& spec, Eigen::Index d, const Grid1D* grid) {
    if (spec.m < 1) {
        throw ConfigError("noise.m must be >= 1");
    }
    const auto m = static_cast<Eigen::Index>(spec.m);
    Eigen::MatrixXd q;
    if (spec.q_kind == "identity") {
        q = spec.q_scale * Eigen::MatrixXd::Identity(m, m);
    } else if (spec.q_kind == "diagonal") {
        if (static_cast<Eigen::Index>(spec.q_diag.size()) != m) {
            throw ConfigError("noise.q_diag length must equal m");
        }
        q = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            q(i, i) = spec.q_diag[static_cast<std::size_t>(i)];
        }
    } else if (spec.q_kind == "zero") {
        q = Eigen::MatrixXd::Zero(m, m);
    } else {
        throw ConfigError("unknown noise.q_kind \"" + spec.q_kind + "\"");
    }

    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(d, m);
    if (spec.phi_kind == "identity") {
        for (Eigen::Index i = 0; i < std::min(d, m); ++i) {
            phi(i, i) = spec.phi_scale;
        }
    } else if (spec.phi_kind == "matrix") {
        if (static_cast<Eigen::Index>(spec.phi.size()) != d) {
            throw ConfigError("noise.phi must have d rows");
        }
        for (Eigen::Index i = 0; i < d; ++i) {
            if (static_cast<Eigen::Index>(spec.phi[static_cast<std::size_t>(i)].size()) != m) {
                throw ConfigError("noise.phi must have m columns");
            }
            for (Eigen::Index j = 0; j < m; ++j) {
                phi(i, j) = spec.phi_scale *
                            spec.phi[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            }
        }
    } else if (spec.phi_kind == "sine_modes") {
        if (!grid) {
            throw ConfigError("noise.phi_kind sine_modes needs a grid problem");
        }
        const Eigen::VectorXd x = grid->nodes();
        for (Eigen::Index k = 0; k < m; ++k) {
            for (Eigen::Index i = 0; i < d; ++i) {
                phi(i, k) = spec.phi_scale *
                            std::sin(static_cast<double>(k + 1) * M_PI * x(i) /
                                     grid->length) /
                            static_cast<double>(k + 1);
            }
        }
    } else {
        throw ConfigError("unknown noise.phi_kind \"" + spec.phi_kind + "\"");
    }
    return NoiseModel::constant(d, std::move(q), phi);
}

std::function<double(double)> b_profile_fn(const std::string& profile, double length) {
    if (profile == "one") {
        return [](double) { return 1.0; };
    }
    if (profile == "half_zero") {
        return [length](double x) { return x < 0.5 * length ? 1.0 : 0.0; };
    }
    if (profile == "ramp") {
        return [length](double x) { return x / length; };
    }
    throw ConfigError("unknown b_profile \"" + profile + "\"");
}

}  // namespace

std::string scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::explicit_em:
            return "explicit";
        case Scheme::implicit_resolvent:
            return "implicit";
        case Scheme::picard_ball:
            return "picard_ball";
    }
    return "explicit";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "explicit") {
        return Scheme::explicit_em;
    }
    if (name == "implicit") {
        return Scheme::implicit_resolvent;
    }
    if (name == "picard_ball") {
        return Scheme::picard_ball;
    }
    throw ConfigError("unknown scheme \"" + name + "\"");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    require_keys(obj, "config",
                 {"schema", "problem", "solver", "n_paths", "master_seed", "t_checks",
                  "workers", "out", "check"});
    ExperimentConfig config;
    if (!obj.contains("schema")) {
        throw ConfigError("missing key \"schema\"");
    }
    read(obj, "schema", config.schema);
    if (config.schema != 1) {
        throw ConfigError("unsupported schema version " + std::to_string(config.schema));
    }
    if (obj.contains("problem")) {
        config.problem = parse_problem(obj.at("problem"));
    }
    if (obj.contains("solver")) {
        config.solver = parse_solver(obj.at("solver"));
    }
    read(obj, "n_paths", config.n_paths);
    read(obj, "master_seed", config.master_seed);
    read(obj, "t_checks", config.t_checks);
    read(obj, "workers", config.workers);
    read(obj, "out", config.out);
    if (obj.contains("check")) {
        config.check = parse_check(obj.at("check"));
    }
    return config;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file \"" + path + "\"");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

std::string ExperimentConfig::to_json_text() const {
    json obj;
    obj["schema"] = schema;
    obj["problem"] = problem_to_json(problem);
    obj["solver"] = solver_to_json(solver);
    obj["n_paths"] = n_paths;
    obj["master_seed"] = master_seed;
    obj["t_checks"] = t_checks;
    obj["workers"] = workers;
    obj["out"] = out;
    obj["check"] = check_to_json(check);
    return obj.dump(2) + "\n";
}

Problem ExperimentConfig::build_problem() const {
    const ProblemSpec& spec = problem;
    if (spec.name == "ou") {
        const auto d = static_cast<Eigen::Index>(spec.d);
        return make_ou(d, spec.lambda, spec.sigma, build_dense_u0(spec, d),
                       spec.horizon);
    }
    if (spec.name == "porous_media") {
        Grid1D grid{spec.n, spec.length};
        return make_porous_media(grid, spec.p,
                                 build_noise(spec.noise, grid.n, &grid),
                                 build_u0(spec, grid), spec.horizon);
    }
    if (spec.name == "degenerate_plaplacian") {
        Grid1D grid{spec.n, spec.length};
        return make_degenerate_plaplacian(
            grid, spec.p, b_profile_fn(spec.b_profile, spec.length),
            build_noise(spec.noise, grid.n, &grid), build_u0(spec, grid),
            spec.horizon);
    }
    if (spec.name == "zero_b") {
        const auto d = static_cast<Eigen::Index>(spec.d);
        NonlinearOperator op = spec.a_kind == "cubic"
                                   ? cubic_operator(d, spec.a_coeff)
                                   : linear_operator(d, spec.a_coeff);
        if (spec.a_kind != "cubic" && spec.a_kind != "linear") {
            throw ConfigError("unknown a_kind \"" + spec.a_kind + "\"");
        }
        return make_zero_b(d, std::move(op), nullptr,
                           build_noise(spec.noise, d, nullptr),
                           build_dense_u0(spec, d), spec.horizon);
    }
    throw ConfigError("unknown problem name \"" + spec.name + "\"");
}

}  // namespace spde
