#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pnplab/experiments.hpp"
#include "pnplab/synthetic.hpp"

namespace pnplab {

using Json = nlohmann::json;

/// Malformed or invalid configuration. The message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace config_detail {

inline void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown field '" + key + "'");
    }
}

template <class T>
T get(const Json& obj, const std::string& key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + ": field '" + key + "' is missing or has the wrong type");
    }
}

template <class T>
T get_or(const Json& obj, const std::string& key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    return get<T>(obj, key, where);
}

inline std::vector<double> grid_from(const Json& obj, const std::string& key, std::vector<double> fallback,
                                     const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& g = obj.at(key);
    if (g.is_array()) return get<std::vector<double>>(obj, key, where);
    if (g.is_object()) {
        reject_unknown(g, {"min", "max", "points"}, where + "." + key);
        return log_spaced(get<double>(g, "min", where + "." + key), get<double>(g, "max", where + "." + key),
                          get<std::size_t>(g, "points", where + "." + key));
    }
    throw ConfigError(where + ": field '" + key + "' must be an array or a {min, max, points} object");
}

}  // namespace config_detail

/// Prior from {"weights", "means", "variances"} or
/// {"random": {"dim", "components", "mean_scale", "variance_min", "variance_max", "seed"}}.
inline GmmPrior parse_prior(const Json& j) {
    using namespace config_detail;
    const std::string where = "prior";
    if (!j.is_object()) throw ConfigError("prior: must be an object");
    if (j.contains("random")) {
        reject_unknown(j, {"random"}, where);
        const auto& r = j.at("random");
        reject_unknown(r, {"dim", "components", "mean_scale", "variance_min", "variance_max", "seed"}, "prior.random");
        RandomPriorSpec spec;
        spec.dim = get_or<Eigen::Index>(r, "dim", spec.dim, "prior.random");
        spec.components = get_or<std::size_t>(r, "components", spec.components, "prior.random");
        spec.mean_scale = get_or<double>(r, "mean_scale", spec.mean_scale, "prior.random");
        spec.variance_min = get_or<double>(r, "variance_min", spec.variance_min, "prior.random");
        spec.variance_max = get_or<double>(r, "variance_max", spec.variance_max, "prior.random");
        spec.seed = get_or<std::uint64_t>(r, "seed", spec.seed, "prior.random");
        return random_gmm_prior(spec);
    }
    reject_unknown(j, {"weights", "means", "variances"}, where);
    const auto weights = get<std::vector<double>>(j, "weights", where);
    const auto means_raw = get<std::vector<std::vector<double>>>(j, "means", where);
    const auto variances = get<std::vector<double>>(j, "variances", where);
    std::vector<Signal> means;
    for (const auto& m : means_raw) {
        Signal s(static_cast<Eigen::Index>(m.size()));
        for (std::size_t i = 0; i < m.size(); ++i) s[static_cast<Eigen::Index>(i)] = m[i];
        means.push_back(std::move(s));
    }
    return GmmPrior(weights, std::move(means), variances);
}

inline Json prior_to_json(const GmmPrior& p) {
    Json means = Json::array();
    for (const auto& m : p.means()) means.push_back(std::vector<double>(m.data(), m.data() + m.size()));
    return {{"weights", p.weights()}, {"means", means}, {"variances", p.variances()}};
}

inline OperatorSpec parse_operator(const Json& j) {
    using namespace config_detail;
    const std::string where = "operator";
    reject_unknown(j, {"kind", "dim", "mask_fraction", "kernel", "matrix", "seed"}, where);
    OperatorSpec op;
    op.kind = get_or<std::string>(j, "kind", op.kind, where);
    op.mask_fraction = get_or<double>(j, "mask_fraction", op.mask_fraction, where);
    op.kernel = get_or<std::vector<double>>(j, "kernel", op.kernel, where);
    op.matrix = get_or<std::vector<std::vector<double>>>(j, "matrix", op.matrix, where);
    op.seed = get_or<std::uint64_t>(j, "seed", op.seed, where);
    return op;
}

inline Json operator_to_json(const OperatorSpec& op) {
    Json j{{"kind", op.kind}, {"mask_fraction", op.mask_fraction}, {"seed", op.seed}};
    if (!op.kernel.empty()) j["kernel"] = op.kernel;
    if (!op.matrix.empty()) j["matrix"] = op.matrix;
    return j;
}

inline DenoiserSpec parse_denoiser(const Json& j) {
    using namespace config_detail;
    const std::string where = "denoiser";
    reject_unknown(j, {"kind", "alpha", "sigma_train", "weight_scale", "weight", "bias_value", "bias", "contract_eps"},
                   where);
    DenoiserSpec d;
    d.kind = get_or<std::string>(j, "kind", d.kind, where);
    d.alpha = get_or<double>(j, "alpha", d.alpha, where);
    if (j.contains("sigma_train")) d.sigma_train = get<double>(j, "sigma_train", where);
    d.weight_scale = get_or<double>(j, "weight_scale", d.weight_scale, where);
    d.weight = get_or<std::vector<std::vector<double>>>(j, "weight", d.weight, where);
    d.bias_value = get_or<double>(j, "bias_value", d.bias_value, where);
    d.bias = get_or<std::vector<double>>(j, "bias", d.bias, where);
    d.contract_eps = get_or<double>(j, "contract_eps", d.contract_eps, where);
    static const std::set<std::string> kinds{"exact_mmse", "mismatched_mmse", "shrinkage", "affine"};
    if (!kinds.count(d.kind)) throw ConfigError("denoiser: unknown kind '" + d.kind + "'");
    return d;
}

inline Json denoiser_to_json(const DenoiserSpec& d) {
    Json j{{"kind", d.kind},
           {"alpha", d.alpha},
           {"weight_scale", d.weight_scale},
           {"bias_value", d.bias_value},
           {"contract_eps", d.contract_eps}};
    if (d.sigma_train) j["sigma_train"] = *d.sigma_train;
    if (!d.weight.empty()) j["weight"] = d.weight;
    if (!d.bias.empty()) j["bias"] = d.bias;
    return j;
}

inline ScalingSpec parse_scaling(const Json& j, ScalingSpec s) {
    using namespace config_detail;
    reject_unknown(j, {"mode", "delta", "gamma_rescale"}, "scaling");
    const auto mode = get_or<std::string>(j, "mode", to_string(s.mode), "scaling");
    if (mode == "tweedie") s.mode = ScalingMode::Tweedie;
    else if (mode == "homogeneous") s.mode = ScalingMode::Homogeneous;
    else throw ConfigError("scaling: mode must be 'tweedie' or 'homogeneous'");
    s.delta = get_or<double>(j, "delta", s.delta, "scaling");
    s.gamma_rescale = get_or<bool>(j, "gamma_rescale", s.gamma_rescale, "scaling");
    return s;
}

/// Defaults of each experiment protocol before the config is applied.
inline ExperimentSpec default_spec(ExperimentKind kind) {
    ExperimentSpec spec;
    spec.kind = kind;
    switch (kind) {
        case ExperimentKind::ConvReg:
            spec.prior = random_gmm_prior({.dim = 64, .components = 3, .mean_scale = 1.0, .variance_min = 0.01,
                                           .variance_max = 0.05, .seed = 0});
            spec.scaling = {ScalingMode::Tweedie, 1.0, true};
            spec.solver.tau = 1.0;
            spec.solver.max_iters = 300;
            spec.solver.tol = 1e-9;
            break;
        case ExperimentKind::Stability:
            spec.prior = random_gmm_prior({.dim = 64, .components = 3, .mean_scale = 1.0, .variance_min = 0.01,
                                           .variance_max = 0.05, .seed = 0});
            spec.scaling = {ScalingMode::Tweedie, 1.09, false};
            spec.denoiser.contract_eps = 1e-3;
            spec.solver.max_iters = 20000;
            spec.solver.tol = 1e-12;
            break;
        case ExperimentKind::DeltaSweep:
            spec.prior = random_gmm_prior({.dim = 4, .components = 3, .mean_scale = 0.6, .variance_min = 0.02,
                                           .variance_max = 0.2, .seed = 21});
            spec.op.kind = "identity";
            break;
        case ExperimentKind::Lipschitz:
            spec.prior = GmmPrior::gaussian(Signal::Zero(4), 1.0);
            spec.op.kind = "identity";
            break;
    }
    return spec;
}

/// Build the resolved spec for `kind` from a config object. A run manifest
/// (an object with "resolved_spec") is accepted in place of a config.
inline ExperimentSpec parse_experiment_spec(const Json& root, ExperimentKind kind) {
    using namespace config_detail;
    const std::string where = "config";
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    if (root.contains("resolved_spec")) return parse_experiment_spec(root.at("resolved_spec"), kind);
    reject_unknown(root,
                   {"experiment", "prior", "operator", "denoiser", "scaling", "sigma", "delta_grid", "k_grid",
                    "sigma_grid", "mismatch_grid", "solver", "samples", "lipschitz_points", "resample_xi", "seed",
                    "output_dir"},
                   where);
    if (root.contains("experiment")) {
        const auto name = get<std::string>(root, "experiment", where);
        if (parse_experiment_kind(name) != kind) {
            throw ConfigError("config: 'experiment' is '" + name + "' but '" + to_string(kind) + "' was requested");
        }
    }
    ExperimentSpec spec = default_spec(kind);
    try {
        if (root.contains("prior")) spec.prior = parse_prior(root.at("prior"));
        if (root.contains("operator")) spec.op = parse_operator(root.at("operator"));
        if (root.contains("denoiser")) spec.denoiser = parse_denoiser(root.at("denoiser"));
        if (root.contains("scaling")) spec.scaling = parse_scaling(root.at("scaling"), spec.scaling);
        spec.sigma = get_or<double>(root, "sigma", spec.sigma, where);
        if (!(spec.sigma > 0.0)) throw ConfigError("config: 'sigma' must be > 0");
        spec.delta_grid = grid_from(root, "delta_grid", spec.delta_grid, where);
        spec.k_grid = grid_from(root, "k_grid", spec.k_grid, where);
        spec.sigma_grid = grid_from(root, "sigma_grid", spec.sigma_grid, where);
        spec.mismatch_grid = get_or<std::vector<double>>(root, "mismatch_grid", spec.mismatch_grid, where);
        if (root.contains("solver")) {
            const auto& s = root.at("solver");
            reject_unknown(s, {"tau", "max_iters", "tol"}, "solver");
            if (s.contains("tau")) {
                if (s.at("tau").is_null()) spec.solver.tau.reset();
                else spec.solver.tau = get<double>(s, "tau", "solver");
            }
            spec.solver.max_iters = get_or<std::size_t>(s, "max_iters", spec.solver.max_iters, "solver");
            spec.solver.tol = get_or<double>(s, "tol", spec.solver.tol, "solver");
        }
        spec.samples = get_or<std::size_t>(root, "samples", spec.samples, where);
        spec.lipschitz_points = get_or<std::size_t>(root, "lipschitz_points", spec.lipschitz_points, where);
        spec.resample_xi = get_or<bool>(root, "resample_xi", spec.resample_xi, where);
        spec.seed = get_or<std::uint64_t>(root, "seed", spec.seed, where);
        // Fail on specs that cannot be built before any computation starts.
        const auto op = spec.op.build(spec.prior.dim());
        (void)op;
        (void)spec.denoiser.build(spec.prior, spec.sigma);
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return spec;
}

/// Inputs of the delta-opt command.
struct DeltaOptConfig {
    GmmPrior prior = GmmPrior::gaussian(Signal::Zero(1), 1.0);
    DenoiserSpec denoiser;
    double sigma = 0.1;
    std::size_t samples = 100000;
    std::optional<std::uint64_t> seed;
    std::string output_dir;

    Denoiser build() const { return denoiser.build(prior, sigma); }
};

inline DeltaOptConfig parse_delta_opt_config(const Json& root) {
    using namespace config_detail;
    const std::string where = "config";
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    if (root.contains("resolved_spec")) return parse_delta_opt_config(root.at("resolved_spec"));
    for (const char* field : {"prior", "denoiser", "sigma"}) {
        if (!root.contains(field)) throw ConfigError(std::string("config: missing required field '") + field + "'");
    }
    reject_unknown(root, {"prior", "denoiser", "sigma", "samples", "seed", "output_dir"}, where);
    DeltaOptConfig cfg;
    try {
        cfg.prior = parse_prior(root.at("prior"));
        cfg.denoiser = parse_denoiser(root.at("denoiser"));
        cfg.sigma = get<double>(root, "sigma", where);
        if (!(cfg.sigma > 0.0)) throw ConfigError("config: 'sigma' must be > 0");
        cfg.samples = get_or<std::size_t>(root, "samples", cfg.samples, where);
        if (cfg.samples < 2) throw ConfigError("config: 'samples' must be at least 2");
        if (root.contains("seed")) cfg.seed = get<std::uint64_t>(root, "seed", where);
        cfg.output_dir = get_or<std::string>(root, "output_dir", "", where);
        (void)cfg.build();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline Json delta_opt_config_to_json(const DeltaOptConfig& cfg, std::uint64_t seed) {
    return {{"prior", prior_to_json(cfg.prior)},
            {"denoiser", denoiser_to_json(cfg.denoiser)},
            {"sigma", cfg.sigma},
            {"samples", cfg.samples},
            {"seed", seed}};
}

inline Json spec_to_json(const ExperimentSpec& spec) {
    Json solver{{"max_iters", spec.solver.max_iters}, {"tol", spec.solver.tol}};
    solver["tau"] = spec.solver.tau ? Json(*spec.solver.tau) : Json(nullptr);
    return {{"experiment", to_string(spec.kind)},
            {"prior", prior_to_json(spec.prior)},
            {"operator", operator_to_json(spec.op)},
            {"denoiser", denoiser_to_json(spec.denoiser)},
            {"scaling",
             {{"mode", to_string(spec.scaling.mode)},
              {"delta", spec.scaling.delta},
              {"gamma_rescale", spec.scaling.gamma_rescale}}},
            {"sigma", spec.sigma},
            {"delta_grid", spec.delta_grid},
            {"k_grid", spec.k_grid},
            {"sigma_grid", spec.sigma_grid},
            {"mismatch_grid", spec.mismatch_grid},
            {"solver", solver},
            {"samples", spec.samples},
            {"lipschitz_points", spec.lipschitz_points},
            {"resample_xi", spec.resample_xi},
            {"seed", spec.seed}};
}

/// Parses JSON text; syntax errors become ConfigError with line and column.
inline Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // Locate the byte offset as line:column for the diagnostic.
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(column) +
                          ": malformed JSON (" + e.what() + ")");
    }
}

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

}  // namespace pnplab
