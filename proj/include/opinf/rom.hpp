#pragma once

// Reduced-model integration, the persisted model bundle, training and
// full-order prediction.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <span>
#include <sstream>

#include "opinf/ode.hpp"
#include "opinf/parametric.hpp"

namespace opinf {

/// A a + H(a, a) + B u + c
inline void rom_rhs(const ReducedOperators& ops, const Vector& a, const Vector& u, Vector& out) {
    if (a.size() != ops.r() || u.size() != ops.m()) throw ShapeError("rom_rhs: state or input length mismatch");
    out.noalias() = ops.A * a;
    if (ops.H) out += ops.H->contract(a);
    out.noalias() += ops.B * u;
    out += ops.c;
}

inline Vector rom_rhs(const ReducedOperators& ops, const Vector& a, const Vector& u) {
    Vector out(ops.r());
    rom_rhs(ops, a, u, out);
    return out;
}

/// Piecewise-linear interpolation of sampled input rows, held constant
/// outside the sampled range.
class InputInterpolant {
public:
    InputInterpolant(const Matrix& samples, std::span<const double> t) : u_(samples), t_(t) {
        if (samples.cols() != static_cast<Eigen::Index>(t.size())) {
            throw ShapeError("inputs: column count differs from time grid");
        }
    }

    void operator()(double t, Vector& out) {
        const std::size_t K = t_.size();
        if (K == 1 || t <= t_[0]) {
            out = u_.col(0);
            return;
        }
        if (t >= t_[K - 1]) {
            out = u_.col(static_cast<Eigen::Index>(K - 1));
            return;
        }
        // Integrators sweep forward, so start from the last bracket.
        if (t < t_[hint_]) hint_ = 0;
        while (hint_ + 1 < K - 1 && t >= t_[hint_ + 1]) ++hint_;
        const double s = (t - t_[hint_]) / (t_[hint_ + 1] - t_[hint_]);
        const auto j = static_cast<Eigen::Index>(hint_);
        out = (1.0 - s) * u_.col(j) + s * u_.col(j + 1);
    }

private:
    const Matrix& u_;
    std::span<const double> t_;
    std::size_t hint_ = 0;
};

struct RomOptions {
    OdeMethod method = OdeMethod::adaptive;
    double rtol = 1e-6;
    double atol = 1e-8;
    /// States beyond this magnitude count as divergence.
    double divergence_bound = 1e8;
    long max_steps = 2'000'000;
};

inline Matrix integrate_rom(const ReducedOperators& ops, const Vector& a0, const Matrix& inputs,
                            std::span<const double> t_eval, const RomOptions& opt = {}) {
    if (a0.size() != ops.r()) throw ShapeError("integrate_rom: initial state length differs from r");
    if (inputs.rows() != ops.m()) throw ShapeError("integrate_rom: input rows differ from m");
    InputInterpolant input(inputs, t_eval);
    Vector u(ops.m());
    auto rhs = [&](double t, const Vector& a, Vector& da) {
        input(t, u);
        rom_rhs(ops, a, u, da);
    };
    const double bound = opt.divergence_bound * std::max(1.0, a0.cwiseAbs().maxCoeff());
    if (opt.method == OdeMethod::rk4) return ode::integrate_rk4(rhs, a0, t_eval, bound);
    ode::AdaptiveOptions ao;
    ao.rtol = opt.rtol;
    ao.atol = opt.atol;
    ao.max_steps = opt.max_steps;
    ao.divergence_bound = bound;
    return ode::integrate_dp45(rhs, a0, t_eval, ao);
}

// --- model bundle ----------------------------------------------------------

inline constexpr int bundle_format_version = 1;

struct ModelBundle {
    int format_version = bundle_format_version;
    Equation equation = Equation::heat;
    PodBasis basis;
    std::vector<double> t_eval_train;
    std::map<double, ReducedOperators> operators;  // ascending parameter
    std::map<double, double> fit_residuals;
    Eigen::Index modes = 0;
    double lambda = 0.0;
    OdeMethod ode = OdeMethod::adaptive;

    std::vector<double> params() const {
        std::vector<double> p;
        for (const auto& kv : operators) p.push_back(kv.first);
        return p;
    }

    /// Training horizon T.
    double horizon() const { return t_eval_train.empty() ? 0.0 : t_eval_train.back(); }

    void validate() const {
        if (operators.empty()) throw FormatError("bundle: no operators");
        const auto m = static_cast<Eigen::Index>(input_dim(equation));
        for (const auto& [p, ops] : operators) {
            if (ops.r() != modes || ops.A.cols() != modes || ops.B.rows() != modes || ops.m() != m ||
                ops.c.size() != modes || (ops.H && ops.H->n != modes) || ops.H.has_value() != has_quadratic(equation)) {
                throw FormatError("bundle: operator shapes inconsistent at param " + io::param_tag(p));
            }
            if (ops.H && ops.H->asymmetry() > 1e-10) {
                throw FormatError("bundle: H not symmetric at param " + io::param_tag(p));
            }
            if (!ops.all_finite()) throw FormatError("bundle: non-finite operator at param " + io::param_tag(p));
        }
        if (basis.n_modes() != modes) throw FormatError("bundle: basis has a different number of modes");
    }
};

struct TrainOptions {
    Eigen::Index modes = 6;
    double lambda = 1e-6;
    OdeMethod ode = OdeMethod::adaptive;
    double projection_weight = 1.0;
};

inline TrainOptions default_train_options(Equation eq) {
    const Protocol p = default_protocol(eq);
    // Cavity coordinates carry the square root of the cell area; unscaled, the
    // lambda=3 fit leaves an unstable quadratic ROM.
    const double w = eq == Equation::cavity ? fom::CavityConfig{}.dx() : 1.0;
    return {p.modes, p.lambda, p.ode, w};
}

/// Assembles a bundle from an existing basis (any number of modes >= r is
/// truncated to `opt.modes`).
inline ModelBundle train_with_basis(const TrajectorySource& src, const PodBasis& full_basis, const TrainOptions& opt) {
    if (src.empty()) throw InsufficientDataError("train: empty dataset");
    ModelBundle b;
    b.equation = src.equation();
    b.basis = truncate(full_basis, opt.modes);
    b.basis.projection_weight = opt.projection_weight;
    b.modes = opt.modes;
    b.lambda = opt.lambda;
    b.ode = opt.ode;
    b.t_eval_train = src.get(0)->t_eval;
    const auto fits = fit_all_parameters(src, b.basis, {opt.lambda, has_quadratic(b.equation)});
    for (const auto& [p, f] : fits) {
        b.operators.emplace(p, f.ops);
        b.fit_residuals.emplace(p, f.residual);
    }
    return b;
}

inline ModelBundle train_model(const TrajectorySource& src, const TrainOptions& opt) {
    if (opt.modes < 1) throw ConfigError("train: modes must be >= 1");
    return train_with_basis(src, compute_pod(src, opt.modes), opt);
}

inline ModelBundle train_model(const SnapshotDataset& ds, const TrainOptions& opt) {
    return train_model(TrajectorySource::from(ds), opt);
}

// --- prediction ------------------------------------------------------------

enum class ParamMethod { regression, interpolation };

inline std::string_view to_string(ParamMethod m) {
    return m == ParamMethod::regression ? "regression" : "interpolation";
}

inline ParamMethod parse_param_method(std::string_view s) {
    if (s == "regression") return ParamMethod::regression;
    if (s == "interpolation") return ParamMethod::interpolation;
    throw ConfigError("unknown parameter method: " + std::string(s));
}

struct PredictOptions {
    ParamMethod param_method = ParamMethod::regression;
    InterpMethod interp = InterpMethod::linear;
    std::optional<OdeMethod> ode;  // defaults to the bundle's method
    RomOptions rom;
};

/// Stored operators when `param` matches a training value within
/// 1e-12 * max(1, |train|); otherwise regressed or interpolated ones.
inline ReducedOperators operators_at(const ModelBundle& b, double param, const PredictOptions& opt = {}) {
    for (const auto& [p, ops] : b.operators) {
        if (std::abs(param - p) <= 1e-12 * std::max(1.0, std::abs(p))) return ops;
    }
    return opt.param_method == ParamMethod::regression ? regress_operators(b.operators, param)
                                                       : interpolate_operators(b.operators, param, opt.interp);
}

/// Full-order prediction n x K from an initial full-order state and inputs
/// sampled on t_eval.
inline Matrix predict(const ModelBundle& b, double param, const Matrix& inputs, std::span<const double> t_eval,
                      const Vector& initial_state, const PredictOptions& opt = {}) {
    if (inputs.rows() != input_dim(b.equation)) throw ShapeError("predict: input rows differ from the equation's m");
    if (initial_state.size() != b.basis.n_space()) throw ShapeError("predict: initial state length differs from n");
    const ReducedOperators ops = operators_at(b, param, opt);
    RomOptions ro = opt.rom;
    ro.method = opt.ode.value_or(b.ode);
    const Matrix a = integrate_rom(ops, project(b.basis, initial_state), inputs, t_eval, ro);
    return reconstruct(b.basis, a);
}

inline Matrix predict(const ModelBundle& b, const Trajectory& reference, const PredictOptions& opt = {}) {
    return predict(b, reference.param, reference.inputs, reference.t_eval, reference.states.col(0), opt);
}

// --- persistence -----------------------------------------------------------

namespace detail {

inline void write_tensor(const std::filesystem::path& p, const Tensor3& h) { io::write_f64(p, h.data); }

}  // namespace detail

inline void save_bundle(const ModelBundle& b, const std::filesystem::path& dir) {
    b.validate();
    std::filesystem::create_directories(dir);
    io::write_f64(dir / "basis.f64", b.basis.phi);
    io::write_f64(dir / "sv.f64", std::vector<double>(b.basis.singular_values.data(),
                                                      b.basis.singular_values.data() + b.basis.singular_values.size()));
    io::write_f64(dir / "t_train.f64", b.t_eval_train);
    nlohmann::json ops = nlohmann::json::array();
    for (const auto& [p, o] : b.operators) {
        const std::string stem = "op_" + io::param_tag(p) + "_";
        nlohmann::json files{{"A", stem + "A.f64"}, {"B", stem + "B.f64"}, {"c", stem + "c.f64"}};
        io::write_f64(dir / (stem + "A.f64"), o.A);
        io::write_f64(dir / (stem + "B.f64"), o.B);
        io::write_f64(dir / (stem + "c.f64"), std::vector<double>(o.c.data(), o.c.data() + o.c.size()));
        if (o.H) {
            files["H"] = stem + "H.f64";
            detail::write_tensor(dir / (stem + "H.f64"), *o.H);
        }
        nlohmann::json entry{{"param", p}, {"files", files}, {"operator_norm", operator_norm(o)}};
        if (auto it = b.fit_residuals.find(p); it != b.fit_residuals.end()) entry["fit_residual"] = it->second;
        ops.push_back(entry);
    }
    nlohmann::json m{{"format_version", b.format_version},
                     {"equation", to_string(b.equation)},
                     {"modes", b.modes},
                     {"lambda", b.lambda},
                     {"ode", to_string(b.ode)},
                     {"n_space", b.basis.n_space()},
                     {"n_inputs", input_dim(b.equation)},
                     {"n_singular_values", b.basis.singular_values.size()},
                     {"n_times_train", b.t_eval_train.size()},
                     {"projection_weight", b.basis.projection_weight},
                     {"params", b.params()},
                     {"files", {{"basis", "basis.f64"}, {"singular_values", "sv.f64"}, {"t_train", "t_train.f64"}}},
                     {"operators", ops}};
    io::write_json(dir / "manifest.json", m);
}

inline ModelBundle load_bundle(const std::filesystem::path& dir) {
    const nlohmann::json m = io::read_json(dir / "manifest.json");
    ModelBundle b;
    try {
        b.format_version = m.at("format_version").get<int>();
        if (b.format_version != bundle_format_version) {
            throw FormatError("bundle: unsupported format_version " + std::to_string(b.format_version));
        }
        b.equation = parse_equation(m.at("equation").get<std::string>());
        b.modes = m.at("modes").get<Eigen::Index>();
        b.lambda = m.at("lambda").get<double>();
        b.ode = parse_ode_method(m.at("ode").get<std::string>());
        const auto n = m.at("n_space").get<Eigen::Index>();
        const auto mi = m.at("n_inputs").get<Eigen::Index>();
        if (mi != input_dim(b.equation)) throw FormatError("bundle: n_inputs does not match the equation");
        const auto nsv = m.at("n_singular_values").get<std::size_t>();
        const auto& files = m.at("files");
        b.basis.equation = b.equation;
        b.basis.phi = io::read_matrix(dir / files.at("basis").get<std::string>(), n, b.modes);
        const auto sv = io::read_f64(dir / files.at("singular_values").get<std::string>(), nsv);
        b.basis.singular_values = Eigen::Map<const Vector>(sv.data(), static_cast<Eigen::Index>(sv.size()));
        b.basis.projection_weight = m.at("projection_weight").get<double>();
        b.t_eval_train = io::read_f64(dir / files.at("t_train").get<std::string>(), m.at("n_times_train").get<std::size_t>());
        const Eigen::Index r = b.modes;
        for (const auto& e : m.at("operators")) {
            const double p = e.at("param").get<double>();
            const auto& f = e.at("files");
            ReducedOperators o;
            o.A = io::read_matrix(dir / f.at("A").get<std::string>(), r, r);
            o.B = io::read_matrix(dir / f.at("B").get<std::string>(), r, mi);
            const auto c = io::read_f64(dir / f.at("c").get<std::string>(), static_cast<std::size_t>(r));
            o.c = Eigen::Map<const Vector>(c.data(), r);
            if (f.contains("H")) {
                Tensor3 H(r);
                H.data = io::read_f64(dir / f.at("H").get<std::string>(), static_cast<std::size_t>(r * r * r));
                o.H = std::move(H);
            }
            if (e.contains("fit_residual")) b.fit_residuals[p] = e.at("fit_residual").get<double>();
            if (!b.operators.emplace(p, std::move(o)).second) throw FormatError("bundle: duplicate parameter");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bundle manifest: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("bundle manifest: ") + e.what());
    }
    b.validate();
    return b;
}

}  // namespace opinf
