#pragma once

// Newline-delimited JSON tool protocol: one request object per input line,
// one single-line response object per request, in order.
//
//   request:  {"tool": "<name>", "args": {...}}
//   response: {"success": true, ...} or {"success": false, "error": "..."}

#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "opinf/fom/burgers.hpp"
#include "opinf/fom/heat.hpp"
#include "opinf/rom.hpp"

namespace opinf::tools {

using json = nlohmann::json;

/// Bad arguments; reported to the client, never fatal to the server.
class RequestError : public Error {
public:
    using Error::Error;
};

// --- nested-array conversion -----------------------------------------------

/// Numbers, null (NaN) and the strings "NaN", "Infinity", "-Infinity".
inline double json_number(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        if (s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "Infinity" || s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-Infinity" || s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw RequestError("expected a number, got " + v.dump());
}

inline json number_json(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    return v;
}

namespace detail {

inline void collect_shape(const json& v, std::vector<std::size_t>& shape, std::size_t depth) {
    if (!v.is_array()) return;
    if (depth == shape.size()) shape.push_back(v.size());
    if (v.size() != shape[depth]) throw RequestError("ragged nested array");
    if (!v.empty()) collect_shape(v[0], shape, depth + 1);
}

inline void flatten(const json& v, const std::vector<std::size_t>& shape, std::size_t depth, std::vector<double>& out) {
    if (depth == shape.size()) {
        if (v.is_array()) throw RequestError("ragged nested array");
        out.push_back(json_number(v));
        return;
    }
    if (!v.is_array() || v.size() != shape[depth]) throw RequestError("ragged nested array");
    for (const auto& e : v) flatten(e, shape, depth + 1, out);
}

inline json nest(const NdArray& a, std::size_t depth, std::size_t& pos) {
    if (depth == a.shape.size()) return number_json(a.data[pos++]);
    json arr = json::array();
    for (std::size_t i = 0; i < a.shape[depth]; ++i) arr.push_back(nest(a, depth + 1, pos));
    return arr;
}

}  // namespace detail

inline NdArray to_ndarray(const json& v) {
    NdArray a;
    detail::collect_shape(v, a.shape, 0);
    detail::flatten(v, a.shape, 0, a.data);
    return a;
}

inline json to_json(const NdArray& a) {
    std::size_t pos = 0;
    return detail::nest(a, 0, pos);
}

inline json to_json(const Matrix& m) { return to_json(opinf::to_ndarray(m)); }

inline json to_json(const OperatorSummary& s) {
    return {{"values", to_json(s.values)},
            {"shape", s.values.shape},
            {"norm", number_json(s.norm)},
            {"mean", number_json(s.mean)},
            {"std", number_json(s.std)},
            {"min", number_json(s.min)},
            {"max", number_json(s.max)}};
}

inline json to_json(const std::map<std::string, OperatorSummary>& m) {
    json j = json::object();
    for (const auto& [name, s] : m) j[name] = to_json(s);
    return j;
}

inline json to_json(const ValidationReport& r) {
    json checks = json::object();
    for (const auto& [name, c] : r.checks) {
        json j{{"has_nan", c.has_nan},
               {"has_inf", c.has_inf},
               {"is_finite", c.is_finite},
               {"max_abs_value", number_json(c.max_abs_value)}};
        if (c.max_real_eigenvalue) j["max_real_eigenvalue"] = number_json(*c.max_real_eigenvalue);
        if (c.is_stable) j["is_stable"] = *c.is_stable;
        if (c.shape_info) j["shape_info"] = *c.shape_info;
        if (c.eigenvalue_check) j["eigenvalue_check"] = *c.eigenvalue_check;
        checks[name] = j;
    }
    return {{"is_valid", r.is_valid}, {"operator_checks", checks}, {"equation_type", r.equation_type}};
}

// --- argument helpers ------------------------------------------------------

inline const json& require(const json& args, const char* key) {
    if (!args.contains(key)) throw RequestError(std::string("missing argument: ") + key);
    return args.at(key);
}

inline double get_number(const json& args, const char* key) {
    const json& v = require(args, key);
    if (!v.is_number()) throw RequestError(std::string("argument ") + key + " must be a number");
    return v.get<double>();
}

inline std::vector<double> get_number_list(const json& args, const char* key) {
    const json& v = require(args, key);
    if (!v.is_array()) throw RequestError(std::string("argument ") + key + " must be a list of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw RequestError(std::string("argument ") + key + " must be a list of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline std::string get_string(const json& args, const char* key, const std::string& fallback) {
    if (!args.contains(key)) return fallback;
    if (!args.at(key).is_string()) throw RequestError(std::string("argument ") + key + " must be a string");
    return args.at(key).get<std::string>();
}

/// The equation's standard initial condition on an n-point output grid;
/// `u0` holds the inputs at the initial time.
inline Vector default_initial_state(Equation eq, Eigen::Index n, const Vector& u0) {
    switch (eq) {
    case Equation::heat: {
        fom::HeatConfig cfg;
        cfg.n_interior = static_cast<int>(n);
        return fom::heat_initial_condition(fom::heat_grid(cfg));
    }
    case Equation::burgers: {
        const Vector x = fom::uniform_grid(static_cast<int>(n));
        return x.unaryExpr([&](double xi) { return fom::burgers_initial_value(xi, u0[0], u0[1]); });
    }
    case Equation::cavity: return Vector::Zero(n);
    }
    throw RequestError("unknown equation");
}

// --- server ----------------------------------------------------------------

class ToolServer {
public:
    ToolServer() = default;
    explicit ToolServer(ModelBundle bundle) : bundle_(std::move(bundle)) {}

    const std::optional<ModelBundle>& bundle() const { return bundle_; }

    /// Response for one raw request line. Never throws.
    json handle_line(const std::string& line) {
        json req;
        try {
            req = json::parse(line);
        } catch (const json::parse_error& e) {
            return failure(std::string("malformed JSON: ") + e.what());
        }
        return handle(req);
    }

    json handle(const json& req) {
        try {
            if (!req.is_object()) throw RequestError("request must be a JSON object");
            if (!req.contains("tool") || !req.at("tool").is_string()) throw RequestError("request needs a string 'tool'");
            const std::string tool = req.at("tool").get<std::string>();
            const json args = req.contains("args") ? req.at("args") : json::object();
            if (!args.is_object()) throw RequestError("'args' must be an object");
            json out;
            if (tool == "analyze_parameter_range") out = analyze(args);
            else if (tool == "interpolate_operators") out = interpolate(args);
            else if (tool == "regress_operators" || tool == "linear_regress_operators") out = regress(args);
            else if (tool == "validate_operators") out = validate(args);
            else if (tool == "predict") out = predict_tool(args);
            else if (tool == "list_tools") out = {{"tools", tool_names()}};
            else return failure("unknown tool: " + tool);
            json resp{{"success", true}};
            resp.update(out);
            return resp;
        } catch (const json::exception& e) {
            return failure(std::string("invalid arguments: ") + e.what());
        } catch (const std::exception& e) {
            return failure(e.what());
        }
    }

    /// Serves until the input stream closes. Blank lines are skipped.
    void serve(std::istream& in, std::ostream& out) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            out << handle_line(line).dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
            out.flush();
        }
    }

    static std::vector<std::string> tool_names() {
        return {"analyze_parameter_range", "interpolate_operators", "regress_operators", "validate_operators",
                "predict"};
    }

private:
    std::optional<ModelBundle> bundle_;

    static json failure(const std::string& msg) { return {{"success", false}, {"error", msg}}; }

    const ModelBundle& need_bundle() const {
        if (!bundle_) throw RequestError("no model loaded; start the server with a model directory");
        return *bundle_;
    }

    static json analyze(const json& args) {
        return analyze_parameter_range(get_number_list(args, "nu_train"), get_number(args, "nu_query"));
    }

    /// Training nodes and their named operators, from the request or the
    /// loaded model.
    std::pair<std::vector<double>, std::vector<std::map<std::string, NdArray>>> nodes(const json& args) const {
        if (!args.contains("operators_train")) {
            const ModelBundle& b = need_bundle();
            std::vector<double> nu = b.params();
            std::vector<std::map<std::string, NdArray>> ops;
            for (double p : nu) ops.push_back(to_named(b.operators.at(p)));
            if (args.contains("nu_train") && get_number_list(args, "nu_train") != nu) {
                throw RequestError("nu_train differs from the loaded model; pass operators_train as well");
            }
            return {nu, ops};
        }
        const std::vector<double> nu = get_number_list(args, "nu_train");
        const json& ot = args.at("operators_train");
        if (!ot.is_object() || ot.empty()) throw RequestError("operators_train must be a non-empty object");
        std::vector<std::map<std::string, NdArray>> ops(nu.size());
        for (const auto& [name, stack] : ot.items()) {
            if (!stack.is_array() || stack.size() != nu.size()) {
                throw RequestError("operators_train." + name + " must list one array per nu_train value");
            }
            for (std::size_t i = 0; i < nu.size(); ++i) ops[i][name] = to_ndarray(stack[i]);
        }
        return {nu, ops};
    }

    json interpolate(const json& args) const {
        const auto [nu, ops] = nodes(args);
        const double q = get_number(args, "nu_query");
        const InterpMethod requested = parse_request_method(get_string(args, "method", "linear"));
        const InterpMethod used = effective_method(requested, nu.size());
        const auto combined = combine_named(ops, interpolation_weights(nu, q, requested));
        return {{"operators", to_json(summarize(combined))}, {"method", to_string(used)}, {"nu_query", q}};
    }

    json regress(const json& args) const {
        const auto [nu, ops] = nodes(args);
        const double q = get_number(args, "nu_query");
        const auto combined = combine_named(ops, regression_weights(nu, q));
        return {{"operators", to_json(summarize(combined))}, {"method", "regression"}, {"nu_query", q}};
    }

    static json validate(const json& args) {
        const json& ops = require(args, "operators");
        if (!ops.is_object()) throw RequestError("operators must be an object");
        std::map<std::string, NdArray> named;
        for (const auto& [name, v] : ops.items()) {
            named[name] = to_ndarray(v.is_object() ? require(v, "values") : v);
        }
        return to_json(validate_operators(named, get_string(args, "equation_type", "heat")));
    }

    static InterpMethod parse_request_method(const std::string& s) {
        try {
            return parse_interp_method(s);
        } catch (const ConfigError& e) {
            throw RequestError(e.what());
        }
    }

    /// Inputs from explicit samples or from multi-sine signal records.
    static Matrix request_inputs(const json& args, const std::vector<double>& t, Eigen::Index m) {
        if (args.contains("inputs")) {
            const NdArray a = to_ndarray(args.at("inputs"));
            if (a.shape.size() != 2 || static_cast<Eigen::Index>(a.shape[0]) != m ||
                a.shape[1] != t.size()) {
                throw RequestError("inputs must have shape [" + std::to_string(m) + ", len(t_eval)]");
            }
            return Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(a.data.data(), m,
                                                                                   static_cast<Eigen::Index>(t.size()));
        }
        if (args.contains("signals")) {
            const auto sigs = args.at("signals").get<std::vector<MultiSineSignal>>();
            if (static_cast<Eigen::Index>(sigs.size()) != m) {
                throw RequestError("signals must list " + std::to_string(m) + " signal records");
            }
            Matrix u(m, static_cast<Eigen::Index>(t.size()));
            for (Eigen::Index i = 0; i < m; ++i)
                for (std::size_t k = 0; k < t.size(); ++k) u(i, static_cast<Eigen::Index>(k)) = sigs[i](t[k]);
            return u;
        }
        throw RequestError("predict needs 'inputs' or 'signals'");
    }

    json predict_tool(const json& args) const {
        const ModelBundle& b = need_bundle();
        const double param = args.contains("param") ? get_number(args, "param") : get_number(args, "nu");
        std::vector<double> t;
        if (args.contains("t_eval")) {
            t = get_number_list(args, "t_eval");
        } else {
            const double horizon = args.contains("horizon") ? get_number(args, "horizon") : b.horizon();
            const int n_times = args.contains("n_times") ? require(args, "n_times").get<int>()
                                                         : static_cast<int>(b.t_eval_train.size());
            t = uniform_time_grid(horizon, n_times);
        }
        const Matrix u = request_inputs(args, t, input_dim(b.equation));
        Vector y0;
        if (args.contains("initial_state")) {
            const NdArray a = to_ndarray(args.at("initial_state"));
            y0 = Eigen::Map<const Vector>(a.data.data(), static_cast<Eigen::Index>(a.size()));
        } else {
            y0 = default_initial_state(b.equation, b.basis.n_space(), u.col(0));
        }
        PredictOptions opt;
        try {
            opt.param_method = parse_param_method(get_string(args, "method", "regression"));
            opt.interp = parse_interp_method(get_string(args, "interp_method", "linear"));
            if (args.contains("ode")) opt.ode = parse_ode_method(get_string(args, "ode", ""));
        } catch (const ConfigError& e) {
            throw RequestError(e.what());
        }
        const ReducedOperators ops = operators_at(b, param, opt);
        RomOptions ro = opt.rom;
        ro.method = opt.ode.value_or(b.ode);
        if (y0.size() != b.basis.n_space()) throw RequestError("initial_state length differs from the model grid");
        const Matrix a = integrate_rom(ops, project(b.basis, y0), u, t, ro);
        json out{{"param", param},
                 {"n_times", t.size()},
                 {"shape", {b.basis.n_space(), static_cast<Eigen::Index>(t.size())}},
                 {"ode", to_string(ro.method)},
                 {"coefficients", to_json(a)}};
        if (args.value("include_states", false)) out["states"] = to_json(reconstruct(b.basis, a));
        return out;
    }
};

}  // namespace opinf::tools
