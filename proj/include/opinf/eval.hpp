#pragma once

// Relative L2 metrics over time windows, test-set evaluation and the
// POD-size and regularization sweeps.

#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "opinf/rom.hpp"

namespace opinf {

/// Half-open column range [begin, end).
struct ColumnRange {
    Eigen::Index begin = 0;
    Eigen::Index end = 0;
    Eigen::Index size() const { return end - begin; }
};

inline double relative_l2(const Matrix& pred, const Matrix& ref, ColumnRange w) {
    if (pred.rows() != ref.rows() || pred.cols() != ref.cols()) throw ShapeError("relative_l2: shapes differ");
    if (w.begin < 0 || w.end > ref.cols() || w.size() <= 0) throw ShapeError("relative_l2: empty or invalid window");
    const double den = ref.middleCols(w.begin, w.size()).norm();
    if (!(den > 0.0)) throw UndefinedMetricError("relative_l2: reference is zero over the window");
    return (pred.middleCols(w.begin, w.size()) - ref.middleCols(w.begin, w.size())).norm() / den;
}

inline double relative_l2(const Matrix& pred, const Matrix& ref) { return relative_l2(pred, ref, {0, ref.cols()}); }

/// Time window in multiples of the training horizon T. The lower end is
/// closed only when it is 0, so "0:T" and "T:2T" split the columns of
/// "0:2T" without overlap.
struct Window {
    double lo = 0.0;  // multiples of T
    double hi = 1.0;

    std::string name() const {
        auto term = [](double v) -> std::string {
            if (v == 0.0) return "0";
            if (v == 1.0) return "T";
            std::ostringstream os;
            os << v << "T";
            return os.str();
        };
        return (lo == 0.0 ? "[" : "(") + term(lo) + "," + term(hi) + "]";
    }

    /// Columns of t_eval inside the window.
    ColumnRange columns(const std::vector<double>& t, double horizon) const {
        const double tol = 1e-9 * std::max(1.0, std::abs(horizon));
        const double a = lo * horizon, b = hi * horizon;
        ColumnRange r{static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(t.size())};
        bool found = false;
        for (std::size_t k = 0; k < t.size(); ++k) {
            const bool inside = (lo == 0.0 ? t[k] >= a - tol : t[k] > a + tol) && t[k] <= b + tol;
            if (inside && !found) {
                r.begin = static_cast<Eigen::Index>(k);
                found = true;
            }
            if (inside) r.end = static_cast<Eigen::Index>(k) + 1;
        }
        if (!found) r.begin = r.end;
        return r;
    }
};

/// "0:T", "T:2T", "0:2T", "0.5T:T" or plain numbers in units of T.
inline Window parse_window(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ConfigError("window must look like lo:hi, got '" + spec + "'");
    auto term = [&](std::string s) {
        if (s.empty()) throw ConfigError("empty window bound in '" + spec + "'");
        if (s.back() == 'T') {
            s.pop_back();
            if (s.empty()) return 1.0;
        } else if (s != "0") {
            throw ConfigError("window bounds are multiples of T, got '" + spec + "'");
        }
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw ConfigError("bad window bound in '" + spec + "'");
            return v;
        } catch (const std::logic_error&) {
            throw ConfigError("bad window bound in '" + spec + "'");
        }
    };
    Window w{term(spec.substr(0, colon)), term(spec.substr(colon + 1))};
    if (!(w.lo >= 0.0 && w.hi > w.lo)) throw ConfigError("window must satisfy 0 <= lo < hi: '" + spec + "'");
    return w;
}

inline std::vector<Window> parse_windows(const std::string& list) {
    std::vector<Window> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_window(item));
    if (out.empty()) throw ConfigError("no windows given");
    return out;
}

inline std::vector<Window> default_windows() { return {{0.0, 1.0}, {1.0, 2.0}}; }

// --- report ----------------------------------------------------------------

struct TrajectoryError {
    double param = 0.0;
    int index = 0;
    bool success = false;
    std::string error;
    std::vector<double> errors;     // per window; NaN when the window holds no columns
    std::vector<double> ref_norms;  // Frobenius norm of the reference per window
};

struct ErrorReport {
    Equation equation = Equation::heat;
    std::vector<Window> windows;
    std::vector<TrajectoryError> entries;  // ordered by (param, index)
    Eigen::Index modes = 0;
    double lambda = 0.0;
    std::string method;
    std::string ode;

    std::size_t n_success() const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.success ? 1 : 0;
        return n;
    }
    std::size_t n_failed() const { return entries.size() - n_success(); }

    /// Mean over successful trajectories of each parameter, per window.
    std::map<double, std::vector<double>> param_means() const {
        std::map<double, std::vector<double>> sums, counts;
        for (const auto& e : entries) {
            auto& s = sums[e.param];
            auto& c = counts[e.param];
            s.resize(windows.size(), 0.0);
            c.resize(windows.size(), 0.0);
            if (!e.success) continue;
            for (std::size_t w = 0; w < windows.size(); ++w) {
                if (std::isnan(e.errors[w])) continue;
                s[w] += e.errors[w];
                c[w] += 1.0;
            }
        }
        for (auto& [p, s] : sums) {
            for (std::size_t w = 0; w < s.size(); ++w) {
                s[w] = counts[p][w] > 0 ? s[w] / counts[p][w] : std::numeric_limits<double>::quiet_NaN();
            }
        }
        return sums;
    }

    /// Mean of the per-parameter means, per window (parameters whose
    /// trajectories all failed are skipped).
    std::vector<double> mean() const {
        std::vector<double> s(windows.size(), 0.0), c(windows.size(), 0.0);
        for (const auto& [p, m] : param_means()) {
            for (std::size_t w = 0; w < m.size(); ++w) {
                if (std::isnan(m[w])) continue;
                s[w] += m[w];
                c[w] += 1.0;
            }
        }
        for (std::size_t w = 0; w < s.size(); ++w) {
            s[w] = c[w] > 0 ? s[w] / c[w] : std::numeric_limits<double>::quiet_NaN();
        }
        return s;
    }
};

/// JSON cannot carry NaN; undefined values are written as null.
inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json to_json(const ErrorReport& r) {
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& w : r.windows) windows.push_back(w.name());
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) {
        nlohmann::json errs = nlohmann::json::array();
        for (double v : e.errors) errs.push_back(number_or_null(v));
        nlohmann::json j{{"param", e.param}, {"index", e.index}, {"success", e.success}, {"errors", errs}};
        if (!e.success) j["error"] = e.error;
        entries.push_back(j);
    }
    nlohmann::json per_param = nlohmann::json::array();
    for (const auto& [p, m] : r.param_means()) {
        nlohmann::json ms = nlohmann::json::array();
        for (double v : m) ms.push_back(number_or_null(v));
        per_param.push_back({{"param", p}, {"mean", ms}});
    }
    nlohmann::json mean = nlohmann::json::array();
    for (double v : r.mean()) mean.push_back(number_or_null(v));
    return {{"equation", to_string(r.equation)},
            {"modes", r.modes},
            {"lambda", r.lambda},
            {"method", r.method},
            {"ode", r.ode},
            {"windows", windows},
            {"n_trajectories", r.entries.size()},
            {"n_success", r.n_success()},
            {"n_failed", r.n_failed()},
            {"mean", mean},
            {"per_param", per_param},
            {"trajectories", entries}};
}

inline std::string format_sci(double v) {
    if (std::isnan(v)) return "n/a";
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << v;
    return os.str();
}

/// Aligned plain-text table; each row is a list of cells.
inline std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < width.size(); ++c) {
            const std::string& s = c < cells.size() ? cells[c] : std::string();
            os << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << s;
        }
        os << '\n';
    };
    line(header);
    std::size_t total = 0;
    for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
    os << std::string(total, '-') << '\n';
    for (const auto& row : rows) line(row);
    return os.str();
}

inline std::string format_report(const ErrorReport& r) {
    std::vector<std::string> header{"param", "n_ok", "n_failed"};
    for (const auto& w : r.windows) header.push_back("err" + w.name());
    std::map<double, std::pair<int, int>> counts;
    for (const auto& e : r.entries) (e.success ? counts[e.param].first : counts[e.param].second)++;
    std::vector<std::vector<std::string>> rows;
    for (const auto& [p, m] : r.param_means()) {
        std::vector<std::string> row{io::param_tag(p), std::to_string(counts[p].first), std::to_string(counts[p].second)};
        for (double v : m) row.push_back(format_sci(v));
        rows.push_back(row);
    }
    std::vector<std::string> total{"mean", std::to_string(r.n_success()), std::to_string(r.n_failed())};
    for (double v : r.mean()) total.push_back(format_sci(v));
    rows.push_back(total);
    std::ostringstream os;
    os << to_string(r.equation) << "  r=" << r.modes << "  lambda=" << r.lambda << "  method=" << r.method
       << "  ode=" << r.ode << '\n'
       << format_table(header, rows);
    return os.str();
}

// --- evaluation ------------------------------------------------------------

inline ErrorReport evaluate_model(const ModelBundle& b, const TrajectorySource& test,
                                  const std::vector<Window>& windows = default_windows(), const PredictOptions& opt = {}) {
    if (!test.empty() && test.equation() != b.equation) {
        throw ConfigError("evaluate: test dataset equation differs from the model");
    }
    ErrorReport rep;
    rep.equation = b.equation;
    rep.windows = windows;
    rep.modes = b.modes;
    rep.lambda = b.lambda;
    rep.method = std::string(to_string(opt.param_method));
    if (opt.param_method == ParamMethod::interpolation) rep.method += ":" + std::string(to_string(opt.interp));
    rep.ode = std::string(to_string(opt.ode.value_or(b.ode)));
    rep.entries.resize(test.size());
    const double T = b.horizon();
    parallel_for(test.size(), [&](std::size_t i) {
        TrajectoryError& e = rep.entries[i];
        e.param = test.param(i);
        e.index = test.index(i);
        e.errors.assign(windows.size(), std::numeric_limits<double>::quiet_NaN());
        e.ref_norms.assign(windows.size(), 0.0);
        const auto traj = test.get(i);
        try {
            const Matrix pred = predict(b, *traj, opt);
            for (std::size_t w = 0; w < windows.size(); ++w) {
                const ColumnRange cols = windows[w].columns(traj->t_eval, T);
                if (cols.size() == 0) continue;
                e.ref_norms[w] = traj->states.middleCols(cols.begin, cols.size()).norm();
                e.errors[w] = relative_l2(pred, traj->states, cols);
            }
            e.success = true;
        } catch (const Error& ex) {
            e.success = false;
            e.error = ex.what();
        }
    });
    return rep;
}

inline ErrorReport evaluate_model(const ModelBundle& b, const SnapshotDataset& test,
                                  const std::vector<Window>& windows = default_windows(), const PredictOptions& opt = {}) {
    return evaluate_model(b, TrajectorySource::from(test), windows, opt);
}

// --- ablations -------------------------------------------------------------

struct PodAblationRow {
    Eigen::Index modes = 0;
    double energy = 0.0;  // fraction in [0, 1]
    std::string status;   // "ok" | "failed" | "partial"
    std::string error;
    ErrorReport report;
};

/// Retrains operators for each r on the first r modes of one decomposition.
inline std::vector<PodAblationRow> ablate_pod(const TrajectorySource& train, const TrajectorySource& test,
                                              const std::vector<Eigen::Index>& r_list, double lambda,
                                              const std::vector<Window>& windows = default_windows(),
                                              const PredictOptions& opt = {}, OdeMethod ode = OdeMethod::adaptive) {
    if (r_list.empty()) return {};
    const Eigen::Index rmax = *std::max_element(r_list.begin(), r_list.end());
    const PodBasis full = compute_pod(train, rmax);
    std::vector<PodAblationRow> rows;
    for (Eigen::Index r : r_list) {
        PodAblationRow row;
        row.modes = r;
        row.energy = energy_fraction(full.singular_values, r);
        try {
            const ModelBundle b = train_with_basis(train, full, {r, lambda, ode, default_train_options(train.equation()).projection_weight});
            row.report = evaluate_model(b, test, windows, opt);
            row.status = row.report.n_failed() == 0 ? "ok" : (row.report.n_success() == 0 ? "failed" : "partial");
        } catch (const Error& e) {
            row.status = "failed";
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

struct LambdaAblationRow {
    double lambda = 0.0;
    double operator_norm = std::numeric_limits<double>::quiet_NaN();  // mean over training params
    std::string status;
    std::string error;
    ErrorReport report;
};

/// Refits operators for each lambda on a fixed basis.
inline std::vector<LambdaAblationRow> ablate_lambda(const TrajectorySource& train, const TrajectorySource& test,
                                                    const std::vector<double>& lambdas, Eigen::Index r,
                                                    const std::vector<Window>& windows = default_windows(),
                                                    const PredictOptions& opt = {},
                                                    OdeMethod ode = OdeMethod::adaptive) {
    const PodBasis basis = compute_pod(train, r);
    std::vector<LambdaAblationRow> rows;
    for (double lam : lambdas) {
        LambdaAblationRow row;
        row.lambda = lam;
        try {
            const ModelBundle b = train_with_basis(train, basis, {r, lam, ode, default_train_options(train.equation()).projection_weight});
            double s = 0.0;
            for (const auto& [p, o] : b.operators) s += operator_norm(o);
            row.operator_norm = s / static_cast<double>(b.operators.size());
            row.report = evaluate_model(b, test, windows, opt);
            row.status = row.report.n_failed() == 0 ? "ok" : (row.report.n_success() == 0 ? "failed" : "partial");
        } catch (const SingularFitError& e) {
            row.status = "failed";
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::json to_json(const PodAblationRow& row) {
    nlohmann::json j{{"modes", row.modes}, {"energy_percent", 100.0 * row.energy}, {"status", row.status}};
    if (!row.error.empty()) j["error"] = row.error;
    if (!row.report.windows.empty()) j["report"] = to_json(row.report);
    return j;
}

inline nlohmann::json to_json(const LambdaAblationRow& row) {
    nlohmann::json j{{"lambda", row.lambda}, {"operator_norm", number_or_null(row.operator_norm)}, {"status", row.status}};
    if (!row.error.empty()) j["error"] = row.error;
    if (!row.report.windows.empty()) j["report"] = to_json(row.report);
    return j;
}

template <class Row>
std::string format_ablation(const std::vector<Row>& rows, const std::vector<Window>& windows) {
    constexpr bool is_pod = std::is_same_v<Row, PodAblationRow>;
    std::vector<std::string> header{is_pod ? "r" : "lambda", is_pod ? "energy%" : "op_norm", "status"};
    for (const auto& w : windows) header.push_back("err" + w.name());
    std::vector<std::vector<std::string>> out;
    for (const auto& row : rows) {
        std::vector<std::string> cells;
        std::ostringstream a, b;
        if constexpr (is_pod) {
            a << row.modes;
            b << std::fixed << std::setprecision(2) << 100.0 * row.energy;
        } else {
            a << row.lambda;
            if (std::isnan(row.operator_norm)) b << "n/a";
            else b << std::fixed << std::setprecision(2) << row.operator_norm;
        }
        cells = {a.str(), b.str(), row.status};
        const auto m = row.report.windows.empty() ? std::vector<double>(windows.size(), std::nan("")) : row.report.mean();
        for (double v : m) cells.push_back(format_sci(v));
        out.push_back(cells);
    }
    return format_table(header, out);
}

}  // namespace opinf
