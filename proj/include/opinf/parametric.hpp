#pragma once

// Operator prediction at unseen parameter values: range analysis,
// entrywise interpolation, normalized affine regression, and validation.
// Every predictor here is linear in the node operators, so each one reduces
// to a weight vector over the training nodes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include "opinf/opinf.hpp"

namespace opinf {

// --- range analysis --------------------------------------------------------

struct RangeAnalysis {
    std::vector<double> nu_train;
    double nu_query = 0.0;
    double nu_min = 0.0;
    double nu_max = 0.0;
    bool is_interpolation = false;
    std::optional<double> relative_position;
    double extrapolation_distance = 0.0;
    std::optional<std::string> extrapolation_direction;  // "below" | "above"
    std::string confidence;
    std::string recommendation;
};

/// `nu_train` is reported back in the order given.
inline RangeAnalysis analyze_parameter_range(const std::vector<double>& nu_train, double nu_query) {
    if (nu_train.empty()) throw InsufficientDataError("analyze_parameter_range: nu_train is empty");
    RangeAnalysis r;
    r.nu_train = nu_train;
    r.nu_query = nu_query;
    r.nu_min = *std::min_element(nu_train.begin(), nu_train.end());
    r.nu_max = *std::max_element(nu_train.begin(), nu_train.end());
    r.is_interpolation = r.nu_min <= nu_query && nu_query <= r.nu_max;
    if (r.is_interpolation) {
        r.relative_position = r.nu_max != r.nu_min ? (nu_query - r.nu_min) / (r.nu_max - r.nu_min) : 0.5;
    }
    if (nu_query < r.nu_min) {
        r.extrapolation_distance = std::abs(nu_query - r.nu_min);
        r.extrapolation_direction = "below";
    } else if (nu_query > r.nu_max) {
        r.extrapolation_distance = std::abs(nu_query - r.nu_max);
        r.extrapolation_direction = "above";
    }
    r.confidence = r.is_interpolation ? "high" : "low";
    r.recommendation =
        r.is_interpolation ? "Use linear interpolation" : "Extrapolation detected - results may be less accurate";
    return r;
}

inline void to_json(nlohmann::json& j, const RangeAnalysis& r) {
    j = {{"nu_train", r.nu_train},
         {"nu_query", r.nu_query},
         {"nu_range", {r.nu_min, r.nu_max}},
         {"is_interpolation", r.is_interpolation},
         {"relative_position", r.relative_position ? nlohmann::json(*r.relative_position) : nlohmann::json(nullptr)},
         {"extrapolation_distance", r.extrapolation_distance},
         {"extrapolation_direction",
          r.extrapolation_direction ? nlohmann::json(*r.extrapolation_direction) : nlohmann::json(nullptr)},
         {"confidence", r.confidence},
         {"recommendation", r.recommendation}};
}

// --- node weights ----------------------------------------------------------

enum class InterpMethod { linear, quadratic, cubic };

inline std::string_view to_string(InterpMethod m) {
    switch (m) {
    case InterpMethod::linear: return "linear";
    case InterpMethod::quadratic: return "quadratic";
    case InterpMethod::cubic: return "cubic";
    }
    return "linear";
}

inline InterpMethod parse_interp_method(std::string_view s) {
    if (s == "linear") return InterpMethod::linear;
    if (s == "quadratic") return InterpMethod::quadratic;
    if (s == "cubic") return InterpMethod::cubic;
    throw ConfigError("unknown interpolation method: " + std::string(s));
}

/// Lowers the method when there are too few nodes: quadratic needs 3,
/// cubic needs 4 (falling back to quadratic with 3, linear otherwise).
inline InterpMethod effective_method(InterpMethod m, std::size_t n_nodes) {
    if (m == InterpMethod::quadratic && n_nodes < 3) return InterpMethod::linear;
    if (m == InterpMethod::cubic && n_nodes < 4) return n_nodes >= 3 ? InterpMethod::quadratic : InterpMethod::linear;
    return m;
}

namespace detail {

/// Knot vector of the interpolating B-spline of degree k through sorted x:
/// odd k uses the not-a-knot interior x[(k+1)/2 .. n-1-(k+1)/2]; even k
/// uses interval midpoints with the outermost k/2 dropped on each side.
inline std::vector<double> spline_knots(const std::vector<double>& x, int k) {
    const auto n = static_cast<int>(x.size());
    std::vector<double> base;
    int k2 = 0;
    if (k % 2 == 1) {
        k2 = (k + 1) / 2;
        base = x;
    } else {
        k2 = k / 2;
        for (int i = 0; i + 1 < n; ++i) base.push_back(0.5 * (x[i] + x[i + 1]));
    }
    std::vector<double> t(static_cast<std::size_t>(k + 1), x.front());
    for (int i = k2; i < static_cast<int>(base.size()) - k2; ++i) t.push_back(base[static_cast<std::size_t>(i)]);
    t.insert(t.end(), static_cast<std::size_t>(k + 1), x.back());
    return t;
}

/// Values of the k+1 B-splines that are non-zero on knot interval `l`
/// (t[l] <= x < t[l+1]), evaluated at x; the polynomial piece of that
/// interval is used even when x lies outside it (extrapolation).
inline std::vector<double> bspline_basis(const std::vector<double>& t, int k, int l, double x) {
    std::vector<double> b(static_cast<std::size_t>(k + 1), 0.0), left(k + 1), right(k + 1);
    b[0] = 1.0;
    for (int j = 1; j <= k; ++j) {
        left[j] = x - t[static_cast<std::size_t>(l + 1 - j)];
        right[j] = t[static_cast<std::size_t>(l + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = b[r] / (right[r + 1] + left[j - r]);
            b[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        b[j] = saved;
    }
    return b;  // b[i] is the value of B_{l-k+i}
}

inline int knot_interval(const std::vector<double>& t, int k, int n_coef, double x) {
    int l = k;
    while (l < n_coef - 1 && x >= t[static_cast<std::size_t>(l + 1)]) ++l;
    return l;
}

/// Row of B-spline values (length n_coef) at x.
inline Eigen::RowVectorXd spline_row(const std::vector<double>& t, int k, int n_coef, double x) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n_coef);
    const int l = knot_interval(t, k, n_coef, x);
    const auto b = bspline_basis(t, k, l, x);
    for (int i = 0; i <= k; ++i) row[l - k + i] = b[static_cast<std::size_t>(i)];
    return row;
}

inline std::vector<std::size_t> sorted_order(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    for (std::size_t i = 1; i < idx.size(); ++i) {
        if (x[idx[i]] == x[idx[i - 1]]) throw ConfigError("interpolation: duplicate parameter nodes");
    }
    return idx;
}

}  // namespace detail

/// Weights w with prediction = sum_i w[i] * O(nu_train[i]) for 1-D
/// interpolation of degree 1, 2 or 3 through the nodes, continued
/// polynomially past the end nodes. A query equal to a node returns that
/// node's unit weight.
inline Vector interpolation_weights(const std::vector<double>& nu_train, double nu_query, InterpMethod method) {
    const std::size_t n = nu_train.size();
    if (n == 0) throw InsufficientDataError("interpolation: no training nodes");
    for (double v : nu_train) {
        if (!std::isfinite(v)) throw ConfigError("interpolation: non-finite parameter node");
    }
    Vector w = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (nu_train[i] == nu_query) {
            w[static_cast<Eigen::Index>(i)] = 1.0;
            return w;
        }
    }
    if (n == 1) throw InsufficientDataError("interpolation: a single node cannot be interpolated away from itself");
    const auto order = detail::sorted_order(nu_train);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = nu_train[order[i]];

    const InterpMethod m = effective_method(method, n);
    Vector ws(static_cast<Eigen::Index>(n));
    if (m == InterpMethod::linear) {
        std::size_t lo = 0;
        while (lo + 2 < n && nu_query > x[lo + 1]) ++lo;
        const double s = (nu_query - x[lo]) / (x[lo + 1] - x[lo]);
        ws.setZero();
        ws[static_cast<Eigen::Index>(lo)] = 1.0 - s;
        ws[static_cast<Eigen::Index>(lo + 1)] = s;
    } else {
        const int k = m == InterpMethod::quadratic ? 2 : 3;
        const auto nc = static_cast<int>(n);
        const auto t = detail::spline_knots(x, k);
        Matrix C(nc, nc);
        for (int i = 0; i < nc; ++i) C.row(i) = detail::spline_row(t, k, nc, x[static_cast<std::size_t>(i)]);
        const Eigen::RowVectorXd bq = detail::spline_row(t, k, nc, nu_query);
        // value = bq * C^{-1} * y, so the node weights are C^{-T} bq^T.
        ws = C.transpose().partialPivLu().solve(bq.transpose());
    }
    for (std::size_t i = 0; i < n; ++i) w[static_cast<Eigen::Index>(order[i])] = ws[static_cast<Eigen::Index>(i)];
    return w;
}

/// Weights of the least-squares line y = a z + b in z = (nu - mean)/std,
/// evaluated at the query (std replaced by 1 below 1e-12).
inline Vector regression_weights(const std::vector<double>& nu_train, double nu_query) {
    const std::size_t n = nu_train.size();
    if (n == 0) throw InsufficientDataError("regression: no training nodes");
    const Eigen::Map<const Vector> nu(nu_train.data(), static_cast<Eigen::Index>(n));
    const double mean = nu.mean();
    const double sd_raw = std::sqrt((nu.array() - mean).square().mean());
    const double sd = sd_raw > 1e-12 ? sd_raw : 1.0;
    const Vector z = (nu.array() - mean) / sd;
    const double zq = (nu_query - mean) / sd;
    const double zz = z.squaredNorm();
    Vector w = Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
    // Mean of z is zero, so slope and intercept decouple.
    if (zz > 0.0) w += (zq / zz) * z;
    return w;
}

// --- operator combination --------------------------------------------------

/// Entrywise sum_i w[i] * ops[i]. All operator sets must share shapes.
inline ReducedOperators combine_operators(const std::vector<const ReducedOperators*>& ops, const Vector& w) {
    if (ops.empty() || static_cast<Eigen::Index>(ops.size()) != w.size()) {
        throw ShapeError("combine_operators: weights and operator sets differ in count");
    }
    const ReducedOperators& f = *ops.front();
    for (const ReducedOperators* o : ops) {
        if (o->A.rows() != f.A.rows() || o->A.cols() != f.A.cols() || o->B.rows() != f.B.rows() ||
            o->B.cols() != f.B.cols() || o->c.size() != f.c.size() || o->H.has_value() != f.H.has_value() ||
            (o->H && o->H->n != f.H->n)) {
            throw ShapeError("operator shapes differ across parameters");
        }
    }
    ReducedOperators out;
    out.A = Matrix::Zero(f.A.rows(), f.A.cols());
    out.B = Matrix::Zero(f.B.rows(), f.B.cols());
    out.c = Vector::Zero(f.c.size());
    if (f.H) out.H = Tensor3(f.H->n);
    for (std::size_t i = 0; i < ops.size(); ++i) {
        const double wi = w[static_cast<Eigen::Index>(i)];
        if (wi == 0.0) continue;
        out.A += wi * ops[i]->A;
        out.B += wi * ops[i]->B;
        out.c += wi * ops[i]->c;
        if (f.H) {
            for (std::size_t e = 0; e < out.H->data.size(); ++e) out.H->data[e] += wi * ops[i]->H->data[e];
        }
    }
    return out;
}

namespace detail {

inline std::vector<const ReducedOperators*> node_pointers(const std::vector<double>& nu_train,
                                                          const std::map<double, ReducedOperators>& ops) {
    std::vector<const ReducedOperators*> p;
    for (double nu : nu_train) {
        auto it = ops.find(nu);
        if (it == ops.end()) throw ShapeError("no operators stored for training parameter " + io::param_tag(nu));
        p.push_back(&it->second);
    }
    return p;
}

}  // namespace detail

inline ReducedOperators interpolate_operators(const std::map<double, ReducedOperators>& ops, double nu_query,
                                              InterpMethod method = InterpMethod::linear) {
    std::vector<double> nu;
    for (const auto& kv : ops) nu.push_back(kv.first);
    return combine_operators(detail::node_pointers(nu, ops), interpolation_weights(nu, nu_query, method));
}

inline ReducedOperators regress_operators(const std::map<double, ReducedOperators>& ops, double nu_query) {
    std::vector<double> nu;
    for (const auto& kv : ops) nu.push_back(kv.first);
    return combine_operators(detail::node_pointers(nu, ops), regression_weights(nu, nu_query));
}

// --- generic named arrays (tool surface) -----------------------------------

/// Dense row-major array of any rank.
struct NdArray {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    std::size_t size() const { return data.size(); }
};

inline NdArray to_ndarray(const Matrix& m) {
    NdArray a;
    a.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
    a.data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) a.data.push_back(m(i, j));
    return a;
}

inline NdArray to_ndarray(const Vector& v) {
    return {{static_cast<std::size_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size())};
}

inline NdArray to_ndarray(const Tensor3& h) {
    const auto n = static_cast<std::size_t>(h.n);
    return {{n, n, n}, h.data};
}

/// Named arrays "A", "H" (if present), "B", "C".
inline std::map<std::string, NdArray> to_named(const ReducedOperators& ops) {
    std::map<std::string, NdArray> m{{"A", to_ndarray(ops.A)}, {"B", to_ndarray(ops.B)}, {"C", to_ndarray(ops.c)}};
    if (ops.H) m["H"] = to_ndarray(*ops.H);
    return m;
}

inline ReducedOperators from_named(const std::map<std::string, NdArray>& m) {
    auto get = [&](const char* name) -> const NdArray& {
        auto it = m.find(name);
        if (it == m.end()) throw ShapeError(std::string("missing operator ") + name);
        return it->second;
    };
    const NdArray& A = get("A");
    if (A.shape.size() != 2 || A.shape[0] != A.shape[1]) throw ShapeError("operator A must be square");
    const auto r = static_cast<Eigen::Index>(A.shape[0]);
    ReducedOperators ops;
    ops.A = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(A.data.data(), r, r);
    const NdArray& B = get("B");
    if (B.shape.size() != 2 || static_cast<Eigen::Index>(B.shape[0]) != r) throw ShapeError("operator B must be r x m");
    ops.B = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(
        B.data.data(), r, static_cast<Eigen::Index>(B.shape[1]));
    auto cit = m.find("C");
    if (cit == m.end()) cit = m.find("c");
    if (cit == m.end()) throw ShapeError("missing operator C");
    if (cit->second.size() != static_cast<std::size_t>(r)) throw ShapeError("operator C must have length r");
    ops.c = Eigen::Map<const Vector>(cit->second.data.data(), r);
    if (auto h = m.find("H"); h != m.end()) {
        const auto rs = static_cast<std::size_t>(r);
        if (h->second.shape != std::vector<std::size_t>{rs, rs, rs}) throw ShapeError("operator H must be r x r x r");
        Tensor3 H(r);
        H.data = h->second.data;
        ops.H = std::move(H);
    }
    return ops;
}

/// Values plus descriptive statistics of one operator.
struct OperatorSummary {
    NdArray values;
    double norm = 0.0;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    double min = 0.0;
    double max = 0.0;
};

inline OperatorSummary summarize(NdArray values) {
    OperatorSummary s;
    s.values = std::move(values);
    const auto& d = s.values.data;
    if (!d.empty()) {
        const Eigen::Map<const Vector> v(d.data(), static_cast<Eigen::Index>(d.size()));
        s.norm = v.norm();
        s.mean = v.mean();
        s.std = std::sqrt((v.array() - s.mean).square().mean());
        s.min = v.minCoeff();
        s.max = v.maxCoeff();
    }
    return s;
}

inline std::map<std::string, OperatorSummary> summarize(const std::map<std::string, NdArray>& ops) {
    std::map<std::string, OperatorSummary> out;
    for (const auto& [name, arr] : ops) out.emplace(name, summarize(arr));
    return out;
}

/// Entrywise weighted sum of named operator stacks (one map per node).
inline std::map<std::string, NdArray> combine_named(const std::vector<std::map<std::string, NdArray>>& nodes,
                                                    const Vector& w) {
    if (nodes.empty() || static_cast<Eigen::Index>(nodes.size()) != w.size()) {
        throw ShapeError("combine: weights and operator sets differ in count");
    }
    std::map<std::string, NdArray> out;
    for (const auto& [name, first] : nodes.front()) {
        NdArray acc{first.shape, std::vector<double>(first.size(), 0.0)};
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            auto it = nodes[i].find(name);
            if (it == nodes[i].end() || it->second.shape != first.shape) {
                throw ShapeError("operator " + name + " has inconsistent shapes across parameters");
            }
            const double wi = w[static_cast<Eigen::Index>(i)];
            for (std::size_t e = 0; e < acc.size(); ++e) acc.data[e] += wi * it->second.data[e];
        }
        out.emplace(name, std::move(acc));
    }
    for (const auto& node : nodes) {
        if (node.size() != out.size()) throw ShapeError("operator sets differ in which operators they contain");
    }
    return out;
}

// --- validation ------------------------------------------------------------

struct OperatorCheck {
    bool has_nan = false;
    bool has_inf = false;
    bool is_finite = true;
    double max_abs_value = 0.0;  // NaN when any entry is NaN
    std::optional<double> max_real_eigenvalue;
    std::optional<bool> is_stable;
    std::optional<std::string> shape_info;
    std::optional<std::string> eigenvalue_check;  // "failed" when the spectrum cannot be computed
};

struct ValidationReport {
    bool is_valid = true;
    std::map<std::string, OperatorCheck> checks;
    std::string equation_type;
};

/// Largest real part over the eigenvalues of a square matrix.
inline double max_real_eigenvalue(const Matrix& A) {
    Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw Error("eigenvalue iteration did not converge");
    return es.eigenvalues().real().maxCoeff();
}

/// Shape rendered like a Python tuple: "(3,)", "(10, 10, 10)".
inline std::string python_shape(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    if (shape.size() == 1) s += ",";
    return s + ")";
}

inline ValidationReport validate_operators(const std::map<std::string, NdArray>& ops,
                                           const std::string& equation_type = "heat") {
    ValidationReport rep;
    rep.equation_type = equation_type;
    for (const auto& [name, arr] : ops) {
        OperatorCheck c;
        for (double v : arr.data) {
            if (std::isnan(v)) c.has_nan = true;
            if (std::isinf(v)) c.has_inf = true;
            c.max_abs_value = std::max(c.max_abs_value, std::abs(v));
        }
        c.is_finite = !c.has_nan && !c.has_inf;
        if (c.has_nan) c.max_abs_value = std::numeric_limits<double>::quiet_NaN();
        if (equation_type == "heat" && name == "A" && arr.shape.size() == 2 && arr.shape[0] == arr.shape[1]) {
            const auto n = static_cast<Eigen::Index>(arr.shape[0]);
            if (c.is_finite && n > 0) {
                const Matrix A =
                    Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(arr.data.data(), n, n);
                try {
                    c.max_real_eigenvalue = max_real_eigenvalue(A);
                    c.is_stable = *c.max_real_eigenvalue < 0.0;
                } catch (const Error&) {
                    c.eigenvalue_check = "failed";
                }
            } else {
                c.eigenvalue_check = "failed";
            }
        } else if (equation_type == "burgers" && name == "H") {
            c.shape_info = "H tensor: " + python_shape(arr.shape);
        }
        rep.is_valid = rep.is_valid && c.is_finite;
        rep.checks.emplace(name, std::move(c));
    }
    return rep;
}

inline ValidationReport validate_operators(const ReducedOperators& ops, Equation eq) {
    return validate_operators(to_named(ops), std::string(to_string(eq)));
}

}  // namespace opinf
