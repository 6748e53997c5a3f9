#pragma once

// Explicit time integrators shared by the full-order Burgers solver and the
// reduced models: an embedded Dormand-Prince 5(4) pair with dense output, and
// classical fixed-step RK4.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>

#include <Eigen/Dense>

#include "opinf/errors.hpp"

namespace opinf::ode {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct AdaptiveOptions {
    double rtol = 1e-6;
    double atol = 1e-8;
    double first_step = 0.0;  // 0 selects automatically
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 10'000'000;
    /// Abort when any |y_i| exceeds this value.
    double divergence_bound = std::numeric_limits<double>::infinity();
};

struct IntegrationStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                        b6 = 11.0 / 84;
// b - b_hat; the 7th stage is the FSAL derivative at the new point.
inline constexpr double e1 = -71.0 / 57600, e3 = 71.0 / 16695, e4 = -71.0 / 1920,
                        e5 = 17253.0 / 339200, e6 = -22.0 / 525, e7 = 1.0 / 40;

// Dense output: y(t + theta h) = y + h * sum_i k_i * sum_j P[i][j] theta^(j+1).
inline constexpr double P[7][4] = {
    {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0},
    {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0},
    {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0},
    {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0},
    {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0},
};

inline double rms_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.norm() / std::sqrt(double(v.size())); }

inline bool finite_and_bounded(const Vector& y, double bound) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i]) || std::abs(y[i]) > bound) return false;
    }
    return true;
}

[[noreturn]] inline void diverged(const char* what, double t) {
    std::ostringstream os;
    os << what << " at t=" << t;
    throw DivergenceError(os.str());
}

inline void check_grid(std::span<const double> t_eval) {
    if (t_eval.empty()) throw ShapeError("ode: empty time grid");
    for (std::size_t j = 1; j < t_eval.size(); ++j) {
        if (!(t_eval[j] > t_eval[j - 1])) throw ShapeError("ode: time grid must be strictly increasing");
    }
}

}  // namespace detail

/// Integrates y' = f(t, y) from t_eval[0] with adaptive Dormand-Prince 5(4)
/// and returns the states at every t_eval point as matrix columns.
/// `rhs(t, y, dydt)` must write the derivative into `dydt` (pre-sized).
template <class Rhs>
Matrix integrate_dp45(Rhs&& rhs, const Vector& y0, std::span<const double> t_eval,
                      const AdaptiveOptions& opt = {}, IntegrationStats* stats = nullptr) {
    using namespace detail;
    check_grid(t_eval);
    const Eigen::Index n = y0.size();
    const std::size_t K = t_eval.size();
    Matrix out(n, static_cast<Eigen::Index>(K));
    out.col(0) = y0;
    if (!finite_and_bounded(y0, opt.divergence_bound)) diverged("non-finite initial state", t_eval[0]);
    if (K == 1) return out;

    IntegrationStats local;
    IntegrationStats& st = stats ? *stats : local;

    const double t_end = t_eval[K - 1];
    double t = t_eval[0];
    Vector y = y0;
    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n), err(n), scale(n);
    rhs(t, y, k1);
    ++st.rhs_evals;

    // Initial step (Hairer, Norsett & Wanner, II.4).
    double h = opt.first_step;
    if (h <= 0.0) {
        scale = opt.atol + y.array().abs() * opt.rtol;
        const double d0 = rms_norm((y.array() / scale.array()).matrix());
        const double d1 = rms_norm((k1.array() / scale.array()).matrix());
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, t_end - t);
        tmp = y + h0 * k1;
        rhs(t + h0, tmp, k2);
        ++st.rhs_evals;
        const double d2 = rms_norm(((k2 - k1).array() / scale.array()).matrix()) / h0;
        const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                       : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
        h = std::min(100.0 * h0, h1);
    }
    h = std::min({h, opt.max_step, t_end - t});

    std::size_t next = 1;
    constexpr double safety = 0.9, min_factor = 0.2, max_factor = 10.0;
    bool last_rejected = false;

    while (next < K) {
        if (st.accepted + st.rejected >= opt.max_steps) diverged("step budget exhausted", t);
        const double h_min = 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (h < h_min) diverged("step size underflow", t);
        const double t_next = std::min(t + h, t_end);
        h = t_next - t;

        tmp = y + h * (a21 * k1);
        rhs(t + c2 * h, tmp, k2);
        tmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, tmp, k3);
        tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, tmp, k4);
        tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, tmp, k5);
        tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, tmp, k6);
        y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + h, y_new, k7);
        st.rhs_evals += 6;

        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        scale = opt.atol + y.array().abs().max(y_new.array().abs()) * opt.rtol;
        const double err_norm = rms_norm((err.array() / scale.array()).matrix());

        if (!std::isfinite(err_norm)) {
            // Treat as a hard rejection; the divergence check below catches persistent blow-up.
            ++st.rejected;
            h *= min_factor;
            last_rejected = true;
            continue;
        }

        if (err_norm > 1.0) {
            ++st.rejected;
            h *= std::max(min_factor, safety * std::pow(err_norm, -0.2));
            last_rejected = true;
            continue;
        }

        ++st.accepted;
        if (!finite_and_bounded(y_new, opt.divergence_bound)) diverged("non-finite or runaway state", t_next);

        // Dense output for every requested time inside (t, t_next].
        while (next < K && t_eval[next] <= t_next) {
            const double theta = (t_eval[next] - t) / h;
            if (t_eval[next] == t_next) {
                out.col(static_cast<Eigen::Index>(next)) = y_new;
            } else {
                double q[7];
                for (int i = 0; i < 7; ++i) {
                    double acc = 0.0, pw = theta;
                    for (int j = 0; j < 4; ++j) {
                        acc += P[i][j] * pw;
                        pw *= theta;
                    }
                    q[i] = acc;
                }
                out.col(static_cast<Eigen::Index>(next)) =
                    y + h * (q[0] * k1 + q[2] * k3 + q[3] * k4 + q[4] * k5 + q[5] * k6 + q[6] * k7);
            }
            ++next;
        }

        t = t_next;
        y.swap(y_new);
        k1.swap(k7);

        double factor = err_norm == 0.0 ? max_factor : std::min(max_factor, safety * std::pow(err_norm, -0.2));
        if (last_rejected) factor = std::min(1.0, factor);
        last_rejected = false;
        h = std::min(h * factor, opt.max_step);
        if (t + h > t_end) h = t_end - t;
    }
    return out;
}

/// Classical RK4 stepping directly between consecutive t_eval points.
template <class Rhs>
Matrix integrate_rk4(Rhs&& rhs, const Vector& y0, std::span<const double> t_eval,
                     double divergence_bound = std::numeric_limits<double>::infinity()) {
    detail::check_grid(t_eval);
    const Eigen::Index n = y0.size();
    const std::size_t K = t_eval.size();
    Matrix out(n, static_cast<Eigen::Index>(K));
    out.col(0) = y0;
    Vector y = y0, k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t j = 1; j < K; ++j) {
        const double t = t_eval[j - 1];
        const double h = t_eval[j] - t;
        rhs(t, y, k1);
        tmp = y + 0.5 * h * k1;
        rhs(t + 0.5 * h, tmp, k2);
        tmp = y + 0.5 * h * k2;
        rhs(t + 0.5 * h, tmp, k3);
        tmp = y + h * k3;
        rhs(t + h, tmp, k4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!detail::finite_and_bounded(y, divergence_bound)) detail::diverged("non-finite or runaway state", t_eval[j]);
        out.col(static_cast<Eigen::Index>(j)) = y;
    }
    return out;
}

}  // namespace opinf::ode
