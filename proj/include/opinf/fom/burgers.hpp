#pragma once

// Forced viscous Burgers equation
//   y_t + y y_x = nu y_xx + s0(x) w3(t),  y(0,t) = w1(t), y(1,t) = w2(t)
// by Chebyshev collocation in space and Dormand-Prince 5(4) in time; output
// is interpolated onto a uniform grid at every snapshot time.

#include <cmath>
#include <type_traits>

#include "opinf/chebyshev.hpp"
#include "opinf/ode.hpp"
#include "opinf/signals.hpp"
#include "opinf/trajectory.hpp"

namespace opinf::fom {

struct BurgersConfig {
    double nu = 0.01;
    int n_cheb = 64;      // interior collocation points
    int n_uniform = 1001; // output grid size including both ends
    double horizon = 2.0;
    int n_times = 1001;
    double rtol = 1e-6;
    double atol = 1e-8;

    void validate() const {
        if (!(nu > 0.0)) throw ConfigError("burgers: nu must be positive");
        if (n_cheb < 8) throw ConfigError("burgers: n_cheb must be >= 8");
        if (n_uniform < 2) throw ConfigError("burgers: n_uniform must be >= 2");
        if (n_times < 2) throw ConfigError("burgers: n_times must be >= 2");
        if (!(horizon > 0.0)) throw ConfigError("burgers: horizon must be positive");
    }
};

/// Source profile s0(x) = 1 / cosh((x - 0.5) / 0.05).
inline double burgers_source_profile(double x) { return 1.0 / std::cosh((x - 0.5) / 0.05); }

/// Tanh ramp from w1(0) on the left to w2(0) on the right, centred at 0.3.
inline double burgers_initial_value(double x, double left, double right) {
    return right + 0.5 * (left - right) * (1.0 - std::tanh((x - 0.3) / 0.1));
}

inline Vector uniform_grid(int n) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = static_cast<double>(i) / (n - 1);
    return x;
}

/// Generic callables; three MultiSineSignal arguments take the overload
/// below, which also records them on the trajectory.
template <class Left, class Right, class Source>
    requires(!(std::is_same_v<std::remove_cvref_t<Left>, MultiSineSignal> &&
               std::is_same_v<std::remove_cvref_t<Right>, MultiSineSignal> &&
               std::is_same_v<std::remove_cvref_t<Source>, MultiSineSignal>))
Trajectory solve_burgers(const BurgersConfig& cfg, Left&& w1, Right&& w2, Source&& w3) {
    cfg.validate();
    const int N = cfg.n_cheb + 1;  // Lobatto degree; nodes 0..N, interior 1..N-1
    const Vector X = cheb::lobatto_points_unit(N);
    const Vector w = cheb::lobatto_weights(N);
    const Matrix D1 = cheb::differentiation_matrix(X, w);
    const Matrix D2 = D1 * D1;
    const int ni = cfg.n_cheb;

    // Interior rows stacked: first ni rows give nu*y_xx, last ni rows give y_x.
    Matrix ops(2 * ni, N + 1);
    ops.topRows(ni) = cfg.nu * D2.middleRows(1, ni);
    ops.bottomRows(ni) = D1.middleRows(1, ni);
    Vector source(ni);
    for (int i = 0; i < ni; ++i) source[i] = burgers_source_profile(X[i + 1]);

    // Advection in skew-symmetric form (y y_x + (y^2)_x) / 3; the plain
    // convective form blows up on under-resolved fronts at nu = 0.01.
    const Matrix D1_interior = D1.middleRows(1, ni);
    Vector full(N + 1), work(2 * ni), sq(N + 1);
    auto rhs = [&](double t, const Vector& y, Vector& dydt) {
        full[0] = w1(t);
        full.segment(1, ni) = y;
        full[N] = w2(t);
        work.noalias() = ops * full;
        sq = full.cwiseProduct(full);
        dydt = work.head(ni) - (y.cwiseProduct(work.tail(ni)) + D1_interior * sq) / 3.0 + w3(t) * source;
    };

    const double left0 = w1(0.0), right0 = w2(0.0);
    Vector y0(ni);
    for (int i = 0; i < ni; ++i) y0[i] = burgers_initial_value(X[i + 1], left0, right0);

    Trajectory traj;
    traj.equation = Equation::burgers;
    traj.param = cfg.nu;
    traj.t_eval = uniform_time_grid(cfg.horizon, cfg.n_times);

    ode::AdaptiveOptions opt;
    opt.rtol = cfg.rtol;
    opt.atol = cfg.atol;
    opt.divergence_bound = 1e8;
    Matrix interior;
    try {
        interior = ode::integrate_dp45(rhs, y0, traj.t_eval, opt);
    } catch (const DivergenceError& e) {
        throw DivergenceError(std::string("burgers: ") + e.what());
    }

    const auto K = static_cast<Eigen::Index>(cfg.n_times);
    Matrix nodal(N + 1, K);
    traj.inputs.resize(3, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double t = traj.t_eval[static_cast<std::size_t>(k)];
        traj.inputs(0, k) = w1(t);
        traj.inputs(1, k) = w2(t);
        traj.inputs(2, k) = w3(t);
        nodal(0, k) = traj.inputs(0, k);
        nodal.block(1, k, ni, 1) = interior.col(k);
        nodal(N, k) = traj.inputs(1, k);
    }
    const Matrix interp = cheb::barycentric_matrix(X, w, uniform_grid(cfg.n_uniform));
    traj.states = interp * nodal;
    if (!traj.states.allFinite()) throw DivergenceError("burgers: non-finite output state");
    return traj;
}

inline Trajectory solve_burgers(const BurgersConfig& cfg, const MultiSineSignal& w1, const MultiSineSignal& w2,
                                const MultiSineSignal& w3) {
    Trajectory traj = solve_burgers(cfg, [&](double t) { return w1(t); }, [&](double t) { return w2(t); },
                                    [&](double t) { return w3(t); });
    traj.input_signals = {w1, w2, w3};
    return traj;
}

}  // namespace opinf::fom
