#pragma once

// 1-D heat equation y_t = nu y_xx on [0,1] with y(0,t) = y(1,t) = u(t),
// second-order central differences in space, Crank-Nicolson in time.

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "opinf/signals.hpp"
#include "opinf/trajectory.hpp"
#include "opinf/tridiagonal.hpp"

namespace opinf::fom {

struct HeatConfig {
    double nu = 0.1;
    int n_interior = 1023;
    double horizon = 1.0;
    int n_times = 1001;
    /// Crank-Nicolson steps per snapshot interval.
    int substeps = 1;
    /// The first snapshot interval is covered by this many backward-Euler
    /// steps (Rannacher start-up) to damp the jump between the initial
    /// profile and the boundary input. 0 gives pure Crank-Nicolson.
    int startup_euler_steps = 4;

    double dx() const { return 1.0 / (n_interior + 1); }

    void validate() const {
        if (!(nu > 0.0)) throw ConfigError("heat: nu must be positive");
        if (n_interior < 3) throw ConfigError("heat: n_interior must be >= 3");
        if (n_times < 2) throw ConfigError("heat: n_times must be >= 2");
        if (!(horizon > 0.0)) throw ConfigError("heat: horizon must be positive");
        if (substeps < 1 || startup_euler_steps < 0) throw ConfigError("heat: invalid step counts");
    }
};

/// Interior grid points x_i = (i+1) dx.
inline Vector heat_grid(const HeatConfig& cfg) {
    const double dx = cfg.dx();
    Vector x(cfg.n_interior);
    for (int i = 0; i < cfg.n_interior; ++i) x[i] = (i + 1) * dx;
    return x;
}

/// g(x) = exp(alpha (x-1)) + exp(-alpha x) - exp(-alpha), alpha = 100.
inline Vector heat_initial_condition(const Vector& x, double alpha = 100.0) {
    return x.unaryExpr([alpha](double v) { return std::exp(alpha * (v - 1.0)) + std::exp(-alpha * v) - std::exp(-alpha); });
}

namespace detail {

inline void check_state(const Vector& y, long step) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i]) || std::abs(y[i]) > 1e8) {
            std::ostringstream os;
            os << "heat: solver diverged at step " << step;
            throw DivergenceError(os.str());
        }
    }
}

}  // namespace detail

/// Solves with boundary input `bc` evaluated at every step time.
/// `initial` holds the interior values at t = 0.
inline Trajectory solve_heat(const HeatConfig& cfg, const std::function<double(double)>& bc, const Vector& initial) {
    cfg.validate();
    const int n = cfg.n_interior;
    if (initial.size() != n) throw ShapeError("heat: initial state length differs from n_interior");

    Trajectory traj;
    traj.equation = Equation::heat;
    traj.param = cfg.nu;
    traj.t_eval = uniform_time_grid(cfg.horizon, cfg.n_times);
    const auto K = static_cast<Eigen::Index>(cfg.n_times);
    traj.states.resize(n, K);
    traj.inputs.resize(1, K);

    const double dx = cfg.dx();
    const double inv_dx2 = 1.0 / (dx * dx);
    const double dt = traj.t_eval[1] - traj.t_eval[0];
    const double h_cn = dt / cfg.substeps;
    const double r = 0.5 * cfg.nu * h_cn * inv_dx2;

    const auto un = static_cast<std::size_t>(n);
    const auto cn = TridiagonalSolver::constant(un, -r, 1.0 + 2.0 * r, -r);
    TridiagonalSolver be;
    double s = 0.0;
    if (cfg.startup_euler_steps > 0) {
        s = cfg.nu * (dt / cfg.startup_euler_steps) * inv_dx2;
        be = TridiagonalSolver::constant(un, -s, 1.0 + 2.0 * s, -s);
    }

    Vector y = initial;
    Vector rhs(n);
    traj.states.col(0) = y;
    traj.inputs(0, 0) = bc(traj.t_eval[0]);
    long step = 0;

    for (Eigen::Index k = 1; k < K; ++k) {
        const double t0 = traj.t_eval[static_cast<std::size_t>(k - 1)];
        const double t1 = traj.t_eval[static_cast<std::size_t>(k)];
        if (k == 1 && cfg.startup_euler_steps > 0) {
            const double h = (t1 - t0) / cfg.startup_euler_steps;
            for (int m = 1; m <= cfg.startup_euler_steps; ++m) {
                const double tb = m == cfg.startup_euler_steps ? t1 : t0 + m * h;
                const double u = bc(tb);
                rhs = y;
                rhs[0] += s * u;
                rhs[n - 1] += s * u;
                be.solve({rhs.data(), un});
                y.swap(rhs);
                detail::check_state(y, ++step);
            }
        } else {
            const double h = (t1 - t0) / cfg.substeps;
            for (int m = 0; m < cfg.substeps; ++m) {
                const double ta = t0 + m * h;
                const double tb = m + 1 == cfg.substeps ? t1 : t0 + (m + 1) * h;
                const double u_sum = bc(ta) + bc(tb);
                rhs[0] = (1.0 - 2.0 * r) * y[0] + r * y[1];
                for (int i = 1; i < n - 1; ++i) rhs[i] = (1.0 - 2.0 * r) * y[i] + r * (y[i - 1] + y[i + 1]);
                rhs[n - 1] = (1.0 - 2.0 * r) * y[n - 1] + r * y[n - 2];
                rhs[0] += r * u_sum;
                rhs[n - 1] += r * u_sum;
                cn.solve({rhs.data(), un});
                y.swap(rhs);
                detail::check_state(y, ++step);
            }
        }
        traj.states.col(k) = y;
        traj.inputs(0, k) = bc(t1);
    }
    return traj;
}

inline Trajectory solve_heat(const HeatConfig& cfg, const MultiSineSignal& bc, const Vector& initial) {
    Trajectory traj = solve_heat(cfg, [&bc](double t) { return bc(t); }, initial);
    traj.input_signals = {bc};
    return traj;
}

}  // namespace opinf::fom
