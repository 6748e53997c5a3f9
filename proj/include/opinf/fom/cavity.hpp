#pragma once

// Lid-driven cavity in vorticity/stream-function form on [0,1]^2:
//   w_t + v1 w_x + v2 w_y = (w_xx + w_yy) / Re,   lap(psi) = -w,
//   v1 = psi_y, v2 = -psi_x, lid velocity v1 = h(x) f(t) on y = 1.
// Forward Euler in time, second-order central differences in space, Thom's
// wall-vorticity closure, and a Cholesky-factorized 5-point Poisson solve.
//
// Storage: an (n+2) x (n+2) field is flattened row-major with the row index
// along y, i.e. entry (i, j) at x_i = i*dx, y_j = j*dx lives at j*(n+2) + i.
// A snapshot stacks the flattened vorticity followed by the stream function.

#include <cmath>
#include <numbers>
#include <sstream>
#include <type_traits>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "opinf/signals.hpp"
#include "opinf/trajectory.hpp"

namespace opinf::fom {

struct CavityConfig {
    double re = 100.0;
    int n_interior_per_dim = 32;
    double dt_inner = 1e-3;
    double snapshot_stride_time = 0.02;
    double horizon = 2.0;

    int side() const { return n_interior_per_dim + 2; }
    double dx() const { return 1.0 / (n_interior_per_dim + 1); }
    int inner_per_snapshot() const { return static_cast<int>(std::lround(snapshot_stride_time / dt_inner)); }
    int n_times() const { return static_cast<int>(std::lround(horizon / snapshot_stride_time)) + 1; }

    void validate() const {
        if (!(re > 0.0)) throw ConfigError("cavity: Re must be positive");
        if (n_interior_per_dim < 8) throw ConfigError("cavity: n_interior_per_dim must be >= 8");
        if (!(dt_inner > 0.0) || !(snapshot_stride_time > 0.0) || !(horizon > 0.0)) {
            throw ConfigError("cavity: time parameters must be positive");
        }
        const double ratio = snapshot_stride_time / dt_inner;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1) {
            throw ConfigError("cavity: dt_inner must divide the snapshot stride");
        }
        const double snaps = horizon / snapshot_stride_time;
        if (std::abs(snaps - std::round(snaps)) > 1e-9 * snaps) {
            throw ConfigError("cavity: snapshot stride must divide the horizon");
        }
    }
};

/// Lid profile h(x) = 1 + 0.3 sin(2 pi x) + 0.2 x.
inline double cavity_lid_profile(double x) { return 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * x) + 0.2 * x; }

/// Sparse Cholesky of the negated 5-point Laplacian with homogeneous
/// Dirichlet walls; factorized once, shared read-only by every solve.
class PoissonSolver {
public:
    explicit PoissonSolver(int n_interior, double dx) : n_(n_interior), dx_(dx) {
        const int m = n_ * n_;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(5 * m));
        const double inv = 1.0 / (dx * dx);
        for (int j = 0; j < n_; ++j) {
            for (int i = 0; i < n_; ++i) {
                const int row = j * n_ + i;
                trip.emplace_back(row, row, 4.0 * inv);
                if (i > 0) trip.emplace_back(row, row - 1, -inv);
                if (i + 1 < n_) trip.emplace_back(row, row + 1, -inv);
                if (j > 0) trip.emplace_back(row, row - n_, -inv);
                if (j + 1 < n_) trip.emplace_back(row, row + n_, -inv);
            }
        }
        Eigen::SparseMatrix<double> A(m, m);
        A.setFromTriplets(trip.begin(), trip.end());
        llt_.compute(A);
        if (llt_.info() != Eigen::Success) throw ConfigError("cavity: Poisson factorization failed");
        rhs_.resize(m);
    }

    /// Solves lap(psi) = -omega on the interior; both fields are full
    /// (n+2)^2 arrays and the walls of psi are set to zero.
    void solve(const double* omega, double* psi) {
        const int s = n_ + 2;
        for (int j = 0; j < n_; ++j)
            for (int i = 0; i < n_; ++i) rhs_[j * n_ + i] = omega[(j + 1) * s + (i + 1)];
        const Vector sol = llt_.solve(rhs_);
        for (int k = 0; k < s * s; ++k) psi[k] = 0.0;
        for (int j = 0; j < n_; ++j)
            for (int i = 0; i < n_; ++i) psi[(j + 1) * s + (i + 1)] = sol[j * n_ + i];
    }

private:
    int n_;
    double dx_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
    Vector rhs_;
};

/// max over interior points of |lap(psi) + omega|.
inline double poisson_residual(const double* omega, const double* psi, int n_interior, double dx) {
    const int s = n_interior + 2;
    const double inv = 1.0 / (dx * dx);
    double worst = 0.0;
    for (int j = 1; j <= n_interior; ++j) {
        for (int i = 1; i <= n_interior; ++i) {
            const int c = j * s + i;
            const double lap = (psi[c - 1] + psi[c + 1] + psi[c - s] + psi[c + s] - 4.0 * psi[c]) * inv;
            worst = std::max(worst, std::abs(lap + omega[c]));
        }
    }
    return worst;
}

namespace detail {

/// Thom's first-order closure on all four walls; corners are left at zero.
inline void set_wall_vorticity(double* omega, const double* psi, int n, double dx, double lid_mod) {
    const int s = n + 2;
    const double inv2 = 2.0 / (dx * dx);
    for (int i = 1; i <= n; ++i) {
        omega[i] = -inv2 * psi[s + i];                                    // bottom
        const double u_lid = cavity_lid_profile(i * dx) * lid_mod;
        omega[(n + 1) * s + i] = -inv2 * psi[n * s + i] - 2.0 * u_lid / dx;  // lid
    }
    for (int j = 1; j <= n; ++j) {
        omega[j * s] = -inv2 * psi[j * s + 1];              // left
        omega[j * s + n + 1] = -inv2 * psi[j * s + n];      // right
    }
}

}  // namespace detail

template <class Lid>
    requires(!std::is_same_v<std::remove_cvref_t<Lid>, MultiSineSignal>)
Trajectory solve_cavity(const CavityConfig& cfg, Lid&& lid) {
    cfg.validate();
    const int n = cfg.n_interior_per_dim;
    const int s = n + 2;
    const int cells = s * s;
    const double dx = cfg.dx();
    const double inv_re = 1.0 / cfg.re;
    const int inner = cfg.inner_per_snapshot();

    Trajectory traj;
    traj.equation = Equation::cavity;
    traj.param = cfg.re;
    traj.t_eval = uniform_time_grid(cfg.horizon, cfg.n_times());
    const auto K = static_cast<Eigen::Index>(traj.t_eval.size());
    traj.states = Matrix::Zero(2 * cells, K);
    traj.inputs.resize(1, K);
    traj.inputs(0, 0) = lid(0.0);

    PoissonSolver poisson(n, dx);
    std::vector<double> omega(static_cast<std::size_t>(cells), 0.0), next(omega), psi(omega);
    const double c_adv = 0.5 / dx;
    const double c_diff = inv_re / (dx * dx);
    long step = 0;

    for (Eigen::Index k = 1; k < K; ++k) {
        const double t0 = traj.t_eval[static_cast<std::size_t>(k - 1)];
        const double t1 = traj.t_eval[static_cast<std::size_t>(k)];
        const double h = (t1 - t0) / inner;  // equals dt_inner up to rounding
        for (int m = 0; m < inner; ++m) {
            ++step;
            const double t = t0 + m * h;
            detail::set_wall_vorticity(omega.data(), psi.data(), n, dx, lid(t));
            next = omega;
            for (int j = 1; j <= n; ++j) {
                for (int i = 1; i <= n; ++i) {
                    const int c = j * s + i;
                    const double v1 = (psi[c + s] - psi[c - s]) * c_adv;
                    const double v2 = -(psi[c + 1] - psi[c - 1]) * c_adv;
                    const double wx = (omega[c + 1] - omega[c - 1]) * c_adv;
                    const double wy = (omega[c + s] - omega[c - s]) * c_adv;
                    const double lap = omega[c - 1] + omega[c + 1] + omega[c - s] + omega[c + s] - 4.0 * omega[c];
                    const double w = omega[c] + h * (-v1 * wx - v2 * wy + c_diff * lap);
                    if (!std::isfinite(w) || std::abs(w) > 1e8) {
                        std::ostringstream os;
                        os << "cavity: vorticity diverged at inner step " << step;
                        throw DivergenceError(os.str());
                    }
                    next[c] = w;
                }
            }
            omega.swap(next);
            poisson.solve(omega.data(), psi.data());
        }
        detail::set_wall_vorticity(omega.data(), psi.data(), n, dx, lid(t1));

        const double res = poisson_residual(omega.data(), psi.data(), n, dx);
        double wmax = 0.0;
        for (double v : omega) wmax = std::max(wmax, std::abs(v));
        if (res > 1e-8 * (1.0 + wmax)) {
            std::ostringstream os;
            os << "cavity: Poisson residual " << res << " above tolerance at snapshot " << k;
            throw ConfigError(os.str());
        }
        for (int c = 0; c < cells; ++c) {
            traj.states(c, k) = omega[static_cast<std::size_t>(c)];
            traj.states(cells + c, k) = psi[static_cast<std::size_t>(c)];
        }
        traj.inputs(0, k) = lid(t1);
    }
    return traj;
}

inline Trajectory solve_cavity(const CavityConfig& cfg, const MultiSineSignal& lid) {
    Trajectory traj = solve_cavity(cfg, [&lid](double t) { return lid(t); });
    traj.input_signals = {lid};
    return traj;
}

}  // namespace opinf::fom
