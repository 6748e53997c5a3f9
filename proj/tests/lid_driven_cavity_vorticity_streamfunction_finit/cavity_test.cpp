#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace opinf;

namespace {

struct Fields {
    Matrix omega;  // (n+2) x (n+2), row index = y
    Matrix psi;
};

Fields unpack(const Trajectory& tr, Eigen::Index k, int side) {
    const Eigen::Index cells = side * side;
    Fields f{Matrix(side, side), Matrix(side, side)};
    for (int j = 0; j < side; ++j)
        for (int i = 0; i < side; ++i) {
            f.omega(j, i) = tr.states(j * side + i, k);
            f.psi(j, i) = tr.states(cells + j * side + i, k);
        }
    return f;
}

Trajectory short_run(double re, double horizon, const MultiSineSignal& lid) {
    fom::CavityConfig cfg;
    cfg.re = re;
    cfg.horizon = horizon;
    return fom::solve_cavity(cfg, lid);
}

}  // namespace

TEST(CavityLid, Profile) {
    EXPECT_DOUBLE_EQ(fom::cavity_lid_profile(0.0), 1.0);
    EXPECT_NEAR(fom::cavity_lid_profile(0.25), 1.35, 1e-15);
    EXPECT_NEAR(fom::cavity_lid_profile(1.0), 1.2, 1e-15);
}

TEST(CavityPoisson, SolvesDiscreteLaplacian) {
    const int n = 12;
    const double dx = 1.0 / (n + 1);
    const int s = n + 2;
    std::vector<double> omega(static_cast<std::size_t>(s * s), 0.0), psi(omega);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int j = 1; j <= n; ++j)
        for (int i = 1; i <= n; ++i) omega[static_cast<std::size_t>(j * s + i)] = u(rng);
    fom::PoissonSolver solver(n, dx);
    solver.solve(omega.data(), psi.data());
    EXPECT_LT(fom::poisson_residual(omega.data(), psi.data(), n, dx), 1e-10);
    for (int i = 0; i < s; ++i) {
        EXPECT_EQ(psi[static_cast<std::size_t>(i)], 0.0);
        EXPECT_EQ(psi[static_cast<std::size_t>((s - 1) * s + i)], 0.0);
    }
}

TEST(CavitySolver, ZeroLidStaysAtRest) {
    fom::CavityConfig cfg;
    cfg.horizon = 0.2;
    const Trajectory tr = fom::solve_cavity(cfg, [](double) { return 0.0; });
    EXPECT_LT(tr.states.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CavitySolver, DefaultSnapshotCountAndLayout) {
    MultiSineSignal lid{1.0, {0.2}, {1.0}, {0.5}};
    const Trajectory tr = short_run(100.0, 2.0, lid);
    EXPECT_EQ(tr.n_times(), 101);
    EXPECT_EQ(tr.states.rows(), 2312);
    EXPECT_NEAR(tr.t_eval[1], 0.02, 1e-15);
    EXPECT_EQ(tr.states.col(0).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(tr.inputs(0, 50), lid(tr.t_eval[50]));
    EXPECT_NO_THROW(tr.validate());
}

TEST(CavitySolver, SnapshotInvariants) {
    MultiSineSignal lid{1.1, {0.3}, {1.5}, {2.0}};
    const Trajectory tr = short_run(60.0, 0.6, lid);
    const int n = 32, side = 34;
    const double dx = 1.0 / 33.0;
    for (Eigen::Index k = 0; k < tr.n_times(); ++k) {
        const Fields f = unpack(tr, k, side);
        // Stream function vanishes on every wall.
        EXPECT_EQ(f.psi.row(0).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(f.psi.row(side - 1).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(f.psi.col(0).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(f.psi.col(side - 1).cwiseAbs().maxCoeff(), 0.0);
        // Poisson residual at snapshot resolution.
        const double res = fom::poisson_residual(tr.states.col(k).data(), tr.states.col(k).data() + side * side, n, dx);
        EXPECT_LE(res, 1e-8 * (1.0 + f.omega.cwiseAbs().maxCoeff())) << "snapshot " << k;
        // Discrete divergence of (psi_y, -psi_x) with central differences.
        double div = 0.0;
        for (int j = 2; j < side - 2; ++j)
            for (int i = 2; i < side - 2; ++i) {
                auto u = [&](int jj, int ii) { return (f.psi(jj + 1, ii) - f.psi(jj - 1, ii)) / (2 * dx); };
                auto v = [&](int jj, int ii) { return -(f.psi(jj, ii + 1) - f.psi(jj, ii - 1)) / (2 * dx); };
                const double d = (u(j, i + 1) - u(j, i - 1)) / (2 * dx) + (v(j + 1, i) - v(j - 1, i)) / (2 * dx);
                div = std::max(div, std::abs(d));
            }
        EXPECT_LE(div, 1e-10) << "snapshot " << k;
    }
}

TEST(CavitySolver, LidWallVorticityFollowsThom) {
    MultiSineSignal lid{0.9, {}, {}, {}};
    const Trajectory tr = short_run(100.0, 0.1, lid);
    const int side = 34;
    const double dx = 1.0 / 33.0;
    const Fields f = unpack(tr, tr.n_times() - 1, side);
    for (int i = 1; i < side - 1; ++i) {
        const double expect = -2.0 * f.psi(side - 2, i) / (dx * dx) - 2.0 * fom::cavity_lid_profile(i * dx) * 0.9 / dx;
        EXPECT_NEAR(f.omega(side - 1, i), expect, 1e-9 * std::abs(expect));
    }
}

TEST(CavitySolver, RejectsInvalidConfig) {
    fom::CavityConfig cfg;
    cfg.dt_inner = 0.003;
    EXPECT_THROW(fom::solve_cavity(cfg, [](double) { return 1.0; }), ConfigError);
    cfg = {};
    cfg.n_interior_per_dim = 4;
    EXPECT_THROW(fom::solve_cavity(cfg, [](double) { return 1.0; }), ConfigError);
}
