#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace opinf;

namespace {

Matrix dense_tridiagonal(std::size_t n, double sub, double main, double super) {
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        a(i, i) = main;
        if (i > 0) a(i, i - 1) = sub;
        if (i + 1 < a.rows()) a(i, i + 1) = super;
    }
    return a;
}

/// Max error of the sin(pi x) mode at t = 0.1 against exp(-nu k^2 t) sin(pi x).
/// `discrete_space` uses the eigenvalue of the second-difference matrix,
/// which isolates the time-stepping error.
double analytic_error(int n_times, bool discrete_space = false) {
    fom::HeatConfig cfg;
    cfg.nu = 0.5;
    cfg.horizon = 0.1;
    cfg.n_times = n_times;
    const Vector x = fom::heat_grid(cfg);
    const Vector y0 = (std::numbers::pi * x.array()).sin().matrix();
    const Trajectory tr = fom::solve_heat(cfg, [](double) { return 0.0; }, y0);
    const double dx = cfg.dx();
    const double s = std::sin(std::numbers::pi * dx / 2.0);
    const double k2 = discrete_space ? 4.0 * s * s / (dx * dx) : std::numbers::pi * std::numbers::pi;
    const double decay = std::exp(-cfg.nu * k2 * cfg.horizon);
    return (tr.states.col(tr.n_times() - 1) - decay * y0).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Tridiagonal, MatchesDenseSolve) {
    std::mt19937_64 rng(3);
    const std::size_t n = 17;
    const auto solver = TridiagonalSolver::constant(n, -0.7, 2.5, -0.4);
    const Vector b = test::random_vector(rng, static_cast<Eigen::Index>(n));
    Vector x = b;
    solver.solve({x.data(), n});
    const Vector ref = dense_tridiagonal(n, -0.7, 2.5, -0.4).partialPivLu().solve(b);
    EXPECT_LT((x - ref).norm(), 1e-12 * ref.norm());
}

TEST(Tridiagonal, VariableBands) {
    std::vector<double> lo{0.0, 1.0, -2.0, 0.5}, d{4.0, 5.0, 6.0, 3.0}, up{1.0, 0.3, -1.0, 0.0};
    TridiagonalSolver s(lo, d, up);
    Matrix a = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
        a(i, i) = d[i];
        if (i > 0) a(i, i - 1) = lo[i];
        if (i < 3) a(i, i + 1) = up[i];
    }
    Vector b(4);
    b << 1.0, -2.0, 3.0, 0.25;
    Vector x = b;
    s.solve({x.data(), 4});
    EXPECT_LT((a * x - b).norm(), 1e-13);
}

TEST(Tridiagonal, RejectsBadInput) {
    EXPECT_THROW(TridiagonalSolver({0.0}, {1.0, 2.0}, {0.0, 0.0}), ShapeError);
    EXPECT_THROW(TridiagonalSolver::constant(3, 1.0, 0.0, 1.0), SingularFitError);
    auto s = TridiagonalSolver::constant(3, -1.0, 3.0, -1.0);
    std::vector<double> short_rhs(2, 1.0);
    EXPECT_THROW(s.solve(short_rhs), ShapeError);
}

TEST(HeatInitialCondition, Values) {
    Vector x(3);
    x << 0.0, 1.0, 0.5;
    const Vector g = fom::heat_initial_condition(x);
    EXPECT_NEAR(g[0], 1.0, 1e-15);
    EXPECT_NEAR(g[1], 1.0, 1e-15);
    EXPECT_NEAR(g[2] / 3.857e-22, 1.0, 1e-3);
}

TEST(HeatSolver, AnalyticSineMode) {
    const double err = analytic_error(101);
    EXPECT_LT(err, 1e-4);
}

TEST(HeatSolver, SecondOrderInTime) {
    const double coarse = analytic_error(101, true);
    const double fine = analytic_error(201, true);
    const double ratio = coarse / fine;
    EXPECT_GT(ratio, 3.0);
    EXPECT_LT(ratio, 5.0);
}

TEST(HeatSolver, ConstantEquilibrium) {
    fom::HeatConfig cfg;
    cfg.nu = 2.0;
    cfg.horizon = 0.2;
    cfg.n_times = 51;
    const double c = 0.83;
    const Trajectory tr = fom::solve_heat(cfg, [c](double) { return c; }, Vector::Constant(cfg.n_interior, c));
    EXPECT_LT((tr.states.array() - c).abs().maxCoeff(), 1e-10);
}

TEST(HeatSolver, LinearSteadyStateIsFixedPoint) {
    // With equal boundary values the discrete steady state is the constant; a
    // pure Crank-Nicolson run must keep it exactly.
    fom::HeatConfig cfg;
    cfg.nu = 0.1;
    cfg.n_interior = 63;
    cfg.horizon = 1.0;
    cfg.n_times = 21;
    cfg.startup_euler_steps = 0;
    const Trajectory tr = fom::solve_heat(cfg, [](double) { return -1.5; }, Vector::Constant(63, -1.5));
    EXPECT_LT((tr.states.array() + 1.5).abs().maxCoeff(), 1e-12);
}

TEST(HeatSolver, ShapesAndInputs) {
    fom::HeatConfig cfg;
    cfg.nu = 0.5;
    cfg.horizon = 1.0;
    cfg.n_times = 1001;
    MultiSineSignal bc{1.0, {0.2}, {1.0}, {0.0}};
    const Trajectory tr = fom::solve_heat(cfg, bc, fom::heat_initial_condition(fom::heat_grid(cfg)));
    EXPECT_EQ(tr.states.rows(), 1023);
    EXPECT_EQ(tr.states.cols(), 1001);
    EXPECT_EQ(tr.inputs.rows(), 1);
    EXPECT_DOUBLE_EQ(tr.t_eval.back(), 1.0);
    for (Eigen::Index k = 0; k < tr.n_times(); k += 100) EXPECT_DOUBLE_EQ(tr.inputs(0, k), bc(tr.t_eval[k]));
    EXPECT_NO_THROW(tr.validate());
}

TEST(HeatSolver, SymmetricBoundaryKeepsSymmetry) {
    fom::HeatConfig cfg;
    cfg.nu = 0.5;
    cfg.n_interior = 101;
    cfg.horizon = 0.5;
    cfg.n_times = 51;
    MultiSineSignal bc{1.0, {0.3, 0.1}, {2.0, 0.7}, {0.4, 1.1}};
    const Trajectory tr = fom::solve_heat(cfg, bc, fom::heat_initial_condition(fom::heat_grid(cfg)));
    const Matrix flipped = tr.states.colwise().reverse();
    EXPECT_LT((tr.states - flipped).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(HeatSolver, RejectsInvalidConfig) {
    fom::HeatConfig cfg;
    cfg.n_interior = 2;
    EXPECT_THROW(fom::solve_heat(cfg, [](double) { return 0.0; }, Vector::Zero(2)), ConfigError);
    cfg = {};
    EXPECT_THROW(fom::solve_heat(cfg, [](double) { return 0.0; }, Vector::Zero(5)), ShapeError);
}
