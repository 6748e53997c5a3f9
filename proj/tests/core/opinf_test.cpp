#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace opinf;

namespace {

struct Synthetic {
    ReducedOperators truth;
    Matrix a, da, u;
};

/// Random operators and snapshots with exact derivatives da = rhs(a, u).
Synthetic make_synthetic(std::mt19937_64& rng, Eigen::Index r, Eigen::Index m, Eigen::Index K, bool quad) {
    Synthetic s;
    s.truth.A = test::random_matrix(rng, r, r);
    if (quad) s.truth.H = test::random_symmetric_tensor(rng, r);
    s.truth.B = test::random_matrix(rng, r, m);
    s.truth.c = test::random_vector(rng, r);
    s.a = test::random_matrix(rng, r, K);
    s.u = test::random_matrix(rng, m, K);
    s.da.resize(r, K);
    for (Eigen::Index k = 0; k < K; ++k) s.da.col(k) = rom_rhs(s.truth, s.a.col(k), s.u.col(k));
    return s;
}

Matrix stacked(const ReducedOperators& o) {
    const Eigen::Index r = o.r();
    Matrix out(r, r + (o.H ? r * r : 0) + o.m() + 1);
    out.leftCols(r) = o.A;
    if (o.H) out.middleCols(r, r * r) = Eigen::Map<const Matrix>(o.H->data.data(), r * r, r).transpose();
    out.middleCols(out.cols() - o.m() - 1, o.m()) = o.B;
    out.col(out.cols() - 1) = o.c;
    return out;
}

double objective(const ReducedOperators& o, const Synthetic& s, double lambda) {
    double res = 0.0;
    for (Eigen::Index k = 0; k < s.a.cols(); ++k) res += (rom_rhs(o, s.a.col(k), s.u.col(k)) - s.da.col(k)).squaredNorm();
    const double n = operator_norm(o);
    return res + lambda * n * n;
}

}  // namespace

TEST(CompactFeatures, Examples) {
    Vector a(2);
    a << 2.0, 3.0;
    const Vector q = compact_quadratic_features(a);
    ASSERT_EQ(q.size(), 3);
    EXPECT_EQ(q[0], 4.0);
    EXPECT_EQ(q[1], 6.0);
    EXPECT_EQ(q[2], 9.0);
    Vector e = Vector::Zero(4);
    e[0] = 1.0;
    const Vector qe = compact_quadratic_features(e);
    EXPECT_EQ(qe[0], 1.0);
    EXPECT_EQ(qe.tail(qe.size() - 1).norm(), 0.0);
    EXPECT_EQ(compact_quadratic_features(Vector::Zero(3)).norm(), 0.0);
    EXPECT_EQ(compact_size(10), 55);
}

TEST(OperatorNorm, Examples) {
    ReducedOperators o{Matrix::Identity(2, 2), std::nullopt, Matrix::Zero(2, 1), Vector::Zero(2)};
    EXPECT_NEAR(operator_norm(o), std::sqrt(2.0), 1e-15);
    ReducedOperators z{Matrix::Zero(3, 3), Tensor3(3), Matrix::Zero(3, 2), Vector::Zero(3)};
    EXPECT_EQ(operator_norm(z), 0.0);
    std::mt19937_64 rng(1);
    ReducedOperators g{test::random_matrix(rng, 3, 3), test::random_symmetric_tensor(rng, 3), test::random_matrix(rng, 3, 2),
                       test::random_vector(rng, 3)};
    ReducedOperators scaled = g;
    scaled.A *= -2.5;
    for (double& v : scaled.H->data) v *= -2.5;
    scaled.B *= -2.5;
    scaled.c *= -2.5;
    EXPECT_NEAR(operator_norm(scaled), 2.5 * operator_norm(g), 1e-12);
}

TEST(FitOperators, ExactRecoveryQuadratic) {
    std::mt19937_64 rng(21);
    for (Eigen::Index r : {2, 3, 5}) {
        const Synthetic s = make_synthetic(rng, r, 2, 4 * (r + compact_size(r) + 3), true);
        const FitResult f = fit_operators(s.a, s.da, s.u, {0.0, true});
        EXPECT_LT(test::rel_diff(stacked(f.ops), stacked(s.truth)), 1e-8) << "r=" << r;
        EXPECT_LT(f.residual, 1e-8 * s.da.norm());
    }
}

TEST(FitOperators, ExactRecoveryLinear) {
    std::mt19937_64 rng(22);
    const Synthetic s = make_synthetic(rng, 4, 1, 40, false);
    const FitResult f = fit_operators(s.a, s.da, s.u, {0.0, false});
    EXPECT_FALSE(f.ops.H.has_value());
    EXPECT_LT(test::rel_diff(stacked(f.ops), stacked(s.truth)), 1e-10);
}

TEST(FitOperators, PooledBlocksEqualConcatenation) {
    std::mt19937_64 rng(23);
    const Synthetic s = make_synthetic(rng, 3, 1, 60, true);
    Matrix noisy = s.da + test::random_matrix(rng, 3, 60, 0.1);
    const FitResult whole = fit_operators(s.a, noisy, s.u, {0.5, true});
    std::vector<FitBlock> blocks{{s.a.leftCols(25), noisy.leftCols(25), s.u.leftCols(25)},
                                 {s.a.rightCols(35), noisy.rightCols(35), s.u.rightCols(35)}};
    const FitResult split = fit_operators(blocks, {0.5, true});
    EXPECT_LT(test::rel_diff(stacked(split.ops), stacked(whole.ops)), 1e-11);
    EXPECT_NEAR(split.objective, whole.objective, 1e-10 * whole.objective);
    EXPECT_EQ(split.n_rows, 60);
}

TEST(FitOperators, ZeroTargetWithRidgeGivesZero) {
    std::mt19937_64 rng(24);
    const Matrix a = test::random_matrix(rng, 3, 30), u = test::random_matrix(rng, 1, 30);
    const FitResult f = fit_operators(a, Matrix::Zero(3, 30), u, {1e-3, true});
    EXPECT_LT(operator_norm(f.ops), 1e-12);
}

TEST(FitOperators, StationaryUnderPerturbation) {
    std::mt19937_64 rng(25);
    Synthetic s = make_synthetic(rng, 3, 2, 50, true);
    s.da += test::random_matrix(rng, 3, 50, 0.3);
    const double lambda = 0.7;
    const FitResult f = fit_operators(s.a, s.da, s.u, {lambda, true});
    const double base = objective(f.ops, s, lambda);
    EXPECT_NEAR(base, f.objective, 1e-9 * base);
    for (int trial = 0; trial < 20; ++trial) {
        ReducedOperators p = f.ops;
        const double eps = 1e-4;
        p.A += eps * test::random_matrix(rng, 3, 3);
        const Tensor3 dh = test::random_symmetric_tensor(rng, 3);
        for (std::size_t i = 0; i < dh.data.size(); ++i) p.H->data[i] += eps * dh.data[i];
        p.B += eps * test::random_matrix(rng, 3, 2);
        p.c += eps * test::random_vector(rng, 3);
        EXPECT_GE(objective(p, s, lambda), base - 1e-12 * base);
    }
}

TEST(FitOperators, NormNonIncreasingInLambda) {
    std::mt19937_64 rng(26);
    Synthetic s = make_synthetic(rng, 4, 1, 80, true);
    s.da += test::random_matrix(rng, 4, 80, 0.5);
    double prev = std::numeric_limits<double>::infinity();
    for (double lam : {0.0, 1e-6, 1e-4, 1e-2, 1e-1, 1.0, 10.0, 100.0}) {
        const double n = operator_norm(fit_operators(s.a, s.da, s.u, {lam, true}).ops);
        EXPECT_LE(n, prev + 1e-9) << "lambda=" << lam;
        prev = n;
    }
}

TEST(FitOperators, SymmetricTensorMatchesCompactWeights) {
    std::mt19937_64 rng(27);
    Synthetic s = make_synthetic(rng, 4, 1, 60, true);
    s.da += test::random_matrix(rng, 4, 60, 0.2);
    const FitResult f = fit_operators(s.a, s.da, s.u, {0.1, true});
    EXPECT_EQ(f.ops.H->asymmetry(), 0.0);
    // Contraction against (a, a) equals the compact features times their
    // fitted weights H(i,j,j) and 2 H(i,j,k).
    const Vector a = test::random_vector(rng, 4);
    Vector via_compact = Vector::Zero(4);
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 4; ++j)
            for (Eigen::Index k = j; k < 4; ++k)
                via_compact[i] += (j == k ? 1.0 : 2.0) * (*f.ops.H)(i, j, k) * a[j] * a[k];
    EXPECT_LT((f.ops.H->contract(a) - via_compact).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitOperators, SingularSystemAtZeroLambda) {
    std::mt19937_64 rng(28);
    Matrix a = test::random_matrix(rng, 3, 40);
    a.row(2) = a.row(1);  // duplicated mode makes the features rank deficient
    const Matrix u = test::random_matrix(rng, 1, 40), da = test::random_matrix(rng, 3, 40);
    EXPECT_THROW(fit_operators(a, da, u, {0.0, true}), SingularFitError);
    EXPECT_NO_THROW(fit_operators(a, da, u, {1e-2, true}));
}

TEST(FitOperators, RejectsBadInput) {
    EXPECT_THROW(fit_operators(std::vector<FitBlock>{}, {0.1, true}), InsufficientDataError);
    EXPECT_THROW(fit_operators(Matrix::Ones(2, 5), Matrix::Ones(2, 4), Matrix::Ones(1, 5), {0.1, true}), ShapeError);
    EXPECT_THROW(fit_operators(Matrix::Ones(2, 5), Matrix::Ones(2, 5), Matrix::Ones(1, 5), {-1.0, true}), ConfigError);
    EXPECT_THROW(fit_operators(Matrix::Ones(2, 5), Matrix::Ones(2, 5), Matrix::Ones(1, 5),
                               {std::numeric_limits<double>::quiet_NaN(), true}),
                 ConfigError);
}

TEST(FitAllParameters, OneFitPerParameter) {
    // Two small heat-like parameter groups built by hand.
    SnapshotDataset ds;
    ds.equation = Equation::heat;
    std::mt19937_64 rng(29);
    for (double p : {0.5, 0.1, 0.5}) {
        Trajectory t;
        t.equation = Equation::heat;
        t.param = p;
        t.t_eval = uniform_time_grid(1.0, 30);
        t.states = test::random_matrix(rng, 12, 30);
        t.inputs = test::random_matrix(rng, 1, 30);
        ds.records.push_back({t, static_cast<int>(ds.records.size()), 0});
    }
    ds.sort();
    const PodBasis basis = compute_pod(ds, 3);
    const auto fits = fit_all_parameters(ds, basis, {1e-3, false});
    ASSERT_EQ(fits.size(), 2u);
    EXPECT_EQ(fits.at(0.5).n_rows, 60);
    EXPECT_EQ(fits.at(0.1).n_rows, 30);
    PodBasis wrong = basis;
    wrong.equation = Equation::burgers;
    EXPECT_THROW(fit_all_parameters(ds, wrong, {1e-3, false}), ConfigError);
}
