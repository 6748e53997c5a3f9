#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "test_support.hpp"

using namespace opinf;

namespace {

Matrix orthonormal(std::mt19937_64& rng, Eigen::Index n, Eigen::Index r) {
    const Matrix q = Eigen::HouseholderQR<Matrix>(test::random_matrix(rng, n, r)).householderQ();
    return q.leftCols(r);
}

/// Hand-built bundle with stable operators at every node.
ModelBundle small_bundle(Equation eq, std::mt19937_64& rng, Eigen::Index n = 12, Eigen::Index r = 3) {
    ModelBundle b;
    b.equation = eq;
    b.modes = r;
    b.lambda = 0.25;
    b.ode = OdeMethod::rk4;
    b.basis.equation = eq;
    b.basis.phi = orthonormal(rng, n, r);
    b.basis.singular_values = Vector::LinSpaced(n, static_cast<double>(n), 1.0);
    b.t_eval_train = uniform_time_grid(1.0, 11);
    const auto m = static_cast<Eigen::Index>(input_dim(eq));
    const std::vector<double> nodes = eq == Equation::heat ? std::vector<double>{0.1, 0.5, 2.0}
                                                           : std::vector<double>{0.01, 0.02, 0.05, 0.1};
    for (double p : nodes) {
        ReducedOperators o;
        o.A = -2.0 * Matrix::Identity(r, r) + test::random_matrix(rng, r, r, 0.2);
        if (has_quadratic(eq)) o.H = test::random_symmetric_tensor(rng, r, 0.05);
        o.B = test::random_matrix(rng, r, m);
        o.c = test::random_vector(rng, r, 0.1);
        b.operators.emplace(p, o);
        b.fit_residuals.emplace(p, 0.01 * p);
    }
    return b;
}

double rk4_decay_error(int steps) {
    ReducedOperators o{-Matrix::Identity(1, 1), std::nullopt, Matrix::Zero(1, 1), Vector::Zero(1)};
    const auto t = uniform_time_grid(1.0, steps + 1);
    RomOptions ro;
    ro.method = OdeMethod::rk4;
    const Matrix a = integrate_rom(o, Vector::Ones(1), Matrix::Zero(1, steps + 1), t, ro);
    return std::abs(a(0, steps) - std::exp(-1.0));
}

}  // namespace

TEST(RomRhs, HandComputedExample) {
    // A = [[1]], H = [[[2]]], B = [[3]], c = [4], a = 2, u = 1:
    // 1*2 + 2*2*2 + 3*1 + 4 = 17.
    Tensor3 H(1);
    H(0, 0, 0) = 2.0;
    ReducedOperators o{Matrix::Constant(1, 1, 1.0), H, Matrix::Constant(1, 1, 3.0), Vector::Constant(1, 4.0)};
    EXPECT_DOUBLE_EQ(rom_rhs(o, Vector::Constant(1, 2.0), Vector::Ones(1))[0], 17.0);
    EXPECT_THROW(rom_rhs(o, Vector::Ones(2), Vector::Ones(1)), ShapeError);
}

TEST(RomRhs, QuadraticTermMatchesKroneckerForm) {
    std::mt19937_64 rng(41);
    const Tensor3 H = test::random_symmetric_tensor(rng, 4);
    const Vector a = test::random_vector(rng, 4);
    Vector kron(16);
    for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) kron[j * 4 + k] = a[j] * a[k];
    const Matrix Hm = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(H.data.data(), 4, 16);
    EXPECT_LT((H.contract(a) - Hm * kron).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(IntegrateRom, Rk4ExponentialDecay) {
    EXPECT_LT(rk4_decay_error(100), 1e-8);
    const double ratio = rk4_decay_error(50) / rk4_decay_error(100);
    EXPECT_GT(ratio, 14.0);
    EXPECT_LT(ratio, 18.0);
}

TEST(IntegrateRom, AdaptiveMatchesClosedForm) {
    // a' = -2a + u with u = sin t has a closed-form solution.
    ReducedOperators o{Matrix::Constant(1, 1, -2.0), std::nullopt, Matrix::Ones(1, 1), Vector::Zero(1)};
    const auto t = uniform_time_grid(3.0, 301);
    Matrix u(1, 301);
    for (int k = 0; k < 301; ++k) u(0, k) = std::sin(t[static_cast<std::size_t>(k)]);
    RomOptions ro;
    ro.rtol = 1e-10;
    ro.atol = 1e-12;
    const Matrix a = integrate_rom(o, Vector::Ones(1), u, t, ro);
    double worst = 0.0;
    for (int k = 0; k < 301; ++k) {
        const double s = t[static_cast<std::size_t>(k)];
        const double exact = (2.0 * std::sin(s) - std::cos(s)) / 5.0 + 1.2 * std::exp(-2.0 * s);
        worst = std::max(worst, std::abs(a(0, k) - exact));
    }
    // Input is linearly interpolated between samples (dt = 0.01).
    EXPECT_LT(worst, 2e-5);
}

TEST(IntegrateRom, ConstantInputGivesLinearGrowth) {
    ReducedOperators o{Matrix::Zero(2, 2), std::nullopt, Matrix::Identity(2, 2), Vector::Zero(2)};
    const auto t = uniform_time_grid(2.0, 21);
    Matrix u(2, 21);
    u.row(0).setConstant(0.5);
    u.row(1).setConstant(-1.5);
    for (auto m : {OdeMethod::rk4, OdeMethod::adaptive}) {
        RomOptions ro;
        ro.method = m;
        const Matrix a = integrate_rom(o, Vector::Zero(2), u, t, ro);
        EXPECT_NEAR(a(0, 20), 1.0, 1e-12);
        EXPECT_NEAR(a(1, 20), -3.0, 1e-12);
    }
}

TEST(IntegrateRom, DivergenceRaises) {
    Tensor3 H(1);
    H(0, 0, 0) = 1.0;
    ReducedOperators o{Matrix::Zero(1, 1), H, Matrix::Zero(1, 1), Vector::Zero(1)};  // blows up at t = 1
    const auto t = uniform_time_grid(2.0, 201);
    for (auto m : {OdeMethod::rk4, OdeMethod::adaptive}) {
        RomOptions ro;
        ro.method = m;
        EXPECT_THROW(integrate_rom(o, Vector::Ones(1), Matrix::Zero(1, 201), t, ro), DivergenceError);
    }
}

TEST(Bundle, SaveLoadRoundTrip) {
    std::mt19937_64 rng(42);
    for (Equation eq : {Equation::heat, Equation::burgers}) {
        ModelBundle b = small_bundle(eq, rng);
        b.basis.projection_weight = 0.5;
        test::TempDir dir("bundle");
        save_bundle(b, dir.path());
        const ModelBundle back = load_bundle(dir.path());
        EXPECT_EQ(back.equation, eq);
        EXPECT_EQ(back.modes, b.modes);
        EXPECT_EQ(back.lambda, b.lambda);
        EXPECT_EQ(back.ode, b.ode);
        EXPECT_EQ(back.basis.phi, b.basis.phi);
        EXPECT_EQ(back.basis.singular_values, b.basis.singular_values);
        EXPECT_EQ(back.basis.projection_weight, 0.5);
        EXPECT_EQ(back.t_eval_train, b.t_eval_train);
        EXPECT_EQ(back.fit_residuals, b.fit_residuals);
        ASSERT_EQ(back.params(), b.params());
        for (const auto& [p, o] : b.operators) {
            const ReducedOperators& q = back.operators.at(p);
            EXPECT_EQ(q.A, o.A);
            EXPECT_EQ(q.B, o.B);
            EXPECT_EQ(q.c, o.c);
            EXPECT_EQ(q.H.has_value(), o.H.has_value());
            if (o.H) {
                EXPECT_EQ(q.H->data, o.H->data);
            }
        }
    }
}

TEST(Bundle, TamperedTensorIsRejected) {
    std::mt19937_64 rng(43);
    const ModelBundle b = small_bundle(Equation::burgers, rng);
    test::TempDir dir("bundle_tamper");
    save_bundle(b, dir.path());
    // Break the (j, k) symmetry of H at the first node.
    const auto hfile = dir / ("op_" + io::param_tag(0.01) + "_H.f64");
    std::vector<double> h = io::read_f64(hfile, 27);
    h[1] += 1.0;  // H(0, 0, 1) without H(0, 1, 0)
    io::write_f64(hfile, h);
    EXPECT_THROW(load_bundle(dir.path()), FormatError);
}

TEST(Bundle, MissingOrTruncatedFilesAreRejected) {
    std::mt19937_64 rng(44);
    const ModelBundle b = small_bundle(Equation::heat, rng);
    {
        test::TempDir dir("bundle_missing");
        save_bundle(b, dir.path());
        std::filesystem::remove(dir / "basis.f64");
        EXPECT_THROW(load_bundle(dir.path()), Error);
    }
    {
        test::TempDir dir("bundle_short");
        save_bundle(b, dir.path());
        std::filesystem::resize_file(dir / "sv.f64", 16);
        EXPECT_THROW(load_bundle(dir.path()), FormatError);
    }
    {
        test::TempDir dir("bundle_json");
        save_bundle(b, dir.path());
        std::ofstream(dir / "manifest.json") << "{\"format_version\": 1}";
        EXPECT_THROW(load_bundle(dir.path()), FormatError);
    }
    EXPECT_THROW(load_bundle("/nonexistent/opinf/bundle"), Error);
}

TEST(Predict, ExactNodeUsesStoredOperators) {
    std::mt19937_64 rng(45);
    const ModelBundle b = small_bundle(Equation::heat, rng);
    for (auto pm : {ParamMethod::regression, ParamMethod::interpolation}) {
        PredictOptions opt;
        opt.param_method = pm;
        EXPECT_EQ(operators_at(b, 0.5, opt).A, b.operators.at(0.5).A);
        EXPECT_EQ(operators_at(b, 0.5 * (1.0 + 1e-14), opt).A, b.operators.at(0.5).A);
    }
    PredictOptions interp;
    interp.param_method = ParamMethod::interpolation;
    const ReducedOperators mid = operators_at(b, 0.3, interp);
    EXPECT_LT((mid.A - 0.5 * (b.operators.at(0.1).A + b.operators.at(0.5).A)).norm(), 1e-13);
}

TEST(Predict, StatesLieInBasisSpan) {
    std::mt19937_64 rng(46);
    const ModelBundle b = small_bundle(Equation::burgers, rng);
    const auto t = uniform_time_grid(2.0, 41);
    const Matrix u = test::random_matrix(rng, 3, 41, 0.5);
    const Vector y0 = test::random_vector(rng, 12);
    const Matrix y = predict(b, 0.03, u, t, y0);
    ASSERT_EQ(y.rows(), 12);
    ASSERT_EQ(y.cols(), 41);
    const Matrix& phi = b.basis.phi;
    EXPECT_LT((y - phi * (phi.transpose() * y)).norm(), 1e-12 * y.norm());
    // The first column is the projected initial state.
    EXPECT_LT((y.col(0) - phi * (phi.transpose() * y0)).norm(), 1e-12);
    EXPECT_THROW(predict(b, 0.03, test::random_matrix(rng, 1, 41), t, y0), ShapeError);
    EXPECT_THROW(predict(b, 0.03, u, t, Vector::Zero(5)), ShapeError);
}

TEST(Predict, WeightDoesNotChangeLinearPrediction) {
    // For a linear ROM with c = 0, rescaling coordinates by w and B by w
    // leaves the full-order prediction unchanged.
    std::mt19937_64 rng(47);
    ModelBundle b = small_bundle(Equation::heat, rng);
    for (auto& [p, o] : b.operators) o.c.setZero();
    ModelBundle w = b;
    w.basis.projection_weight = 4.0;
    for (auto& [p, o] : w.operators) o.B *= 4.0;
    const auto t = uniform_time_grid(1.0, 21);
    const Matrix u = test::random_matrix(rng, 1, 21);
    const Vector y0 = test::random_vector(rng, 12);
    EXPECT_LT((predict(b, 0.5, u, t, y0) - predict(w, 0.5, u, t, y0)).norm(), 1e-12);
}

TEST(Train, DefaultOptions) {
    const TrainOptions h = default_train_options(Equation::heat);
    EXPECT_EQ(h.modes, 6);
    EXPECT_EQ(h.lambda, 1e-6);
    EXPECT_EQ(h.projection_weight, 1.0);
    const TrainOptions bg = default_train_options(Equation::burgers);
    EXPECT_EQ(bg.modes, 10);
    EXPECT_EQ(bg.lambda, 0.5);
    const TrainOptions c = default_train_options(Equation::cavity);
    EXPECT_EQ(c.modes, 20);
    EXPECT_EQ(c.lambda, 3.0);
    EXPECT_EQ(c.ode, OdeMethod::rk4);
    EXPECT_NEAR(c.projection_weight, 1.0 / 33.0, 1e-15);
}
