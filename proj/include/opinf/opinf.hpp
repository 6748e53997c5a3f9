#pragma once

// Operator inference: least-squares identification of
//   da/dt = A a + H(a, a) + B u + c
// from projected snapshot data, with Tikhonov regularization.

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "opinf/pod.hpp"

namespace opinf {

/// Dense r x r x r tensor, row-major in (i, j, k).
struct Tensor3 {
    Eigen::Index n = 0;
    std::vector<double> data;

    Tensor3() = default;
    explicit Tensor3(Eigen::Index size) : n(size), data(static_cast<std::size_t>(size * size * size), 0.0) {}

    double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) {
        return data[static_cast<std::size_t>((i * n + j) * n + k)];
    }
    double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
        return data[static_cast<std::size_t>((i * n + j) * n + k)];
    }

    double squared_norm() const {
        double s = 0.0;
        for (double v : data) s += v * v;
        return s;
    }

    /// out_i = sum_{j,k} H[i,j,k] a_j a_k
    Vector contract(const Vector& a) const {
        Vector out = Vector::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double acc = 0.0;
            const double* h = &data[static_cast<std::size_t>(i * n * n)];
            for (Eigen::Index j = 0; j < n; ++j) {
                double row = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) row += h[j * n + k] * a[k];
                acc += a[j] * row;
            }
            out[i] = acc;
        }
        return out;
    }

    /// Largest |H[i,j,k] - H[i,k,j]|.
    double asymmetry() const {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index k = j + 1; k < n; ++k) worst = std::max(worst, std::abs((*this)(i, j, k) - (*this)(i, k, j)));
        return worst;
    }

    bool operator==(const Tensor3&) const = default;
};

struct ReducedOperators {
    Matrix A;                  // r x r
    std::optional<Tensor3> H;  // absent for linear models
    Matrix B;                  // r x m
    Vector c;                  // r

    Eigen::Index r() const { return A.rows(); }
    Eigen::Index m() const { return B.cols(); }

    bool all_finite() const {
        bool ok = A.allFinite() && B.allFinite() && c.allFinite();
        if (H) {
            for (double v : H->data) ok = ok && std::isfinite(v);
        }
        return ok;
    }
};

inline double operator_norm(const ReducedOperators& ops) {
    double s = ops.A.squaredNorm() + ops.B.squaredNorm() + ops.c.squaredNorm();
    if (ops.H) s += ops.H->squared_norm();
    return std::sqrt(s);
}

struct OpInfConfig {
    double lambda = 0.0;
    bool include_quadratic = true;

    void validate() const {
        if (!std::isfinite(lambda) || lambda < 0.0) throw ConfigError("opinf: lambda must be finite and >= 0");
    }
};

/// Default regularization per equation.
inline double default_lambda(Equation eq) { return default_protocol(eq).lambda; }

inline Eigen::Index compact_size(Eigen::Index r) { return r * (r + 1) / 2; }

/// Products a_i a_j for i <= j in lexicographic (i, j) order.
inline Vector compact_quadratic_features(const Vector& a) {
    const Eigen::Index r = a.size();
    Vector q(compact_size(r));
    Eigen::Index p = 0;
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = i; j < r; ++j) q[p++] = a[i] * a[j];
    return q;
}

/// One block of training data: modal series, their derivatives, inputs.
struct FitBlock {
    Matrix coeffs;   // r x K
    Matrix dcoeffs;  // r x K
    Matrix inputs;   // m x K
};

struct FitResult {
    ReducedOperators ops;
    double residual = 0.0;   // || D O^T - dA ||_F
    double objective = 0.0;  // residual^2 + lambda * ||O||^2
    double condition = 0.0;  // condition number of the regularized normal equations
    Eigen::Index n_rows = 0;
};

namespace detail {

/// Feature row for one snapshot: [a, compact(a) (optional), u, 1].
inline void fill_features(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, const Vector& a, const Vector& u, bool quad) {
    const Eigen::Index r = a.size();
    Eigen::Index p = 0;
    row.segment(p, r) = a.transpose();
    p += r;
    if (quad) {
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = i; j < r; ++j) row[p++] = a[i] * a[j];
    }
    row.segment(p, u.size()) = u.transpose();
    p += u.size();
    row[p] = 1.0;
}

/// Penalty weight per feature column. Off-diagonal quadratic coefficients
/// are split over two symmetric slots of H, so their squared contribution to
/// ||H||_F is half the squared coefficient.
inline Vector penalty_weights(Eigen::Index r, Eigen::Index m, bool quad) {
    const Eigen::Index q = quad ? compact_size(r) : 0;
    Vector g = Vector::Ones(r + q + m + 1);
    if (quad) {
        Eigen::Index p = r;
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = i; j < r; ++j) g[p++] = (i == j) ? 1.0 : 0.5;
    }
    return g;
}

}  // namespace detail

/// Solves
///   min sum_k || A a_k + H(a_k, a_k) + B u_k + c - da_k ||^2
///       + lambda (||A||_F^2 + ||H||_F^2 + ||B||_F^2 + ||c||^2)
/// over all blocks pooled together. H is fitted through the compact
/// quadratic features and expanded to a symmetric tensor.
///
/// The data matrix [D | dA] is reduced block by block with Householder QR;
/// the regularized problem is then solved through an SVD of the small
/// triangular factor. Throws SingularFitError when the regularized normal
/// equations are numerically singular (condition number >= 1/eps).
inline FitResult fit_operators(const std::vector<FitBlock>& blocks, const OpInfConfig& cfg) {
    cfg.validate();
    if (blocks.empty()) throw InsufficientDataError("fit_operators: no data");
    const Eigen::Index r = blocks.front().coeffs.rows();
    const Eigen::Index m = blocks.front().inputs.rows();
    const bool quad = cfg.include_quadratic;
    const Eigen::Index q = quad ? compact_size(r) : 0;
    const Eigen::Index p = r + q + m + 1;
    const Eigen::Index w = p + r;
    const Vector gamma = detail::penalty_weights(r, m, quad);
    const Vector inv_sqrt_gamma = gamma.cwiseSqrt().cwiseInverse();

    Matrix R;  // running triangular factor of the scaled [D | dA]
    Eigen::Index total_rows = 0;
    for (const FitBlock& b : blocks) {
        const Eigen::Index K = b.coeffs.cols();
        if (b.coeffs.rows() != r || b.dcoeffs.rows() != r || b.inputs.rows() != m) {
            throw ShapeError("fit_operators: inconsistent block dimensions");
        }
        if (b.dcoeffs.cols() != K || b.inputs.cols() != K) throw ShapeError("fit_operators: column counts differ");
        total_rows += K;
        Matrix M(R.rows() + K, w);
        if (R.rows()) M.topRows(R.rows()) = R;
        for (Eigen::Index k = 0; k < K; ++k) {
            auto row = M.row(R.rows() + k);
            detail::fill_features(row.head(p), b.coeffs.col(k), b.inputs.col(k), quad);
            row.head(p).array() *= inv_sqrt_gamma.transpose().array();
            row.tail(r) = b.dcoeffs.col(k).transpose();
        }
        Eigen::HouseholderQR<Matrix> qr(M);
        const Eigen::Index keep = std::min(M.rows(), w);
        R = qr.matrixQR().topRows(keep).triangularView<Eigen::Upper>();
    }

    Matrix Rfull = Matrix::Zero(w, w);
    Rfull.topRows(R.rows()) = R;
    const Matrix R11 = Rfull.topLeftCorner(p, p);
    const Matrix rhs = Rfull.topRightCorner(p, r);
    const double tail_sq = Rfull.bottomRightCorner(r, r).squaredNorm();

    Eigen::JacobiSVD<Matrix> svd(R11, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector s = svd.singularValues();
    const double lam = cfg.lambda;
    const double top = s[0] * s[0] + lam;
    const double bottom = s[p - 1] * s[p - 1] + lam;
    const double cond = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
    if (!(cond < 1.0 / std::numeric_limits<double>::epsilon()) && top > 0.0) {
        std::ostringstream os;
        os << "fit_operators: regularized least-squares system is numerically singular (condition " << cond
           << ", lambda=" << lam << "); increase lambda";
        throw SingularFitError(os.str());
    }

    Vector filt(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const double d = s[i] * s[i] + lam;
        filt[i] = d > 0.0 ? s[i] / d : 0.0;
    }
    const Matrix xs = svd.matrixV() * (filt.asDiagonal() * (svd.matrixU().transpose() * rhs));  // scaled
    const Matrix x = inv_sqrt_gamma.asDiagonal() * xs;                                         // p x r

    FitResult res;
    res.n_rows = total_rows;
    res.condition = cond;
    res.residual = std::sqrt((R11 * xs - rhs).squaredNorm() + tail_sq);
    res.objective = res.residual * res.residual + lam * xs.squaredNorm();

    ReducedOperators& ops = res.ops;
    ops.A = x.topRows(r).transpose();
    if (quad) {
        Tensor3 H(r);
        const Matrix wq = x.middleRows(r, q);  // q x r
        Eigen::Index f = 0;
        for (Eigen::Index j = 0; j < r; ++j) {
            for (Eigen::Index k = j; k < r; ++k, ++f) {
                for (Eigen::Index i = 0; i < r; ++i) {
                    if (j == k) {
                        H(i, j, j) = wq(f, i);
                    } else {
                        H(i, j, k) = 0.5 * wq(f, i);
                        H(i, k, j) = 0.5 * wq(f, i);
                    }
                }
            }
        }
        ops.H = std::move(H);
    }
    ops.B = x.middleRows(r + q, m).transpose();
    ops.c = x.row(p - 1).transpose();
    return res;
}

inline FitResult fit_operators(const Matrix& coeffs, const Matrix& dcoeffs, const Matrix& inputs,
                               const OpInfConfig& cfg) {
    return fit_operators(std::vector<FitBlock>{{coeffs, dcoeffs, inputs}}, cfg);
}

inline FitBlock reduced_block(const Trajectory& t, const PodBasis& basis) {
    FitBlock b;
    b.coeffs = project(basis, t.states);
    b.dcoeffs = modal_time_derivatives(b.coeffs, t.t_eval);
    b.inputs = t.inputs;
    return b;
}

/// One fit per training parameter, pooling all trajectories of that parameter.
inline std::map<double, FitResult> fit_all_parameters(const TrajectorySource& src, const PodBasis& basis,
                                                      const OpInfConfig& cfg) {
    if (src.equation() != basis.equation) throw ConfigError("fit_all_parameters: dataset and basis equations differ");
    const auto groups = src.by_param();
    std::vector<std::pair<double, const std::vector<std::size_t>*>> jobs;
    for (const auto& [param, items] : groups) jobs.emplace_back(param, &items);
    std::vector<FitResult> results(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        std::vector<FitBlock> blocks;
        for (std::size_t item : *jobs[i].second) blocks.push_back(reduced_block(*src.get(item), basis));
        try {
            results[i] = fit_operators(blocks, cfg);
        } catch (const SingularFitError& e) {
            std::ostringstream os;
            os << e.what() << " [param=" << jobs[i].first << "]";
            throw SingularFitError(os.str());
        }
    });
    std::map<double, FitResult> out;
    for (std::size_t i = 0; i < jobs.size(); ++i) out.emplace(jobs[i].first, std::move(results[i]));
    return out;
}

inline std::map<double, FitResult> fit_all_parameters(const SnapshotDataset& ds, const PodBasis& basis,
                                                      const OpInfConfig& cfg) {
    return fit_all_parameters(TrajectorySource::from(ds), basis, cfg);
}

}  // namespace opinf
