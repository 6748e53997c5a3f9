#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "opinf/dataset.hpp"

namespace opinf {

/// Orthonormal spatial modes of a snapshot collection.
struct PodBasis {
    Equation equation = Equation::heat;
    Matrix phi;                     // n x r, orthonormal columns
    Vector singular_values;         // full spectrum, non-increasing
    /// Coefficients are weight * phi^T y; reconstruction divides it back out.
    /// 1 gives plain Euclidean coordinates.
    double projection_weight = 1.0;

    Eigen::Index n_space() const { return phi.rows(); }
    Eigen::Index n_modes() const { return phi.cols(); }
};

inline double energy_fraction(const Vector& sv, Eigen::Index r) {
    if (r < 0 || r > sv.size()) throw ShapeError("energy_fraction: r outside [0, len(sv)]");
    const double total = sv.squaredNorm();
    if (!(total > 0.0)) throw UndefinedMetricError("energy_fraction: all singular values are zero");
    return sv.head(r).squaredNorm() / total;
}

namespace detail {

/// Flip each column so that its largest-magnitude entry is positive.
inline void fix_signs(Matrix& phi) {
    for (Eigen::Index j = 0; j < phi.cols(); ++j) {
        Eigen::Index imax = 0;
        phi.col(j).cwiseAbs().maxCoeff(&imax);
        if (phi(imax, j) < 0.0) phi.col(j) *= -1.0;
    }
}

}  // namespace detail

/// Streaming POD of a horizontal concatenation of snapshot blocks.
///
/// While the total column count stays at or below n the blocks are kept and
/// the concatenated matrix is decomposed directly by a thin SVD. Past that,
/// the n x n Gram matrix Y Y^T is accumulated block by block and
/// eigendecomposed, which is the cheaper side for long time series and needs
/// no snapshot storage. Singular values under the numerical-rank threshold
/// are reported as zero.
class PodAccumulator {
public:
    void add(const Matrix& block) {
        if (n_ < 0) n_ = block.rows();
        if (block.rows() != n_) throw ShapeError("compute_pod: snapshot blocks differ in row count");
        K_ += block.cols();
        if (gram_.size() == 0 && K_ <= n_) {
            kept_.push_back(block);
            return;
        }
        if (gram_.size() == 0) {
            gram_ = Matrix::Zero(n_, n_);
            for (const Matrix& k : kept_) gram_.selfadjointView<Eigen::Lower>().rankUpdate(k);
            kept_.clear();
        }
        gram_.selfadjointView<Eigen::Lower>().rankUpdate(block);
    }

    Eigen::Index n_space() const { return n_; }
    Eigen::Index n_snapshots() const { return K_; }

    PodBasis finish(Eigen::Index r, Equation eq) const {
        if (K_ == 0) throw InsufficientDataError("compute_pod: no snapshots");
        if (r < 1 || r > std::min(n_, K_)) {
            throw ShapeError("compute_pod: r must lie in [1, min(n, total snapshots)]");
        }
        constexpr double eps = std::numeric_limits<double>::epsilon();
        Matrix U;
        Vector sv;
        if (gram_.size() == 0) {
            Matrix Y(n_, K_);
            Eigen::Index c = 0;
            for (const Matrix& b : kept_) {
                Y.middleCols(c, b.cols()) = b;
                c += b.cols();
            }
            Eigen::BDCSVD<Matrix> svd(Y, Eigen::ComputeThinU);
            sv = svd.singularValues();
            U = svd.matrixU();
            const double tol = sv.size() ? sv[0] * static_cast<double>(std::max(n_, K_)) * eps : 0.0;
            for (Eigen::Index i = 0; i < sv.size(); ++i)
                if (sv[i] <= tol) sv[i] = 0.0;
        } else {
            Eigen::SelfAdjointEigenSolver<Matrix> es;
            es.compute(gram_.selfadjointView<Eigen::Lower>());
            if (es.info() != Eigen::Success) throw RankDeficiencyError("compute_pod: eigendecomposition failed");
            const Vector lam = es.eigenvalues().reverse();
            U = es.eigenvectors().rowwise().reverse();
            const double tol = lam.size() ? lam[0] * static_cast<double>(n_) * eps : 0.0;
            sv = lam.unaryExpr([tol](double l) { return l > tol ? std::sqrt(l) : 0.0; });
        }

        Eigen::Index rank = 0;
        while (rank < sv.size() && sv[rank] > 0.0) ++rank;
        if (r > rank) {
            std::ostringstream os;
            os << "compute_pod: requested " << r << " modes but the snapshots have numerical rank " << rank;
            throw RankDeficiencyError(os.str());
        }

        PodBasis basis;
        basis.equation = eq;
        basis.phi = U.leftCols(r);
        detail::fix_signs(basis.phi);
        basis.singular_values = sv;
        return basis;
    }

private:
    Eigen::Index n_ = -1;
    Eigen::Index K_ = 0;
    std::vector<Matrix> kept_;
    Matrix gram_;
};

inline PodBasis compute_pod(const std::vector<const Matrix*>& blocks, Eigen::Index r, Equation eq = Equation::heat) {
    PodAccumulator acc;
    for (const Matrix* b : blocks) acc.add(*b);
    return acc.finish(r, eq);
}

inline PodBasis compute_pod(const TrajectorySource& src, Eigen::Index r) {
    PodAccumulator acc;
    for (std::size_t i = 0; i < src.size(); ++i) acc.add(src.get(i)->states);
    return acc.finish(r, src.equation());
}

inline PodBasis compute_pod(const SnapshotDataset& ds, Eigen::Index r) {
    return compute_pod(TrajectorySource::from(ds), r);
}

/// First r modes of an existing basis (same spectrum).
inline PodBasis truncate(const PodBasis& b, Eigen::Index r) {
    if (r < 1 || r > b.n_modes()) throw ShapeError("truncate: r outside [1, n_modes]");
    PodBasis t = b;
    t.phi = b.phi.leftCols(r);
    return t;
}

inline Matrix project(const PodBasis& b, const Matrix& states) {
    if (states.rows() != b.n_space()) throw ShapeError("project: state rows differ from basis n_space");
    Matrix a = b.phi.transpose() * states;
    if (b.projection_weight != 1.0) a *= b.projection_weight;
    return a;
}

inline Vector project(const PodBasis& b, const Vector& state) {
    if (state.size() != b.n_space()) throw ShapeError("project: state length differs from basis n_space");
    return b.projection_weight * (b.phi.transpose() * state);
}

inline Matrix reconstruct(const PodBasis& b, const Matrix& coeffs) {
    if (coeffs.rows() != b.n_modes()) throw ShapeError("reconstruct: coefficient rows differ from n_modes");
    Matrix y = b.phi * coeffs;
    if (b.projection_weight != 1.0) y /= b.projection_weight;
    return y;
}

}  // namespace opinf
