#pragma once

#include <cmath>
#include <numbers>

#include "opinf/equation.hpp"

namespace opinf::cheb {

/// Chebyshev-Gauss-Lobatto points mapped to [0,1] in increasing order:
/// X_j = (1 - cos(j pi / N)) / 2, j = 0..N.
inline Vector lobatto_points_unit(int N) {
    Vector x(N + 1);
    for (int j = 0; j <= N; ++j) x[j] = 0.5 * (1.0 - std::cos(std::numbers::pi * j / N));
    x[0] = 0.0;
    x[N] = 1.0;
    return x;
}

/// Barycentric weights of the Lobatto points: (-1)^j, halved at both ends.
/// An affine map of the nodes only rescales them by a common factor.
inline Vector lobatto_weights(int N) {
    Vector w(N + 1);
    for (int j = 0; j <= N; ++j) w[j] = ((j % 2 == 0) ? 1.0 : -1.0) * ((j == 0 || j == N) ? 0.5 : 1.0);
    return w;
}

/// First-derivative collocation matrix for arbitrary distinct nodes with the
/// given barycentric weights; diagonal by the negative-sum trick.
inline Matrix differentiation_matrix(const Vector& x, const Vector& w) {
    const Eigen::Index n = x.size();
    Matrix D = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double diag = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            D(i, j) = (w[j] / w[i]) / (x[i] - x[j]);
            diag -= D(i, j);
        }
        D(i, i) = diag;
    }
    return D;
}

/// Row i of the result evaluates the barycentric interpolant through
/// (nodes, values) at targets[i].
inline Matrix barycentric_matrix(const Vector& nodes, const Vector& w, const Vector& targets) {
    const Eigen::Index n = nodes.size();
    Matrix M = Matrix::Zero(targets.size(), n);
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
        Eigen::Index hit = -1;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (targets[i] == nodes[j]) {
                hit = j;
                break;
            }
        }
        if (hit >= 0) {
            M(i, hit) = 1.0;
            continue;
        }
        double denom = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double c = w[j] / (targets[i] - nodes[j]);
            M(i, j) = c;
            denom += c;
        }
        M.row(i) /= denom;
    }
    return M;
}

}  // namespace opinf::cheb
