#pragma once

#include <span>
#include <vector>

#include "opinf/errors.hpp"

namespace opinf {

/// Thomas-algorithm factorization of a fixed tridiagonal matrix, reusable
/// across many right-hand sides. No pivoting: the matrix must be diagonally
/// dominant (true for every implicit diffusion operator built here).
class TridiagonalSolver {
public:
    TridiagonalSolver() = default;

    /// lower[0] and upper[n-1] are ignored.
    TridiagonalSolver(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper)
        : lower_(std::move(lower)), upper_star_(std::move(upper)), inv_pivot_(diag.size()) {
        const std::size_t n = diag.size();
        if (n == 0 || lower_.size() != n || upper_star_.size() != n) {
            throw ShapeError("tridiagonal: band lengths differ");
        }
        double pivot = diag[0];
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) pivot = diag[i] - lower_[i] * upper_star_[i - 1];
            if (pivot == 0.0) throw SingularFitError("tridiagonal: zero pivot");
            inv_pivot_[i] = 1.0 / pivot;
            upper_star_[i] = i + 1 < n ? upper_star_[i] * inv_pivot_[i] : 0.0;
        }
    }

    /// Constant-coefficient band (sub, main, super) of size n.
    static TridiagonalSolver constant(std::size_t n, double sub, double main, double super) {
        return TridiagonalSolver(std::vector<double>(n, sub), std::vector<double>(n, main),
                                 std::vector<double>(n, super));
    }

    std::size_t size() const { return inv_pivot_.size(); }

    /// Solves in place: rhs becomes the solution.
    void solve(std::span<double> rhs) const {
        const std::size_t n = size();
        if (rhs.size() != n) throw ShapeError("tridiagonal: rhs length mismatch");
        rhs[0] *= inv_pivot_[0];
        for (std::size_t i = 1; i < n; ++i) rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) * inv_pivot_[i];
        for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= upper_star_[i] * rhs[i + 1];
    }

private:
    std::vector<double> lower_;
    std::vector<double> upper_star_;
    std::vector<double> inv_pivot_;
};

}  // namespace opinf
