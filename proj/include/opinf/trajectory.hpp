#pragma once

#include <vector>

#include "opinf/equation.hpp"
#include "opinf/signals.hpp"

namespace opinf {

/// One full-order solution on a snapshot grid.
struct Trajectory {
    Equation equation = Equation::heat;
    double param = 0.0;             // nu for heat/Burgers, Re for the cavity
    std::vector<double> t_eval;     // K snapshot times
    Matrix inputs;                  // m x K
    Matrix states;                  // n x K
    std::vector<MultiSineSignal> input_signals;

    Eigen::Index n_space() const { return states.rows(); }
    Eigen::Index n_times() const { return static_cast<Eigen::Index>(t_eval.size()); }

    /// Throws FormatError if the documented invariants do not hold.
    void validate() const {
        if (states.cols() != n_times() || inputs.cols() != n_times()) {
            throw FormatError("trajectory: column count differs from time grid length");
        }
        if (inputs.rows() != input_dim(equation)) throw FormatError("trajectory: wrong input dimension");
        for (std::size_t k = 1; k < t_eval.size(); ++k) {
            if (!(t_eval[k] > t_eval[k - 1])) throw FormatError("trajectory: time grid not strictly increasing");
        }
        if (!states.allFinite() || !inputs.allFinite()) throw FormatError("trajectory: non-finite entries");
    }
};

/// K equispaced points on [0, horizon], t_k = horizon * k / (K - 1) exactly.
inline std::vector<double> uniform_time_grid(double horizon, int n_times) {
    if (n_times < 2) throw ConfigError("time grid needs at least 2 points");
    std::vector<double> t(static_cast<std::size_t>(n_times));
    for (int k = 0; k < n_times; ++k) t[static_cast<std::size_t>(k)] = horizon * k / (n_times - 1);
    return t;
}

}  // namespace opinf
