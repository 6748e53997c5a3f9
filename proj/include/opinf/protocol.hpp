#pragma once

// Benchmark settings for the three PDE families: parameter sets, trajectory
// counts, horizons, ROM size and regularization.

#include <vector>

#include "opinf/equation.hpp"

namespace opinf {

enum class Split { train, test };

inline std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

inline Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split: " + std::string(s));
}

enum class OdeMethod { adaptive, rk4 };

inline std::string_view to_string(OdeMethod m) { return m == OdeMethod::adaptive ? "adaptive" : "rk4"; }

inline OdeMethod parse_ode_method(std::string_view s) {
    if (s == "adaptive") return OdeMethod::adaptive;
    if (s == "rk4") return OdeMethod::rk4;
    throw ConfigError("unknown ODE method: " + std::string(s));
}

struct SplitProtocol {
    std::vector<double> params;
    int n_traj_per_param = 1;
    double horizon = 1.0;
    int n_times = 2;
};

struct Protocol {
    Equation equation = Equation::heat;
    SplitProtocol train;
    SplitProtocol test;
    int modes = 6;
    double lambda = 1e-6;
    OdeMethod ode = OdeMethod::adaptive;

    const SplitProtocol& split(Split s) const { return s == Split::train ? train : test; }
};

inline Protocol default_protocol(Equation eq) {
    switch (eq) {
    case Equation::heat:
        return {eq, {{0.1, 0.5, 2.0}, 3, 1.0, 1001}, {{0.5, 1.0, 3.0}, 20, 2.0, 2001}, 6, 1e-6, OdeMethod::adaptive};
    case Equation::burgers:
        return {eq, {{0.01, 0.02, 0.05, 0.1}, 100, 2.0, 1001}, {{0.03, 0.07}, 20, 4.0, 2001}, 10, 0.5,
                OdeMethod::adaptive};
    case Equation::cavity:
        return {eq, {{50, 75, 100, 125, 150}, 8, 2.0, 101}, {{60, 80, 90, 110, 120, 140}, 2, 4.0, 201}, 20, 3.0,
                OdeMethod::rk4};
    }
    throw ConfigError("unknown equation");
}

/// Base seed for a split. Test sub-seeds are offset far past any training
/// trajectory index so train and test inputs never share a generator stream.
inline std::uint64_t split_seed(std::uint64_t seed, Split s) { return s == Split::train ? seed : seed + 1'000'000; }

}  // namespace opinf
