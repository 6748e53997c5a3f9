#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "opinf/errors.hpp"

namespace opinf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Equation { heat, burgers, cavity };

inline std::string_view to_string(Equation eq) {
    switch (eq) {
    case Equation::heat: return "heat";
    case Equation::burgers: return "burgers";
    case Equation::cavity: return "cavity";
    }
    return "?";
}

inline Equation parse_equation(std::string_view name) {
    if (name == "heat") return Equation::heat;
    if (name == "burgers") return Equation::burgers;
    if (name == "cavity") return Equation::cavity;
    throw ConfigError("unknown equation: " + std::string(name));
}

/// Number of boundary/forcing input channels driving each equation.
inline int input_dim(Equation eq) { return eq == Equation::burgers ? 3 : 1; }

/// Heat is linear in the state; the other two carry a quadratic term.
inline bool has_quadratic(Equation eq) { return eq != Equation::heat; }

}  // namespace opinf
