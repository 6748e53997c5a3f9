#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "opinf/errors.hpp"

namespace opinf {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Distribution of a randomized multi-sine input: every parameter is drawn
/// uniformly from its interval.
struct MultiSineSpec {
    int n_components = 0;
    Interval amp_range;
    Interval freq_range;   // Hz
    Interval phase_range;  // radians
    Interval bias_range;

    void validate() const {
        if (n_components < 0) throw ConfigError("multisine: negative component count");
        for (const Interval* iv : {&amp_range, &freq_range, &phase_range, &bias_range}) {
            if (!(iv->lo <= iv->hi)) throw ConfigError("multisine: interval with lo > hi");
        }
    }
};

/// u(t) = bias + sum_k amps[k] sin(2 pi freqs[k] t + phases[k])
struct MultiSineSignal {
    double bias = 0.0;
    std::vector<double> amps;
    std::vector<double> freqs;
    std::vector<double> phases;

    std::size_t size() const { return amps.size(); }

    double operator()(double t) const {
        double v = bias;
        for (std::size_t k = 0; k < amps.size(); ++k) {
            v += amps[k] * std::sin(2.0 * std::numbers::pi * freqs[k] * t + phases[k]);
        }
        return v;
    }

    bool operator==(const MultiSineSignal&) const = default;
};

inline double eval_signal(const MultiSineSignal& sig, double t) { return sig(t); }

/// The generator behind every sampled input. mt19937_64 is fully specified by
/// the standard, so seeded sequences agree across platforms.
using Rng = std::mt19937_64;

/// Uniform draw on [lo, hi] from the top 53 bits of one generator output.
/// std::uniform_real_distribution is implementation-defined, so it is avoided.
inline double uniform(Rng& rng, Interval iv) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return iv.lo + (iv.hi - iv.lo) * u;
}

/// Consumes exactly 3 * n_components + 1 generator outputs, in the order
/// (amp_k, freq_k, phase_k) for k = 1..n, then bias.
inline MultiSineSignal sample_multisine(const MultiSineSpec& spec, Rng& rng) {
    spec.validate();
    MultiSineSignal sig;
    const auto n = static_cast<std::size_t>(spec.n_components);
    sig.amps.reserve(n);
    sig.freqs.reserve(n);
    sig.phases.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        sig.amps.push_back(uniform(rng, spec.amp_range));
        sig.freqs.push_back(uniform(rng, spec.freq_range));
        sig.phases.push_back(uniform(rng, spec.phase_range));
    }
    sig.bias = uniform(rng, spec.bias_range);
    return sig;
}

inline void to_json(nlohmann::json& j, const MultiSineSignal& s) {
    j = nlohmann::json{{"bias", s.bias}, {"amps", s.amps}, {"freqs", s.freqs}, {"phases", s.phases}};
}

inline void from_json(const nlohmann::json& j, MultiSineSignal& s) {
    j.at("bias").get_to(s.bias);
    j.at("amps").get_to(s.amps);
    j.at("freqs").get_to(s.freqs);
    j.at("phases").get_to(s.phases);
    if (s.freqs.size() != s.amps.size() || s.phases.size() != s.amps.size()) {
        throw FormatError("multisine record: amps/freqs/phases lengths differ");
    }
}

namespace signals {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Input distributions for the three benchmark problems.
inline MultiSineSpec heat_boundary() { return {3, {0.1, 0.5}, {0.2, 5.0}, {0.0, two_pi}, {0.8, 1.2}}; }
inline MultiSineSpec burgers_boundary() { return {3, {0.1, 1.0}, {0.2, 5.0}, {0.0, two_pi}, {-0.5, 0.5}}; }
inline MultiSineSpec burgers_source() { return {1, {0.1, 3.0}, {0.2, 1.0}, {0.0, two_pi}, {-1.0, 1.0}}; }
inline MultiSineSpec cavity_lid() { return {1, {0.1, 0.4}, {0.5, 2.0}, {0.0, two_pi}, {0.7, 1.3}}; }

}  // namespace signals

}  // namespace opinf
