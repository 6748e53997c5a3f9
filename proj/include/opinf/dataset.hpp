#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <map>
#include <sstream>
#include <vector>

#include "opinf/binary_io.hpp"
#include "opinf/fom/burgers.hpp"
#include "opinf/fom/cavity.hpp"
#include "opinf/fom/heat.hpp"
#include "opinf/parallel.hpp"
#include "opinf/protocol.hpp"

namespace opinf {

inline constexpr int dataset_format_version = 1;

struct TrajectoryRecord {
    Trajectory traj;
    int index = 0;              // position within its parameter group
    std::uint64_t sub_seed = 0;
};

/// Trajectories ordered by (param, index); params ascending.
struct SnapshotDataset {
    Equation equation = Equation::heat;
    Split split = Split::train;
    std::uint64_t seed = 0;
    std::vector<TrajectoryRecord> records;

    std::vector<double> params() const {
        std::vector<double> p;
        for (const auto& r : records) {
            if (p.empty() || p.back() != r.traj.param) p.push_back(r.traj.param);
        }
        return p;
    }

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    /// Trajectories grouped by parameter, in ascending parameter order.
    std::map<double, std::vector<const Trajectory*>> by_param() const {
        std::map<double, std::vector<const Trajectory*>> g;
        for (const auto& r : records) g[r.traj.param].push_back(&r.traj);
        return g;
    }

    void sort() {
        std::stable_sort(records.begin(), records.end(), [](const TrajectoryRecord& a, const TrajectoryRecord& b) {
            return a.traj.param != b.traj.param ? a.traj.param < b.traj.param : a.index < b.index;
        });
    }
};

/// Discretization settings applied to every generated trajectory; the
/// parameter value, horizon and snapshot count are filled in per call.
struct SolverSettings {
    fom::HeatConfig heat;
    fom::BurgersConfig burgers;
    fom::CavityConfig cavity;
};

/// Draws the input signals of one trajectory from `sub_seed` and solves it.
/// Heat: one boundary signal. Burgers: left, right, source (in that order).
/// Cavity: one lid modulation.
inline Trajectory simulate_trajectory(Equation eq, double param, double horizon, int n_times, std::uint64_t sub_seed,
                                      const SolverSettings& settings = {}) {
    Rng rng(sub_seed);
    switch (eq) {
    case Equation::heat: {
        fom::HeatConfig cfg = settings.heat;
        cfg.nu = param;
        cfg.horizon = horizon;
        cfg.n_times = n_times;
        const MultiSineSignal bc = sample_multisine(signals::heat_boundary(), rng);
        return fom::solve_heat(cfg, bc, fom::heat_initial_condition(fom::heat_grid(cfg)));
    }
    case Equation::burgers: {
        fom::BurgersConfig cfg = settings.burgers;
        cfg.nu = param;
        cfg.horizon = horizon;
        cfg.n_times = n_times;
        const MultiSineSignal w1 = sample_multisine(signals::burgers_boundary(), rng);
        const MultiSineSignal w2 = sample_multisine(signals::burgers_boundary(), rng);
        const MultiSineSignal w3 = sample_multisine(signals::burgers_source(), rng);
        return fom::solve_burgers(cfg, w1, w2, w3);
    }
    case Equation::cavity: {
        fom::CavityConfig cfg = settings.cavity;
        cfg.re = param;
        cfg.horizon = horizon;
        cfg.snapshot_stride_time = horizon / (n_times - 1);
        const MultiSineSignal lid = sample_multisine(signals::cavity_lid(), rng);
        return fom::solve_cavity(cfg, lid);
    }
    }
    throw ConfigError("unknown equation");
}

/// Sub-seed of trajectory `index` under parameter number `param_slot`:
/// seed + param_slot * n_traj_per_param + index.
inline std::uint64_t trajectory_sub_seed(std::uint64_t seed, std::size_t param_slot, int n_traj_per_param, int index) {
    return seed + param_slot * static_cast<std::uint64_t>(n_traj_per_param) + static_cast<std::uint64_t>(index);
}

inline SnapshotDataset generate_dataset(Equation eq, std::vector<double> params, int n_traj_per_param, double horizon,
                                        int n_times, std::uint64_t seed, Split split = Split::train,
                                        const SolverSettings& settings = {}) {
    if (params.empty()) throw ConfigError("generate_dataset: empty parameter list");
    if (n_traj_per_param < 1) throw ConfigError("generate_dataset: n_traj_per_param must be >= 1");
    for (double p : params) {
        if (!(p > 0.0)) throw ConfigError("generate_dataset: parameters must be positive");
    }
    std::sort(params.begin(), params.end());
    params.erase(std::unique(params.begin(), params.end()), params.end());

    SnapshotDataset ds;
    ds.equation = eq;
    ds.split = split;
    ds.seed = seed;
    const std::size_t total = params.size() * static_cast<std::size_t>(n_traj_per_param);
    ds.records.resize(total);

    parallel_for(total, [&](std::size_t job) {
        const std::size_t slot = job / static_cast<std::size_t>(n_traj_per_param);
        const int index = static_cast<int>(job % static_cast<std::size_t>(n_traj_per_param));
        const std::uint64_t sub = trajectory_sub_seed(seed, slot, n_traj_per_param, index);
        try {
            ds.records[job] = {simulate_trajectory(eq, params[slot], horizon, n_times, sub, settings), index, sub};
        } catch (const Error& e) {
            std::ostringstream os;
            os << e.what() << " (param=" << params[slot] << ", index=" << index << ", sub_seed=" << sub << ")";
            throw DivergenceError(os.str());
        }
    });
    return ds;
}

inline SnapshotDataset generate_dataset(const Protocol& proto, Split split, std::uint64_t seed,
                                        const SolverSettings& settings = {}) {
    const SplitProtocol& sp = proto.split(split);
    return generate_dataset(proto.equation, sp.params, sp.n_traj_per_param, sp.horizon, sp.n_times,
                            split_seed(seed, split), split, settings);
}

/// Time derivative of each row of `a` on a uniform grid: central differences
/// inside, second-order one-sided stencils at both ends.
inline Matrix modal_time_derivatives(const Matrix& a, const std::vector<double>& t_eval) {
    const auto K = static_cast<Eigen::Index>(t_eval.size());
    if (K < 3) throw InsufficientDataError("modal_time_derivatives: need at least 3 time points");
    if (a.cols() != K) throw ShapeError("modal_time_derivatives: column count differs from time grid");
    const double dt = (t_eval.back() - t_eval.front()) / static_cast<double>(K - 1);
    for (Eigen::Index k = 1; k < K; ++k) {
        const double step = t_eval[static_cast<std::size_t>(k)] - t_eval[static_cast<std::size_t>(k - 1)];
        if (std::abs(step - dt) > 1e-12 * std::max(1.0, std::abs(t_eval.back())) + 1e-12 * dt) {
            throw ShapeError("modal_time_derivatives: time grid is not uniform");
        }
    }
    Matrix d(a.rows(), K);
    const double inv2 = 1.0 / (2.0 * dt);
    d.col(0) = (-3.0 * a.col(0) + 4.0 * a.col(1) - a.col(2)) * inv2;
    for (Eigen::Index k = 1; k + 1 < K; ++k) d.col(k) = (a.col(k + 1) - a.col(k - 1)) * inv2;
    d.col(K - 1) = (3.0 * a.col(K - 1) - 4.0 * a.col(K - 2) + a.col(K - 3)) * inv2;
    return d;
}

// --- persistence -----------------------------------------------------------

namespace detail {

inline std::string traj_stem(double param, int index) {
    return "traj_" + io::param_tag(param) + "_" + std::to_string(index);
}

inline nlohmann::json write_trajectory(const std::filesystem::path& dir, const TrajectoryRecord& rec) {
    const Trajectory& t = rec.traj;
    const std::string stem = traj_stem(t.param, rec.index);
    nlohmann::json files{{"states", stem + "_states.f64"}, {"inputs", stem + "_inputs.f64"}, {"t", stem + "_t.f64"}};
    io::write_f64(dir / files["states"].get<std::string>(), t.states);
    io::write_f64(dir / files["inputs"].get<std::string>(), t.inputs);
    io::write_f64(dir / files["t"].get<std::string>(), t.t_eval);
    return {{"param", t.param},
            {"index", rec.index},
            {"sub_seed", rec.sub_seed},
            {"n_space", t.states.rows()},
            {"n_inputs", t.inputs.rows()},
            {"n_times", t.t_eval.size()},
            {"files", files},
            {"signals", t.input_signals}};
}

inline nlohmann::json dataset_manifest(Equation eq, Split split, std::uint64_t seed, const std::vector<double>& params,
                                       nlohmann::json trajectories) {
    nlohmann::json m;
    m["format_version"] = dataset_format_version;
    m["equation"] = to_string(eq);
    m["split"] = to_string(split);
    m["seed"] = seed;
    m["params"] = params;
    m["trajectories"] = std::move(trajectories);
    return m;
}

inline TrajectoryRecord read_trajectory(const std::filesystem::path& dir, const nlohmann::json& jt, Equation eq) {
    TrajectoryRecord rec;
    rec.index = jt.at("index").get<int>();
    rec.sub_seed = jt.at("sub_seed").get<std::uint64_t>();
    Trajectory& t = rec.traj;
    t.equation = eq;
    t.param = jt.at("param").get<double>();
    const auto n = jt.at("n_space").get<Eigen::Index>();
    const auto mi = jt.at("n_inputs").get<Eigen::Index>();
    const auto K = jt.at("n_times").get<Eigen::Index>();
    const auto& files = jt.at("files");
    t.t_eval = io::read_f64(dir / files.at("t").get<std::string>(), static_cast<std::size_t>(K));
    t.states = io::read_matrix(dir / files.at("states").get<std::string>(), n, K);
    t.inputs = io::read_matrix(dir / files.at("inputs").get<std::string>(), mi, K);
    t.input_signals = jt.at("signals").get<std::vector<MultiSineSignal>>();
    t.validate();
    return rec;
}

}  // namespace detail

inline void save_dataset(const SnapshotDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json trajs = nlohmann::json::array();
    for (const auto& rec : ds.records) trajs.push_back(detail::write_trajectory(dir, rec));
    io::write_json(dir / "manifest.json", detail::dataset_manifest(ds.equation, ds.split, ds.seed, ds.params(), trajs));
}

namespace detail {

struct ManifestHeader {
    Equation equation = Equation::heat;
    Split split = Split::train;
    std::uint64_t seed = 0;
};

template <class Fn>
auto with_manifest_errors(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("dataset manifest: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("dataset manifest: ") + e.what());
    }
}

inline ManifestHeader read_header(const nlohmann::json& m) {
    return with_manifest_errors([&] {
        if (m.at("format_version").get<int>() != dataset_format_version) {
            throw FormatError("dataset: unsupported format_version");
        }
        return ManifestHeader{parse_equation(m.at("equation").get<std::string>()),
                              parse_split(m.at("split").get<std::string>()), m.at("seed").get<std::uint64_t>()};
    });
}

}  // namespace detail

inline SnapshotDataset load_dataset(const std::filesystem::path& dir) {
    const nlohmann::json m = io::read_json(dir / "manifest.json");
    const auto h = detail::read_header(m);
    SnapshotDataset ds{h.equation, h.split, h.seed, {}};
    detail::with_manifest_errors([&] {
        for (const auto& jt : m.at("trajectories")) ds.records.push_back(detail::read_trajectory(dir, jt, ds.equation));
    });
    ds.sort();
    return ds;
}

/// Generates a dataset straight to disk, holding at most one trajectory per
/// worker in memory. Produces the same files as generate + save_dataset.
inline void generate_dataset_to_dir(Equation eq, std::vector<double> params, int n_traj_per_param, double horizon,
                                    int n_times, std::uint64_t seed, Split split, const std::filesystem::path& dir,
                                    const SolverSettings& settings = {}) {
    if (params.empty()) throw ConfigError("generate_dataset: empty parameter list");
    if (n_traj_per_param < 1) throw ConfigError("generate_dataset: n_traj_per_param must be >= 1");
    for (double p : params) {
        if (!(p > 0.0)) throw ConfigError("generate_dataset: parameters must be positive");
    }
    std::sort(params.begin(), params.end());
    params.erase(std::unique(params.begin(), params.end()), params.end());
    std::filesystem::create_directories(dir);
    const std::size_t total = params.size() * static_cast<std::size_t>(n_traj_per_param);
    std::vector<nlohmann::json> entries(total);
    parallel_for(total, [&](std::size_t job) {
        const std::size_t slot = job / static_cast<std::size_t>(n_traj_per_param);
        const int index = static_cast<int>(job % static_cast<std::size_t>(n_traj_per_param));
        const std::uint64_t sub = trajectory_sub_seed(seed, slot, n_traj_per_param, index);
        TrajectoryRecord rec;
        try {
            rec = {simulate_trajectory(eq, params[slot], horizon, n_times, sub, settings), index, sub};
        } catch (const Error& e) {
            std::ostringstream os;
            os << e.what() << " (param=" << params[slot] << ", index=" << index << ", sub_seed=" << sub << ")";
            throw DivergenceError(os.str());
        }
        entries[job] = detail::write_trajectory(dir, rec);
    });
    io::write_json(dir / "manifest.json",
                   detail::dataset_manifest(eq, split, seed, params, nlohmann::json(std::move(entries))));
}

inline void generate_dataset_to_dir(const Protocol& proto, Split split, std::uint64_t seed,
                                    const std::filesystem::path& dir, const SolverSettings& settings = {}) {
    const SplitProtocol& sp = proto.split(split);
    generate_dataset_to_dir(proto.equation, sp.params, sp.n_traj_per_param, sp.horizon, sp.n_times,
                            split_seed(seed, split), split, dir, settings);
}

// --- uniform access to in-memory and on-disk datasets ----------------------

/// Read-only, indexable view of a trajectory collection ordered by
/// (param, index). On-disk sources load one trajectory per access.
class TrajectorySource {
public:
    using Loader = std::function<std::shared_ptr<const Trajectory>(std::size_t)>;

    TrajectorySource(Equation eq, std::vector<double> item_params, std::vector<int> item_index, Loader loader)
        : eq_(eq), params_(std::move(item_params)), index_(std::move(item_index)), load_(std::move(loader)) {}

    /// Non-owning view; `ds` must outlive the source.
    static TrajectorySource from(const SnapshotDataset& ds) {
        std::vector<double> p;
        std::vector<int> idx;
        for (const auto& r : ds.records) {
            p.push_back(r.traj.param);
            idx.push_back(r.index);
        }
        const SnapshotDataset* dsp = &ds;
        return {ds.equation, std::move(p), std::move(idx), [dsp](std::size_t i) {
                    return std::shared_ptr<const Trajectory>(&dsp->records[i].traj, [](const Trajectory*) {});
                }};
    }

    static TrajectorySource open(const std::filesystem::path& dir) {
        auto m = std::make_shared<const nlohmann::json>(io::read_json(dir / "manifest.json"));
        const auto h = detail::read_header(*m);
        std::vector<std::pair<std::pair<double, int>, std::size_t>> order;
        detail::with_manifest_errors([&] {
            const auto& ts = m->at("trajectories");
            for (std::size_t i = 0; i < ts.size(); ++i) {
                order.push_back({{ts[i].at("param").get<double>(), ts[i].at("index").get<int>()}, i});
            }
        });
        std::sort(order.begin(), order.end());
        std::vector<double> p;
        std::vector<int> idx;
        std::vector<std::size_t> pos;
        for (const auto& o : order) {
            p.push_back(o.first.first);
            idx.push_back(o.first.second);
            pos.push_back(o.second);
        }
        const Equation eq = h.equation;
        return {eq, std::move(p), std::move(idx), [m, dir, pos, eq](std::size_t i) {
                    return detail::with_manifest_errors([&] {
                        auto rec = detail::read_trajectory(dir, m->at("trajectories").at(pos[i]), eq);
                        return std::make_shared<const Trajectory>(std::move(rec.traj));
                    });
                }};
    }

    Equation equation() const { return eq_; }
    std::size_t size() const { return params_.size(); }
    bool empty() const { return params_.empty(); }
    double param(std::size_t i) const { return params_[i]; }
    int index(std::size_t i) const { return index_[i]; }
    std::shared_ptr<const Trajectory> get(std::size_t i) const { return load_(i); }

    std::vector<double> params() const {
        std::vector<double> p = params_;
        p.erase(std::unique(p.begin(), p.end()), p.end());
        return p;
    }

    /// Item positions grouped by parameter, ascending.
    std::map<double, std::vector<std::size_t>> by_param() const {
        std::map<double, std::vector<std::size_t>> g;
        for (std::size_t i = 0; i < params_.size(); ++i) g[params_[i]].push_back(i);
        return g;
    }

private:
    Equation eq_;
    std::vector<double> params_;
    std::vector<int> index_;
    Loader load_;
};

}  // namespace opinf
