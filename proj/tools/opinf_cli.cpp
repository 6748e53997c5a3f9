// Command-line front end: dataset generation, training, prediction,
// evaluation, ablation sweeps and the stdio tool server.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opinf/eval.hpp"
#include "opinf/tools.hpp"

namespace fs = std::filesystem;
using namespace opinf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// "4..10" or "4,6,8".
std::vector<Eigen::Index> parse_mode_list(const std::string& s) {
    std::vector<Eigen::Index> out;
    if (const auto dots = s.find(".."); dots != std::string::npos) {
        const long lo = std::stol(s.substr(0, dots)), hi = std::stol(s.substr(dots + 2));
        if (lo < 1 || hi < lo) throw ConfigError("mode range must satisfy 1 <= lo <= hi");
        for (long r = lo; r <= hi; ++r) out.push_back(r);
        return out;
    }
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const long r = std::stol(item);
        if (r < 1) throw ConfigError("modes must be >= 1");
        out.push_back(r);
    }
    if (out.empty()) throw ConfigError("empty mode list");
    return out;
}

std::vector<double> parse_number_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

void emit(const std::string& format, const nlohmann::json& j, const std::string& table, const std::string& out) {
    const std::string text = format == "json" ? j.dump(2) + "\n" : table;
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out);
        if (!f) throw FormatError("cannot write " + out);
        f << text;
    }
}

PredictOptions predict_options(const std::string& method, const std::string& interp, const std::string& ode) {
    PredictOptions opt;
    opt.param_method = parse_param_method(method);
    opt.interp = parse_interp_method(interp);
    if (!ode.empty()) opt.ode = parse_ode_method(ode);
    return opt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parametric operator-inference reduced-order modeling"};
    app.set_config("--config", "", "TOML/INI file with option defaults (command-line flags take precedence)");
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Simulate full-order trajectories into a dataset directory");
    std::string g_eq, g_split = "train", g_out, g_params;
    std::uint64_t g_seed = 0;
    int g_ntraj = 0, g_ntimes = 0;
    double g_horizon = 0.0;
    gen->add_option("--equation", g_eq, "heat | burgers | cavity")->required();
    gen->add_option("--split", g_split, "train | test");
    gen->add_option("--seed", g_seed, "Base seed");
    gen->add_option("--out", g_out, "Output directory")->required();
    gen->add_option("--params", g_params, "Comma-separated parameter values (overrides the default set)");
    gen->add_option("--n-traj", g_ntraj, "Trajectories per parameter")->check(CLI::PositiveNumber);
    gen->add_option("--horizon", g_horizon, "Final time")->check(CLI::PositiveNumber);
    gen->add_option("--n-times", g_ntimes, "Snapshots per trajectory")->check(CLI::Range(3, 1 << 24));

    // train
    auto* train = app.add_subcommand("train", "Fit a POD basis and per-parameter operators");
    std::string t_data, t_out, t_ode;
    long t_modes = 0;
    double t_lambda = -1.0;
    train->add_option("--data", t_data, "Training dataset directory")->required();
    train->add_option("--out", t_out, "Model directory")->required();
    train->add_option("--modes", t_modes, "POD modes r")->check(CLI::PositiveNumber);
    train->add_option("--lambda", t_lambda, "Tikhonov coefficient")->check(CLI::NonNegativeNumber);
    train->add_option("--ode", t_ode, "Default ROM integrator stored with the model: adaptive | rk4");

    // predict
    auto* pred = app.add_subcommand("predict", "Predict a full-order trajectory at a parameter value");
    std::string p_model, p_out, p_data, p_method = "regression", p_interp = "linear", p_ode, p_format = "table";
    double p_param = 0.0, p_horizon = 0.0;
    int p_index = 0, p_ntimes = 0;
    std::uint64_t p_seed = 0;
    pred->add_option("--model", p_model, "Model directory")->required();
    pred->add_option("--param", p_param, "Parameter value")->required();
    pred->add_option("--data", p_data, "Take inputs and initial state from this dataset (trajectory --index)");
    pred->add_option("--index", p_index, "Trajectory position within --data");
    pred->add_option("--seed", p_seed, "Seed for freshly drawn input signals when --data is absent");
    pred->add_option("--horizon", p_horizon, "Final time (default: training horizon)");
    pred->add_option("--n-times", p_ntimes, "Output snapshots (default: training count)");
    pred->add_option("--method", p_method, "regression | interpolation");
    pred->add_option("--interp", p_interp, "linear | quadratic | cubic");
    pred->add_option("--ode", p_ode, "adaptive | rk4 (default: model setting)");
    pred->add_option("--out", p_out, "Write the n x K prediction here (float64, row-major)");
    pred->add_option("--format", p_format, "json | table");

    // evaluate
    auto* evl = app.add_subcommand("evaluate", "Relative L2 errors of a model on a test dataset");
    std::string e_model, e_test, e_method = "regression", e_interp = "linear", e_ode, e_windows = "0:T,T:2T",
                                 e_format = "table", e_out;
    evl->add_option("--model", e_model, "Model directory")->required();
    evl->add_option("--test", e_test, "Test dataset directory")->required();
    evl->add_option("--method", e_method, "regression | interpolation");
    evl->add_option("--interp", e_interp, "linear | quadratic | cubic");
    evl->add_option("--ode", e_ode, "adaptive | rk4");
    evl->add_option("--windows", e_windows, "Comma-separated windows in units of the training horizon");
    evl->add_option("--format", e_format, "json | table");
    evl->add_option("--out", e_out, "Write the report here instead of stdout");

    // ablations
    auto* apod = app.add_subcommand("ablate-pod", "Sweep the number of POD modes");
    auto* alam = app.add_subcommand("ablate-lambda", "Sweep the Tikhonov coefficient");
    std::string a_train, a_test, a_modes, a_lambdas = "0,1e-6,1e-4,1e-2,1,10", a_method = "regression",
                                          a_interp = "linear", a_ode, a_windows = "0:T,T:2T", a_format = "table", a_out;
    double a_lambda = -1.0;
    for (auto* sc : {apod, alam}) {
        sc->add_option("--train", a_train, "Training dataset directory")->required();
        sc->add_option("--test", a_test, "Test dataset directory")->required();
        sc->add_option("--method", a_method, "regression | interpolation");
        sc->add_option("--interp", a_interp, "linear | quadratic | cubic");
        sc->add_option("--ode", a_ode, "adaptive | rk4");
        sc->add_option("--windows", a_windows, "Comma-separated windows in units of the training horizon");
        sc->add_option("--format", a_format, "json | table");
        sc->add_option("--out", a_out, "Write the table here instead of stdout");
    }
    apod->add_option("--modes", a_modes, "Mode list, e.g. 4..10 or 4,6,8")->required();
    apod->add_option("--lambda", a_lambda, "Tikhonov coefficient")->check(CLI::NonNegativeNumber);
    alam->add_option("--lambdas", a_lambdas, "Comma-separated lambda values");
    alam->add_option("--modes", a_modes, "POD modes r");

    // tools
    auto* tls = app.add_subcommand("tools", "Serve the JSON tool protocol on stdin/stdout");
    std::string s_model;
    tls->add_option("--model", s_model, "Model directory backing operator queries and predict");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto t0 = Clock::now();
        if (gen->parsed()) {
            const Equation eq = parse_equation(g_eq);
            const Split split = parse_split(g_split);
            const Protocol proto = default_protocol(eq);
            SplitProtocol sp = proto.split(split);
            if (!g_params.empty()) sp.params = parse_number_list(g_params);
            if (g_ntraj > 0) sp.n_traj_per_param = g_ntraj;
            if (g_horizon > 0) sp.horizon = g_horizon;
            if (g_ntimes > 0) sp.n_times = g_ntimes;
            generate_dataset_to_dir(eq, sp.params, sp.n_traj_per_param, sp.horizon, sp.n_times,
                                    split_seed(g_seed, split), split, g_out);
            std::cout << "generated " << sp.params.size() * static_cast<std::size_t>(sp.n_traj_per_param) << " "
                      << to_string(eq) << " trajectories (" << to_string(split) << ") into " << g_out << "\n"
                      << "params:";
            for (double p : sp.params) std::cout << ' ' << p;
            std::cout << "\nper param: " << sp.n_traj_per_param << "  horizon: " << sp.horizon
                      << "  n_times: " << sp.n_times << "\nwall time: " << seconds_since(t0) << " s\n";
        } else if (train->parsed()) {
            const TrajectorySource src = TrajectorySource::open(t_data);
            TrainOptions opt = default_train_options(src.equation());
            if (t_modes > 0) opt.modes = t_modes;
            if (t_lambda >= 0) opt.lambda = t_lambda;
            if (!t_ode.empty()) opt.ode = parse_ode_method(t_ode);
            const ModelBundle b = train_model(src, opt);
            save_bundle(b, t_out);
            std::cout << to_string(b.equation) << " model: r=" << b.modes << " lambda=" << b.lambda
                      << " energy=" << 100.0 * energy_fraction(b.basis.singular_values, b.modes) << "%\n";
            std::vector<std::vector<std::string>> rows;
            for (const auto& [p, o] : b.operators) {
                rows.push_back({io::param_tag(p), format_sci(b.fit_residuals.at(p)), format_sci(operator_norm(o))});
            }
            std::cout << format_table({"param", "fit_residual", "operator_norm"}, rows)
                      << "wall time: " << seconds_since(t0) << " s\n";
        } else if (pred->parsed()) {
            const ModelBundle b = load_bundle(p_model);
            Matrix inputs;
            std::vector<double> t;
            Vector y0;
            if (!p_data.empty()) {
                const TrajectorySource src = TrajectorySource::open(p_data);
                if (p_index < 0 || static_cast<std::size_t>(p_index) >= src.size()) {
                    throw ConfigError("--index outside the dataset");
                }
                const auto traj = src.get(static_cast<std::size_t>(p_index));
                inputs = traj->inputs;
                t = traj->t_eval;
                y0 = traj->states.col(0);
            } else {
                const double horizon = p_horizon > 0 ? p_horizon : b.horizon();
                const int n_times = p_ntimes > 0 ? p_ntimes : static_cast<int>(b.t_eval_train.size());
                t = uniform_time_grid(horizon, n_times);
                Rng rng(p_seed);
                std::vector<MultiSineSignal> sigs;
                switch (b.equation) {
                case Equation::heat: sigs = {sample_multisine(signals::heat_boundary(), rng)}; break;
                case Equation::burgers:
                    sigs = {sample_multisine(signals::burgers_boundary(), rng),
                            sample_multisine(signals::burgers_boundary(), rng),
                            sample_multisine(signals::burgers_source(), rng)};
                    break;
                case Equation::cavity: sigs = {sample_multisine(signals::cavity_lid(), rng)}; break;
                }
                inputs.resize(static_cast<Eigen::Index>(sigs.size()), static_cast<Eigen::Index>(t.size()));
                for (std::size_t i = 0; i < sigs.size(); ++i)
                    for (std::size_t k = 0; k < t.size(); ++k)
                        inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = sigs[i](t[k]);
                y0 = tools::default_initial_state(b.equation, b.basis.n_space(), inputs.col(0));
            }
            const Matrix y = predict(b, p_param, inputs, t, y0, predict_options(p_method, p_interp, p_ode));
            if (!p_out.empty()) io::write_f64(p_out, y);
            nlohmann::json j{{"param", p_param},
                             {"shape", {y.rows(), y.cols()}},
                             {"horizon", t.back()},
                             {"output", p_out.empty() ? nlohmann::json(nullptr) : nlohmann::json(p_out)}};
            std::ostringstream tab;
            tab << "prediction at param " << p_param << ": shape " << y.rows() << " x " << y.cols() << " over [0, "
                << t.back() << "]" << (p_out.empty() ? "" : " -> " + p_out) << "\n";
            emit(p_format, j, tab.str(), "");
        } else if (evl->parsed()) {
            const ModelBundle b = load_bundle(e_model);
            const TrajectorySource test = TrajectorySource::open(e_test);
            const ErrorReport rep =
                evaluate_model(b, test, parse_windows(e_windows), predict_options(e_method, e_interp, e_ode));
            emit(e_format, to_json(rep), format_report(rep), e_out);
        } else if (apod->parsed() || alam->parsed()) {
            const TrajectorySource tr = TrajectorySource::open(a_train);
            const TrajectorySource te = TrajectorySource::open(a_test);
            const TrainOptions defaults = default_train_options(tr.equation());
            const auto windows = parse_windows(a_windows);
            const PredictOptions opt = predict_options(a_method, a_interp, a_ode);
            const OdeMethod ode = opt.ode.value_or(defaults.ode);
            nlohmann::json j = nlohmann::json::array();
            std::string table;
            if (apod->parsed()) {
                const auto rows = ablate_pod(tr, te, parse_mode_list(a_modes), a_lambda >= 0 ? a_lambda : defaults.lambda,
                                             windows, opt, ode);
                for (const auto& r : rows) j.push_back(to_json(r));
                table = format_ablation(rows, windows);
            } else {
                const Eigen::Index r = a_modes.empty() ? defaults.modes : parse_mode_list(a_modes).front();
                const auto rows = ablate_lambda(tr, te, parse_number_list(a_lambdas), r, windows, opt, ode);
                for (const auto& row : rows) j.push_back(to_json(row));
                table = format_ablation(rows, windows);
            }
            emit(a_format, j, table, a_out);
        } else if (tls->parsed()) {
            std::ios::sync_with_stdio(false);
            tools::ToolServer server = s_model.empty() ? tools::ToolServer() : tools::ToolServer(load_bundle(s_model));
            server.serve(std::cin, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
