// Trains a heat-equation ROM in memory and reports its test error.
//
// A coarse spatial grid keeps this under a few seconds; the CLI runs the
// full-resolution protocol.

#include <iomanip>
#include <iostream>

#include "opinf/all.hpp"

int main() {
    using namespace opinf;
    SolverSettings settings;
    settings.heat.n_interior = 127;

    const Protocol proto = default_protocol(Equation::heat);
    const std::uint64_t seed = 3;
    const SplitProtocol& tr = proto.train;
    const SplitProtocol& te = proto.test;
    const SnapshotDataset train = generate_dataset(Equation::heat, tr.params, tr.n_traj_per_param, tr.horizon,
                                                   tr.n_times, split_seed(seed, Split::train), Split::train, settings);
    // Five test trajectories per parameter are enough for a demo.
    const SnapshotDataset test = generate_dataset(Equation::heat, te.params, 5, te.horizon, te.n_times,
                                                  split_seed(seed, Split::test), Split::test, settings);

    const ModelBundle model = train_model(train, default_train_options(Equation::heat));
    std::cout << "POD energy at r=" << model.modes << ": "
              << std::fixed << std::setprecision(6) << 100.0 * energy_fraction(model.basis.singular_values, model.modes) << " %\n\n" << std::defaultfloat;

    std::cout << format_report(evaluate_model(model, test)) << '\n';

    PredictOptions interp;
    interp.param_method = ParamMethod::interpolation;
    std::cout << "with linear interpolation in nu:\n" << format_report(evaluate_model(model, test, default_windows(), interp));
    return 0;
}
