#include "spc/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App* cmd, spc::CommandOptions& o, bool with_out)
{
    cmd->add_option("--config", o.config, "run config (JSON)")->required();
    if (with_out) {
        cmd->add_option("--out", o.out, "output directory");
    }
    cmd->add_option("--seed", o.seed, "override ensemble.master_seed");
    cmd->add_option("--workers", o.workers, "override ensemble.workers");
    cmd->add_flag("--quiet", o.quiet, "suppress progress and warnings");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stochastic parametric resonance and dynamical Casimir simulator"};
    app.require_subcommand(1);

    spc::CommandOptions sim;
    auto* simulate = app.add_subcommand("simulate", "run the Monte Carlo ensemble; writes series.csv and summary.json");
    add_common(simulate, sim, true);
    simulate->add_flag("--dump-trajectory", sim.dump_trajectory,
                       "also write trajectory.csv and bogoliubov.json for realization 0");

    spc::CommandOptions pred;
    auto* predict = app.add_subcommand("predict", "closed-form predictions; writes prediction.csv");
    add_common(predict, pred, true);

    spc::CompareOptions cmp;
    auto* compare = app.add_subcommand("compare", "compare series.csv against prediction.csv");
    compare->add_option("--simulated", cmp.simulated, "series.csv from simulate")->required();
    compare->add_option("--predicted", cmp.predicted, "prediction.csv from predict")->required();
    compare->add_option("--config", cmp.config, "take the tolerance policy from this config");
    compare->add_option("--k-sigma", cmp.k_sigma, "standard errors allowed per point");
    compare->add_option("--rel-tol", cmp.rel_tol, "relative tolerance");
    compare->add_option("--abs-tol", cmp.abs_tol, "absolute tolerance");
    compare->add_flag("--quiet", cmp.quiet, "print the summary only");

    spc::CommandOptions spec;
    auto* spectrum = app.add_subcommand("spectrum", "mode table of the configured cavity family");
    add_common(spectrum, spec, false);

    spc::CommandOptions dump;
    auto* noise = app.add_subcommand("noise-dump", "one noise realization as CSV");
    add_common(noise, dump, false);
    noise->add_option("--samples", dump.samples, "grid points over [0, last probe]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : spc::exit_code::usage;
    }

    if (*simulate) {
        return spc::cmd_simulate(sim, std::cerr);
    }
    if (*predict) {
        return spc::cmd_predict(pred, std::cerr);
    }
    if (*compare) {
        return spc::cmd_compare(cmp, std::cout, std::cerr);
    }
    if (*spectrum) {
        return spc::cmd_spectrum(spec, std::cout, std::cerr);
    }
    return spc::cmd_noise_dump(dump, std::cout, std::cerr);
}
