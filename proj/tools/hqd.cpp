// hqd — command line front end: config ingestion, solver dispatch, sweeps.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hqd/runner.hpp"
#include "hqd/version.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed = -1;
    int threads = 0;
    std::string method;
    bool dump_aux = false;
    bool dump_noise = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "path to the run configuration (JSON)")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory (default: current)");
    cmd->add_option("--seed", args.seed, "override the base RNG seed");
    cmd->add_option("--threads", args.threads,
                    "worker threads (default: HQD_THREADS environment variable or 1)");
    cmd->add_option("--method", args.method, "integrator override: rk4 | rkf45");
    cmd->add_flag("--dump-aux", args.dump_aux, "binary dump of auxiliary states (debugging)");
    cmd->add_flag("--dump-noise", args.dump_noise,
                  "CSV of the first trajectory's noise per channel (t, Re Z, Im Z)");
}

int dispatch(const CommonArgs& args, std::optional<hqd::cli::Solver> verb_solver,
             const std::string& sweep_axis = {}, const std::vector<double>& sweep_values = {}) {
    try {
        hqd::cli::RunConfig config = hqd::cli::load_config_file(args.config_path);
        if (verb_solver) {
            if (config.solver && *config.solver != *verb_solver)
                hqd::fail(hqd::Errc::SchemaError,
                          std::string("config solver '") + hqd::cli::solver_name(*config.solver) +
                              "' conflicts with the requested verb");
            config.solver = verb_solver;
        }

        hqd::cli::RunOptions options;
        options.out_dir = args.out_dir;
        options.threads = hqd::cli::resolve_threads(args.threads);
        options.dump_aux = args.dump_aux;
        options.dump_noise = args.dump_noise;
        if (args.seed >= 0) options.seed_override = static_cast<std::uint64_t>(args.seed);
        if (args.method == "rk4") options.method_override = hqd::Method::RK4;
        else if (args.method == "rkf45") options.method_override = hqd::Method::RKF45;
        else if (!args.method.empty())
            hqd::fail(hqd::Errc::SchemaError, "unknown --method '" + args.method + "'");

        // Re-validate the solver/statistics pairing after the verb override.
        if (config.solver == hqd::cli::Solver::Hops)
            hqd::require(config.system.statistics == hqd::Statistics::Bosonic,
                         hqd::Errc::IncompatibleSolver, "hops requires bosonic statistics");

        if (!sweep_axis.empty())
            return hqd::cli::sweep(config, hqd::cli::parse_sweep_axis(sweep_axis), sweep_values,
                                   options);
        return hqd::cli::run(config, options);
    } catch (const hqd::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return hqd::errc_exit_code(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical open-quantum-system dynamics"};
    app.set_version_flag("--version", std::string("hqd ") + hqd::kVersion);
    app.require_subcommand(1);

    struct Verb {
        const char* name;
        const char* help;
        std::optional<hqd::cli::Solver> solver;
        CommonArgs args;
        CLI::App* cmd = nullptr;
    };
    std::vector<Verb> verbs = {
        {"hops", "stochastic bosonic hierarchy ensemble", hqd::cli::Solver::Hops, {}, nullptr},
        {"master-boson", "bosonic density-matrix hierarchy", hqd::cli::Solver::MasterBoson, {}, nullptr},
        {"master-fermion", "fermionic density-matrix hierarchy", hqd::cli::Solver::MasterFermion, {}, nullptr},
        {"oracle", "exact discrete-bath reference", hqd::cli::Solver::Oracle, {}, nullptr},
        {"bcf", "bath correlation function evaluation/decomposition", hqd::cli::Solver::Bcf, {}, nullptr},
        {"verify", "Grassmann identity residual table", hqd::cli::Solver::Verify, {}, nullptr},
    };
    for (auto& verb : verbs) {
        verb.cmd = app.add_subcommand(verb.name, verb.help);
        add_common(verb.cmd, verb.args);
    }

    CommonArgs sweep_args;
    std::string sweep_axis;
    std::vector<double> sweep_values;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "convergence sweep over one axis");
    add_common(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--axis", sweep_axis, "depth | energy | trajectories | pade-count")
        ->required();
    sweep_cmd->add_option("--values", sweep_values, "axis values, e.g. --values 2 4 6")
        ->required()
        ->expected(-1);

    CLI11_PARSE(app, argc, argv);

    for (const auto& verb : verbs)
        if (verb.cmd->parsed()) return dispatch(verb.args, verb.solver);
    if (sweep_cmd->parsed()) return dispatch(sweep_args, std::nullopt, sweep_axis, sweep_values);
    return 1;
}
