// runner.hpp — run orchestration: executes the configured solver, writes
// rho.csv and summary.json, and drives convergence sweeps.

#pragma once

#include <span>
#include <string>

#include "hqd/config.hpp"

namespace hqd::cli {

struct RunOptions {
    std::string out_dir = ".";
    int threads = 1;
    std::optional<std::uint64_t> seed_override;
    std::optional<Method> method_override;
    bool dump_aux = false;   // binary dump of auxiliary states for debugging
    bool dump_noise = false; // per-channel CSV of the first trajectory's noise
};

// Executes the configured solver. Always writes summary.json (with the error
// recorded on failure). Returns the process exit code: 0 success, 2 schema /
// validation, 3 numerical failure, 4 resource guard.
int run(const RunConfig& config, const RunOptions& options);

enum class SweepAxis { Depth, Energy, Trajectories, PadeCount };

SweepAxis parse_sweep_axis(const std::string& name);

// Runs the config once per axis value (subdirectories of out_dir) and writes
// convergence.csv with the pairwise max-norm differences of rho(t) between
// consecutive values (BCF error vs quadrature for the PadeCount axis).
int sweep(const RunConfig& config, SweepAxis axis, std::span<const double> values,
          const RunOptions& options);

// Reads the worker-count default from the environment (HQD_THREADS); a flag
// value > 0 takes precedence.
int resolve_threads(int flag_value);

} // namespace hqd::cli
