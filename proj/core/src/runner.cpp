#include "hqd/runner.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hqd/grassmann.hpp"
#include "hqd/hops.hpp"
#include "hqd/master.hpp"
#include "hqd/version.hpp"

namespace hqd::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct SolverOutput {
    std::vector<double> times;
    std::vector<Matrix> rho;
    std::vector<Eigen::MatrixXd> std_error; // ensemble runs only
    json extra;                             // solver-specific summary fields
    std::vector<std::vector<Complex>> table; // generic CSV rows (bcf verb)
    std::vector<std::string> table_header;
};

void write_rho_csv(const fs::path& path, const SolverOutput& out, Eigen::Index d) {
    std::ofstream f(path);
    require(f.good(), Errc::InvalidArgument, "cannot write " + path.string());
    f << "t";
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b)
            f << ",re_rho_" << a << "_" << b << ",im_rho_" << a << "_" << b;
    if (!out.std_error.empty())
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) f << ",se_rho_" << a << "_" << b;
    f << "\n";
    for (std::size_t i = 0; i < out.times.size(); ++i) {
        f << fmt(out.times[i]);
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b)
                f << "," << fmt(out.rho[i](a, b).real()) << "," << fmt(out.rho[i](a, b).imag());
        if (!out.std_error.empty())
            for (Eigen::Index a = 0; a < d; ++a)
                for (Eigen::Index b = 0; b < d; ++b) f << "," << fmt(out.std_error[i](a, b));
        f << "\n";
    }
}

void write_table_csv(const fs::path& path, const SolverOutput& out) {
    std::ofstream f(path);
    require(f.good(), Errc::InvalidArgument, "cannot write " + path.string());
    f << "t";
    for (const auto& h : out.table_header) f << ",re_" << h << ",im_" << h;
    f << "\n";
    for (std::size_t i = 0; i < out.times.size(); ++i) {
        f << fmt(out.times[i]);
        for (const auto& v : out.table[i]) f << "," << fmt(v.real()) << "," << fmt(v.imag());
        f << "\n";
    }
}

std::vector<std::uint64_t> seed_list(const RunConfig& config, const RunOptions& options) {
    if (!config.seeds.empty()) return config.seeds;
    const std::uint64_t base = options.seed_override.value_or(config.seed);
    require(config.trajectories >= 2, Errc::InsufficientTrajectories,
            "hops needs trajectories >= 2 (or an explicit seed list)");
    std::vector<std::uint64_t> seeds(config.trajectories);
    for (int i = 0; i < config.trajectories; ++i) seeds[i] = base + static_cast<std::uint64_t>(i);
    return seeds;
}

SolverOutput execute_hops(const RunConfig& config, const RunOptions& options) {
    const auto expansion = expand_channels(config);
    hops::HopsRun run;
    run.spec = expansion.spec;
    run.modes = expansion.modes;
    run.grid = config.grid;
    run.truncation = config.truncation;
    if (run.truncation.energy) {
        run.truncation.energy->w.clear();
        for (const auto& m : run.modes) run.truncation.energy->w.push_back(m.w);
    }
    run.psi0 = config.psi0;
    run.terminator = config.terminator;
    run.method = options.method_override.value_or(config.method);
    run.tol = config.tol;

    const auto seeds = seed_list(config, options);

    if (options.dump_noise) {
        for (int j = 0; j < static_cast<int>(run.modes.size()); ++j) {
            const bcf::Mode mode = run.modes[j];
            const auto path = noise::sample(std::span(&mode, 1), run.grid, j, seeds.front());
            std::ofstream f(fs::path(options.out_dir) /
                            ("noise_ch" + std::to_string(j) + ".csv"));
            f << "t,re_z,im_z\n";
            for (int i = 0; i < run.grid.points(); ++i)
                f << fmt(run.grid.time(i)) << "," << fmt(path.values[i].real()) << ","
                  << fmt(path.values[i].imag()) << "\n";
        }
    }
    if (options.dump_aux) {
        // First trajectory with the full hierarchy, for debugging.
        const auto traj = hops::propagate_trajectory(run, seeds.front(), true);
        std::ofstream f(fs::path(options.out_dir) / "aux.bin", std::ios::binary);
        const std::uint64_t header[3] = {traj.aux.size(), traj.aux.front().size(),
                                         static_cast<std::uint64_t>(run.spec.dim)};
        f.write(reinterpret_cast<const char*>(header), sizeof(header));
        for (const auto& set : traj.aux)
            for (const auto& v : set)
                f.write(reinterpret_cast<const char*>(v.data()),
                        static_cast<std::streamsize>(sizeof(Complex) * v.size()));
    }

    const auto ens = hops::run_ensemble(run, seeds, options.threads, config.output_stride);

    SolverOutput out;
    out.times = ens.times;
    out.rho = ens.rho;
    out.std_error = ens.std_error;
    out.extra["trajectories"] = ens.trajectories;
    out.extra["seed"] = options.seed_override.value_or(config.seed);
    out.extra["seeds_explicit"] = !config.seeds.empty();
    if (!config.seeds.empty()) out.extra["seeds"] = config.seeds;
    out.extra["channels"] = static_cast<int>(run.modes.size());
    double max_drift = 0.0;
    for (const auto& rho : ens.rho) max_drift = std::max(max_drift, std::abs(rho.trace().real() - 1.0));
    out.extra["mean_trace_deviation"] = max_drift;
    return out;
}

SolverOutput execute_master(const RunConfig& config, const RunOptions& options) {
    const auto expansion = expand_channels(config);
    master::MasterRun run;
    run.spec = expansion.spec;
    run.modes = expansion.modes;
    run.grid = config.grid;
    run.truncation = config.truncation;
    if (run.truncation.energy) run.truncation.energy->w.clear(); // refilled for 2J channels
    run.psi0 = config.psi0;
    run.method = options.method_override.value_or(config.method);
    run.tol = config.tol;
    run.pair_reduction = config.pair_reduction;
    run.output_stride = config.output_stride;
    run.keep_aux = options.dump_aux;

    const auto res = master::propagate_master(run);

    SolverOutput out;
    out.times = res.times;
    out.rho = res.rho;
    double trace_drift = 0.0, pairing = 0.0;
    for (double v : res.trace_drift) trace_drift = std::max(trace_drift, v);
    for (double v : res.pairing_residual) pairing = std::max(pairing, v);
    out.extra["space_size"] = res.space_size;
    out.extra["trace_drift_max"] = trace_drift;
    out.extra["pairing_residual_max"] = pairing;
    out.extra["channels"] = static_cast<int>(run.modes.size());

    if (options.dump_aux && !res.aux.empty()) {
        const fs::path path = fs::path(options.out_dir) / "aux.bin";
        std::ofstream f(path, std::ios::binary);
        const std::uint64_t header[3] = {res.aux.size(), res.aux.front().size(),
                                         static_cast<std::uint64_t>(run.spec.dim)};
        f.write(reinterpret_cast<const char*>(header), sizeof(header));
        for (const auto& set : res.aux)
            for (const auto& m : set)
                f.write(reinterpret_cast<const char*>(m.data()),
                        static_cast<std::streamsize>(sizeof(Complex) * m.size()));
        out.extra["aux_dump"] = "aux.bin";
    }
    return out;
}

SolverOutput execute_oracle(const RunConfig& config, const RunOptions& options) {
    auto bath = config.discrete;
    bath.statistics = config.system.statistics;
    const auto res = oracle::exact_propagate(config.system, bath, config.grid, config.psi0);
    SolverOutput out;
    const int stride = std::max(config.output_stride, 1);
    for (std::size_t i = 0; i < res.times.size(); ++i) {
        if (static_cast<int>(i) % stride != 0 && i + 1 != res.times.size()) continue;
        out.times.push_back(res.times[i]);
        out.rho.push_back(res.rho[i]);
    }
    out.extra["norm_drift"] = res.norm_drift;
    out.extra["total_modes"] = bath.total_modes();
    (void)options;
    return out;
}

SolverOutput execute_bcf(const RunConfig& config, const RunOptions&) {
    SolverOutput out;
    out.times.reserve(config.grid.points());
    for (int i = 0; i < config.grid.points(); ++i) out.times.push_back(config.grid.time(i));

    switch (config.bath_kind) {
        case BathKind::Modes: {
            out.table_header = {"alpha"};
            for (double t : out.times)
                out.table.push_back({bcf::eval_modes(config.modes, t - config.grid.t0)});
            break;
        }
        case BathKind::Discrete: {
            const auto per_channel = oracle::bath_to_modes(config.discrete);
            for (std::size_t j = 0; j < per_channel.size(); ++j)
                out.table_header.push_back("alpha_" + std::to_string(j));
            for (double t : out.times) {
                std::vector<Complex> row;
                for (const auto& modes : per_channel)
                    row.push_back(bcf::eval_modes(modes, t - config.grid.t0));
                out.table.push_back(std::move(row));
            }
            break;
        }
        case BathKind::Spectral: {
            const auto sym = config.spectral.density.symmetrized();
            sym.validate();
            const auto modes = bcf::residue_expand(sym, config.spectral.thermal,
                                                   config.spectral.scheme, config.spectral.count);
            out.table_header = {"alpha_modes", "alpha_quadrature"};
            double max_err = 0.0, scale = 0.0;
            json mode_list = json::array();
            for (const auto& m : modes)
                mode_list.push_back({m.g.real(), m.g.imag(), m.w.real(), m.w.imag()});
            for (double t : out.times) {
                const double tau = t - config.grid.t0;
                const Complex a_modes = bcf::eval_modes(modes, tau);
                const Complex a_quad = bcf::thermal_bcf_quadrature(
                    sym, config.spectral.thermal, bcf::BcfKind::SpinBathAlpha, tau);
                max_err = std::max(max_err, std::abs(a_modes - a_quad));
                scale = std::max(scale, std::abs(a_quad));
                out.table.push_back({a_modes, a_quad});
            }
            out.extra["modes"] = mode_list;
            out.extra["count"] = config.spectral.count;
            out.extra["max_abs_error"] = max_err;
            out.extra["max_rel_error"] = scale > 0 ? max_err / scale : 0.0;
            break;
        }
        case BathKind::None:
            fail(Errc::SchemaError, "no bath given");
    }
    return out;
}

SolverOutput execute_verify(const RunConfig& config, const RunOptions& options) {
    const auto reports = grassmann::check_identities(
        config.verify_trials, options.seed_override.value_or(config.seed));
    SolverOutput out;
    json rows = json::array();
    std::printf("%-22s %14s %8s\n", "identity", "max residual", "trials");
    for (const auto& r : reports) {
        std::printf("%-22s %14.3e %8d\n", r.name.c_str(), r.max_residual, r.trials);
        rows.push_back({{"name", r.name}, {"max_residual", r.max_residual}, {"trials", r.trials}});
    }
    out.extra["identities"] = rows;
    return out;
}

SolverOutput execute(const RunConfig& config, const RunOptions& options, Solver solver) {
    switch (solver) {
        case Solver::Hops: return execute_hops(config, options);
        case Solver::MasterBoson:
        case Solver::MasterFermion: return execute_master(config, options);
        case Solver::Oracle: return execute_oracle(config, options);
        case Solver::Bcf: return execute_bcf(config, options);
        case Solver::Verify: return execute_verify(config, options);
    }
    fail(Errc::SchemaError, "no solver selected");
}

void write_summary(const fs::path& dir, const json& summary) {
    std::ofstream f(dir / "summary.json");
    f << summary.dump(2) << "\n";
}

json base_summary(const RunConfig& config, const RunOptions& options, Solver solver) {
    json summary;
    summary["version"] = std::string("hqd ") + kVersion;
    summary["solver"] = solver_name(solver);
    summary["grid"] = {{"t0", config.grid.t0}, {"t1", config.grid.t1}, {"steps", config.grid.steps}};
    summary["method"] = config.method == Method::RK4 ? "rk4" : "rkf45";
    summary["threads"] = options.threads;
    return summary;
}

} // namespace

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("HQD_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

namespace {

int run_captured(const RunConfig& config, const RunOptions& options, SolverOutput* capture) {
    const fs::path dir(options.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);

    Solver solver = config.solver.value_or(Solver::Bcf);
    json summary = base_summary(config, options, solver);
    const auto start = std::chrono::steady_clock::now();
    try {
        require(config.solver.has_value(), Errc::SchemaError, "config selects no solver");
        SolverOutput out = execute(config, options, solver);
        summary.update(out.extra);
        if (!out.rho.empty()) {
            write_rho_csv(dir / "rho.csv", out, config.system.dim);
            summary["output"] = "rho.csv";
        } else if (!out.table.empty()) {
            write_table_csv(dir / "bcf.csv", out);
            summary["output"] = "bcf.csv";
        }
        summary["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        summary["exit_code"] = 0;
        write_summary(dir, summary);
        if (capture) *capture = std::move(out);
        return 0;
    } catch (const Error& e) {
        const int code = errc_exit_code(e.code());
        summary["error"] = {{"code", errc_name(e.code())}, {"message", e.what()}};
        summary["exit_code"] = code;
        write_summary(dir, summary);
        return code;
    } catch (const std::exception& e) {
        summary["error"] = {{"code", "Unexpected"}, {"message", e.what()}};
        summary["exit_code"] = 3;
        write_summary(dir, summary);
        return 3;
    }
}

} // namespace

int run(const RunConfig& config, const RunOptions& options) {
    return run_captured(config, options, nullptr);
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "depth") return SweepAxis::Depth;
    if (name == "energy") return SweepAxis::Energy;
    if (name == "trajectories") return SweepAxis::Trajectories;
    if (name == "pade-count") return SweepAxis::PadeCount;
    fail(Errc::SchemaError, "unknown sweep axis '" + name + "'");
}

int sweep(const RunConfig& config, SweepAxis axis, std::span<const double> values,
          const RunOptions& options) {
    require(values.size() >= 2, Errc::InvalidArgument, "a sweep needs at least two values");
    const fs::path dir(options.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);

    const char* axis_name = axis == SweepAxis::Depth        ? "depth"
                            : axis == SweepAxis::Energy     ? "energy"
                            : axis == SweepAxis::Trajectories ? "trajectories"
                                                              : "pade-count";

    struct Entry {
        double value;
        SolverOutput out;
    };
    std::vector<Entry> entries;
    json summary;
    summary["axis"] = axis_name;
    summary["version"] = std::string("hqd ") + kVersion;

    try {
        for (double value : values) {
            RunConfig local = config;
            switch (axis) {
                case SweepAxis::Depth:
                    local.truncation.depth = static_cast<int>(value);
                    local.truncation.energy.reset();
                    break;
                case SweepAxis::Energy:
                    require(local.truncation.energy.has_value(), Errc::SchemaError,
                            "energy sweep needs an energy truncation in the config");
                    local.truncation.energy->w_max = value;
                    break;
                case SweepAxis::Trajectories:
                    local.trajectories = static_cast<int>(value);
                    local.seeds.clear();
                    break;
                case SweepAxis::PadeCount:
                    require(local.bath_kind == BathKind::Spectral, Errc::SchemaError,
                            "pade-count sweep needs a spectral bath");
                    local.spectral.count = static_cast<int>(value);
                    break;
            }
            RunOptions local_options = options;
            std::ostringstream sub;
            sub << axis_name << "_" << value;
            local_options.out_dir = (dir / sub.str()).string();
            Entry e;
            e.value = value;
            const int code = run_captured(local, local_options, &e.out);
            require(code == 0, Errc::InvalidArgument,
                    "sweep run failed with exit code " + std::to_string(code));
            entries.push_back(std::move(e));
        }
    } catch (const Error& e) {
        const int code = errc_exit_code(e.code());
        summary["error"] = {{"code", errc_name(e.code())}, {"message", e.what()}};
        summary["exit_code"] = code;
        write_summary(dir, summary);
        return code;
    }

    // Pairwise differences between consecutive axis values.
    std::ofstream f(dir / "convergence.csv");
    json rows = json::array();
    if (config.solver == Solver::Bcf) {
        f << "value,max_abs_error,max_rel_error\n";
        for (const auto& e : entries) {
            f << fmt(e.value) << "," << fmt(e.out.extra["max_abs_error"].get<double>()) << ","
              << fmt(e.out.extra["max_rel_error"].get<double>()) << "\n";
            rows.push_back({{"value", e.value},
                            {"max_rel_error", e.out.extra["max_rel_error"].get<double>()}});
        }
    } else {
        f << "value_a,value_b,max_diff";
        const bool with_se = !entries.front().out.std_error.empty();
        if (with_se) f << ",mean_se_a,mean_se_b";
        f << "\n";
        for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
            const auto& a = entries[i].out;
            const auto& b = entries[i + 1].out;
            require(a.times.size() == b.times.size(), Errc::GridMismatch,
                    "sweep runs produced different grids");
            double diff = 0.0;
            for (std::size_t k = 0; k < a.rho.size(); ++k)
                diff = std::max(diff, (a.rho[k] - b.rho[k]).cwiseAbs().maxCoeff());
            f << fmt(entries[i].value) << "," << fmt(entries[i + 1].value) << "," << fmt(diff);
            json row = {{"value_a", entries[i].value},
                        {"value_b", entries[i + 1].value},
                        {"max_diff", diff}};
            if (with_se) {
                auto mean_se = [](const SolverOutput& o) {
                    double acc = 0.0;
                    std::size_t n = 0;
                    for (const auto& se : o.std_error) {
                        acc += se.sum();
                        n += static_cast<std::size_t>(se.size());
                    }
                    return n ? acc / static_cast<double>(n) : 0.0;
                };
                const double sa = mean_se(a), sb = mean_se(b);
                f << "," << fmt(sa) << "," << fmt(sb);
                row["mean_se_a"] = sa;
                row["mean_se_b"] = sb;
            }
            f << "\n";
            rows.push_back(std::move(row));
        }
    }
    summary["rows"] = rows;
    summary["exit_code"] = 0;
    write_summary(dir, summary);
    return 0;
}

} // namespace hqd::cli
