// chtd: solve separated problems, run convergence studies and TD/FDM benchmarks.
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chtd/error.hpp"
#include "chtd/run_config.hpp"
#include "chtd/runs.hpp"

namespace {

struct Common {
    std::string config_file;
    std::vector<std::string> sets;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
        cmd->add_option("--set", sets, "override a configuration key (key=value), repeatable");
    }

    chtd::RunConfig resolve() const {
        chtd::ConfigOverrides overrides;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw chtd::ConfigError(s, "--set expects key=value");
            overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        std::optional<std::filesystem::path> file;
        if (!config_file.empty()) file = config_file;
        return chtd::parse_config(file, overrides);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Separated (tensor decomposition) solvers with C-HiDeNN bases"};
    app.require_subcommand(1);
    app.set_version_flag("--version", chtd::kLibraryVersion);

    Common solve_opts, study_opts, bench_opts, ref_opts;
    auto* solve_cmd = app.add_subcommand("solve", "solve the configured problem; writes solution.chtd, trace.csv, metadata.txt");
    solve_opts.attach(solve_cmd);
    auto* study_cmd = app.add_subcommand("convergence-study", "energy error over grids x variants x ranks (poisson2d)");
    study_opts.attach(study_cmd);
    auto* bench_cmd = app.add_subcommand("benchmark", "TD against explicit FDM on the space-time diffusion problem");
    bench_opts.attach(bench_cmd);
    auto* ref_cmd = app.add_subcommand("reference", "write the configured reference field");
    ref_opts.attach(ref_cmd);
    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "print the header and dimension summary of a CHTD1 file");
    inspect_cmd->add_option("file", inspect_path, "CHTD1 file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : chtd::kExitConfigError;
    }

    try {
        if (*solve_cmd) {
            const chtd::RunConfig cfg = solve_opts.resolve();
            std::cout << chtd::describe_config(cfg);
            const auto art = chtd::run_solve(cfg);
            std::cout << (art.converged ? "converged" : "not converged") << " after " << art.sweeps << " sweeps\n"
                      << "wrote " << art.solution.string() << ", " << art.trace.string() << ", "
                      << art.metadata.string() << '\n';
            return art.converged ? chtd::kExitConverged : chtd::kExitNotConverged;
        }
        if (*study_cmd) {
            const chtd::RunConfig cfg = study_opts.resolve();
            std::cout << chtd::describe_config(cfg);
            const auto rows = chtd::run_convergence_study(cfg);
            const auto path = cfg.output_dir / "convergence_study.csv";
            chtd::write_study_csv(rows, path);
            std::cout << "wrote " << rows.size() << " rows to " << path.string() << '\n';
            return chtd::kExitConverged;
        }
        if (*bench_cmd) {
            const chtd::RunConfig cfg = bench_opts.resolve();
            std::cout << chtd::describe_config(cfg);
            const auto records = chtd::run_benchmark(cfg);
            const auto path = cfg.output_dir / "benchmark.csv";
            chtd::write_bench_csv(records, path);
            std::cout << "wrote " << records.size() << " records to " << path.string() << '\n';
            return chtd::kExitConverged;
        }
        if (*ref_cmd) {
            const chtd::RunConfig cfg = ref_opts.resolve();
            std::cout << chtd::describe_config(cfg);
            std::cout << "wrote " << chtd::run_reference(cfg).string() << '\n';
            return chtd::kExitConverged;
        }
        if (*inspect_cmd) {
            std::cout << chtd::inspect_chtd(inspect_path);
            return chtd::kExitConverged;
        }
    } catch (const chtd::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return chtd::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return chtd::kExitRuntimeError;
    }
    return chtd::kExitRuntimeError;
}
