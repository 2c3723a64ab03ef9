#include "chtd/runs.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "chtd/alloc_tracker.hpp"
#include "chtd/detail/byte_io.hpp"
#include "chtd/error.hpp"
#include "chtd/reference_oracles.hpp"
#include "chtd/separated_solution.hpp"
#include "chtd/td_solver.hpp"

namespace chtd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string optional_number(const std::optional<double>& v) { return v ? detail::format_double(*v) : ""; }

// CSV fields here never contain quotes; commas only appear in error messages.
std::string csv_text(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n') ch = ';';
    return s;
}

Function2D source_function(const WeakProblem& problem) {
    return [src = problem.source](double x, double y) {
        const double p[2] = {x, y};
        return src(p);
    };
}

}  // namespace

SolveArtifacts run_solve(const RunConfig& config) {
    const WeakProblem problem = config.build_problem();
    const SolveResult result = solve(problem, config.solver);

    SolveArtifacts art;
    art.converged = result.trace.converged;
    art.sweeps = result.trace.sweeps.size();
    std::filesystem::create_directories(config.output_dir);
    art.solution = config.output_dir / "solution.chtd";
    art.trace = config.output_dir / "trace.csv";
    art.metadata = config.output_dir / "metadata.txt";

    export_solution(result.solution, art.solution);

    {
        auto out = open_output(art.trace);
        out << "sweep,stage,change";
        for (const auto& d : problem.dims) out << ",residual_" << d.label;
        out << ",wall_seconds\n";
        for (const auto& s : result.trace.sweeps) {
            out << s.index << ',' << s.stage << ',' << detail::format_double(s.change);
            for (double r : s.residuals) out << ',' << detail::format_double(r);
            out << ',' << detail::format_double(s.wall_seconds) << '\n';
        }
    }
    {
        auto out = open_output(art.metadata);
        out << "# resolved configuration\n" << describe_config(config);
        out << "# run\n";
        out << "library_version = " << kLibraryVersion << '\n';
        out << "problem_id = " << problem.id << '\n';
        out << "converged = " << (art.converged ? "true" : "false") << '\n';
        out << "sweeps = " << art.sweeps << '\n';
        out << "final_change = "
            << (result.trace.sweeps.empty() ? std::string("nan")
                                            : detail::format_double(result.trace.sweeps.back().change))
            << '\n';
        out << "storage_bytes = " << storage_bytes(result.solution) << '\n';
        for (const auto& d : problem.dims)
            out << "quad_points_" << d.label << " = "
                << config.solver.quad_points.value_or(d.hyper.default_quad_points()) << '\n';
    }
    return art;
}

GridField poisson_reference(const RunConfig& config) {
    if (config.problem != ProblemId::Poisson2d) throw ConfigError("problem", "reference field requires poisson2d");
    const std::size_t n = config.reference_points;
    switch (config.reference) {
    case ReferenceKind::Grid:
        return solve_poisson_grid2d(n, source_function(config.build_problem()));
    case ReferenceKind::Exact: {
        GridField f({linspace(0.0, 10.0, n), linspace(0.0, 10.0, n)}, "poisson2d-exact");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                f(i, j) = manufactured_poisson2d_exact(f.coords[0][i], f.coords[1][j]);
        return f;
    }
    case ReferenceKind::Dense:
        return dense_galerkin_2d(config.build_problem(), config.solver.quad_points);
    }
    throw ConfigError("reference", "unhandled reference kind");
}

std::vector<StudyRow> run_convergence_study(const RunConfig& config, const std::optional<GridField>& reference) {
    if (config.problem != ProblemId::Poisson2d) throw ConfigError("problem", "convergence study requires poisson2d");
    std::optional<GridField> shared = reference;
    if (!shared && config.reference != ReferenceKind::Dense) shared = poisson_reference(config);

    std::vector<std::size_t> ranks = config.study_ranks;
    std::sort(ranks.begin(), ranks.end());

    std::vector<StudyRow> rows;
    for (std::size_t grid : config.study_grids) {
        for (const Hyperparams& variant : config.study_variants) {
            RunConfig local = config;
            local.elements = {grid, grid};
            local.hyper = variant;
            std::optional<WeakProblem> problem;
            std::optional<OperatorBundles> bundles;
            std::optional<GridField> dense_ref;
            std::string setup_error;
            try {
                problem = local.build_problem();
                bundles = precompute_dim_operators(*problem, config.solver.quad_points);
                if (!shared) dense_ref = dense_galerkin_2d(*problem, config.solver.quad_points);
            } catch (const std::exception& e) {
                setup_error = e.what();
            }
            std::optional<SeparatedSolution> warm;
            for (std::size_t rank : ranks) {
                StudyRow row;
                row.grid = grid;
                row.rank = rank;
                row.variant = describe_hyper(variant);
                if (!setup_error.empty()) {
                    row.status = "error: " + setup_error;
                    rows.push_back(std::move(row));
                    continue;
                }
                try {
                    SolverConfig sc = config.solver;
                    sc.rank = rank;
                    const auto t0 = Clock::now();
                    SolveResult res = solve(*problem, *bundles, sc, warm);
                    row.wall_seconds = seconds_since(t0);
                    row.sweeps = res.trace.sweeps.size();
                    row.converged = res.trace.converged;
                    row.energy_error = energy_norm_error(res.solution, shared ? *shared : *dense_ref);
                    row.status = row.converged ? "ok" : "not converged";
                    warm = std::move(res.solution);
                } catch (const std::exception& e) {
                    row.status = std::string("error: ") + e.what();
                    warm.reset();
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

void write_study_csv(const std::vector<StudyRow>& rows, const std::filesystem::path& path) {
    auto out = open_output(path);
    out << "grid,rank,variant,energy_error,sweeps,converged,wall_seconds,status\n";
    for (const auto& r : rows)
        out << r.grid << ',' << r.rank << ',' << r.variant << ',' << optional_number(r.energy_error) << ',' << r.sweeps
            << ',' << (r.converged ? "true" : "false") << ',' << detail::format_double(r.wall_seconds) << ','
            << csv_text(r.status) << '\n';
}

std::uint64_t fdm_storage_bytes(std::size_t points, std::size_t snapshots) {
    const auto n = static_cast<std::uint64_t>(points);
    return n * n * n * static_cast<std::uint64_t>(snapshots) * sizeof(double);
}

std::uint64_t fdm_working_bytes(std::size_t points) { return 3 * fdm_storage_bytes(points, 1); }

std::vector<BenchRecord> run_benchmark(const RunConfig& config) {
    if (config.problem != ProblemId::Diffusion4d) throw ConfigError("problem", "benchmark requires diffusion4d");
    const DiffusionConstants constants;
    const SeparableSource source = diffusion_source(constants);

    std::vector<BenchRecord> records;
    for (std::size_t points : config.bench_sizes) {
        const std::size_t ne = points - 1;
        const std::string space = std::to_string(points) + "^3";

        BenchRecord td;
        td.method = "TD";
        td.points = points;
        td.grid = space + "x" + std::to_string(config.bench_time_elements + 1);
        std::optional<SeparatedSolution> td_solution;
        try {
            const WeakProblem problem =
                diffusion_spacetime_problem({ne, ne, ne, config.bench_time_elements}, config.hyper,
                                            config.verbatim_sign, constants);
            alloc::reset_peak();
            const std::size_t base = alloc::current_bytes();
            const auto t0 = Clock::now();
            SolveResult res = solve(problem, config.solver);
            td.wall_seconds = seconds_since(t0);
            td.peak_bytes = alloc::peak_bytes() - base;
            td.storage_bytes = storage_bytes(res.solution);
            if (!res.trace.converged) td.status = "not converged";
            td_solution = std::move(res.solution);
        } catch (const std::exception& e) {
            td.status = std::string("error: ") + e.what();
        }

        BenchRecord fdm;
        fdm.method = "FDM";
        fdm.points = points;
        fdm.storage_bytes = fdm_storage_bytes(points);
        if (fdm_working_bytes(points) > config.memory_guard_bytes) {
            fdm.grid = space;
            fdm.status = "skipped: memory guard";
        } else {
            try {
                FdmConfig fc;
                fc.points = points;
                fc.safety = config.fdm_safety;
                fc.t_end = constants.t_end;
                fc.constants = constants;
                alloc::reset_peak();
                const std::size_t base = alloc::current_bytes();
                const auto t0 = Clock::now();
                FdmResult res = solve_diffusion_fdm3d(fc, source);
                fdm.wall_seconds = seconds_since(t0);
                fdm.peak_bytes = alloc::peak_bytes() - base;
                fdm.grid = space + "x" + std::to_string(res.steps + 1);
                if (td_solution) {
                    auto coords = res.field.coords;
                    coords.push_back({constants.t_end});
                    GridField td_field(res.field.coords);
                    td_field.values = evaluate_grid(*td_solution, coords).values;
                    td.rel_l2 = rel_l2_error(td_field, res.field).value;
                }
            } catch (const std::exception& e) {
                fdm.grid = space;
                fdm.status = std::string("error: ") + e.what();
            }
        }
        records.push_back(std::move(td));
        records.push_back(std::move(fdm));
    }
    return records;
}

void write_bench_csv(const std::vector<BenchRecord>& records, const std::filesystem::path& path) {
    auto out = open_output(path);
    out << "method,grid,points,wall_seconds,peak_bytes,storage_bytes,rel_l2,status\n";
    for (const auto& r : records)
        out << r.method << ',' << r.grid << ',' << r.points << ',' << detail::format_double(r.wall_seconds) << ','
            << r.peak_bytes << ',' << r.storage_bytes << ',' << optional_number(r.rel_l2) << ',' << csv_text(r.status)
            << '\n';
}

std::filesystem::path run_reference(const RunConfig& config) {
    GridField field;
    if (config.problem == ProblemId::Poisson2d) {
        field = poisson_reference(config);
    } else {
        FdmConfig fc;
        fc.points = config.elements.at(0) + 1;
        fc.safety = config.fdm_safety;
        if (fdm_working_bytes(fc.points) > config.memory_guard_bytes)
            throw TooLarge("FDM reference on " + std::to_string(fc.points) + "^3 points exceeds the memory guard");
        field = solve_diffusion_fdm3d(fc, diffusion_source(fc.constants)).field;
    }
    std::filesystem::create_directories(config.output_dir);
    const auto raw = config.output_dir / "reference.raw";
    write_grid_raw(field, raw);
    if (field.size() <= 100'000) write_grid_csv(field, config.output_dir / "reference.csv");
    return raw;
}

std::string inspect_chtd(const std::filesystem::path& path) {
    const SeparatedSolution sol = import_solution(path);
    std::ostringstream out;
    out << "format: CHTD version " << kChtdVersion << '\n';
    out << "dimensions: " << sol.n_dims() << '\n';
    out << "rank: " << sol.rank() << '\n';
    out << "payload_bytes: " << storage_bytes(sol) << '\n';
    out << "file_bytes: " << std::filesystem::file_size(path) << '\n';
    for (std::size_t d = 0; d < sol.n_dims(); ++d) {
        const DimSpec& dim = sol.dim(d);
        out << "dim " << d << " '" << dim.label << "': [" << detail::format_double(dim.mesh.x_min()) << ", "
            << detail::format_double(dim.mesh.x_max()) << "], " << dim.mesh.n_elem() << " elements, basis "
            << describe_hyper(dim.hyper) << ", constrained {";
        const auto& con = dim.constraints.constrained();
        for (std::size_t i = 0; i < con.size(); ++i) out << (i ? "," : "") << con[i];
        out << "}, factor norm " << detail::format_double(sol.factor(d).norm()) << '\n';
    }
    return out.str();
}

}  // namespace chtd
