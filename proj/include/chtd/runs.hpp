#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chtd/grid_field.hpp"
#include "chtd/run_config.hpp"

namespace chtd {

// Process exit codes of the command-line tool.
inline constexpr int kExitConverged = 0;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitConfigError = 3;
inline constexpr int kExitRuntimeError = 4;

struct SolveArtifacts {
    std::filesystem::path solution;  // CHTD1
    std::filesystem::path trace;     // CSV
    std::filesystem::path metadata;  // key = value
    bool converged = false;
    std::size_t sweeps = 0;
};

/// Solves the configured problem and writes solution.chtd, trace.csv and
/// metadata.txt into output_dir. Files are written whether or not it converged.
SolveArtifacts run_solve(const RunConfig& config);

struct StudyRow {
    std::size_t grid = 0;  // elements per axis
    std::size_t rank = 0;
    std::string variant;   // describe_hyper
    std::optional<double> energy_error;
    std::size_t sweeps = 0;
    bool converged = false;
    double wall_seconds = 0.0;
    std::string status;    // "ok", "not converged" or "error: ..."
};

/// Reference field of the configured Poisson problem on reference_points² nodes
/// (grid or exact). Dense references depend on the mesh and are built per row.
GridField poisson_reference(const RunConfig& config);

/// One row per (grid, variant, rank), ranks in ascending order with each solve
/// warm-started from the previous rank of the same (grid, variant). Solver
/// failures become rows with an error status. A precomputed reference may be passed.
std::vector<StudyRow> run_convergence_study(const RunConfig& config,
                                            const std::optional<GridField>& reference = std::nullopt);

/// Header: grid,rank,variant,energy_error,sweeps,converged,wall_seconds,status
void write_study_csv(const std::vector<StudyRow>& rows, const std::filesystem::path& path);

struct BenchRecord {
    std::string method;  // TD, FDM or DENSE
    std::string grid;    // e.g. "21^3x40"
    std::size_t points = 0;  // grid points per spatial axis
    double wall_seconds = 0.0;
    std::uint64_t peak_bytes = 0;
    std::uint64_t storage_bytes = 0;
    /// TD against FDM on the FDM nodes at the final time.
    std::optional<double> rel_l2;
    std::string status = "ok";
};

/// Full-tensor storage of an FDM run that keeps `snapshots` fields of points³ values.
std::uint64_t fdm_storage_bytes(std::size_t points, std::size_t snapshots = 1);
/// Memory an FDM run holds at once: current and next field plus the source field.
std::uint64_t fdm_working_bytes(std::size_t points);

/// Space-time diffusion at every bench size: TD with points−1 elements per spatial
/// axis, and FDM on points³ unless the memory guard trips. Requires diffusion4d.
std::vector<BenchRecord> run_benchmark(const RunConfig& config);

/// Header: method,grid,points,wall_seconds,peak_bytes,storage_bytes,rel_l2,status
void write_bench_csv(const std::vector<BenchRecord>& records, const std::filesystem::path& path);

/// Writes the configured reference (Poisson grid/exact/dense field or the FDM
/// final-time field for diffusion) as reference.raw, plus reference.csv when it
/// has at most 1e5 points. Returns the raw file path.
std::filesystem::path run_reference(const RunConfig& config);

/// Human-readable header and per-dimension summary of a CHTD1 file.
std::string inspect_chtd(const std::filesystem::path& path);

}  // namespace chtd
