#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chtd/chidenn_basis.hpp"
#include "chtd/td_solver.hpp"

namespace chtd {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Environment variable that replaces output_dir from the config file.
inline constexpr const char* kOutputDirEnv = "CHTD_OUTPUT_DIR";

enum class ProblemId { Poisson2d, Diffusion4d };

/// What energy errors in a convergence study are measured against.
enum class ReferenceKind {
    Grid,   // 5-point finite differences on reference_points² nodes
    Dense,  // un-separated Galerkin solve on the same mesh and basis
    Exact,  // closed form; requires source = manufactured
};

enum class PoissonSource { Gaussian, Manufactured };

struct RunConfig {
    ProblemId problem = ProblemId::Poisson2d;
    /// Elements per dimension (x, y) or (x, y, z, t).
    std::vector<std::size_t> elements;
    Hyperparams hyper = Hyperparams::fe_linear();
    SolverConfig solver;
    PoissonSource source = PoissonSource::Gaussian;
    ReferenceKind reference = ReferenceKind::Grid;
    std::size_t reference_points = 1001;
    std::filesystem::path output_dir = "chtd_out";
    bool verbatim_sign = false;

    // convergence-study
    std::vector<std::size_t> study_grids{16, 32, 64};
    std::vector<std::size_t> study_ranks{1, 2, 3, 4, 5, 6};
    std::vector<Hyperparams> study_variants{Hyperparams::fe_linear(), Hyperparams::chidenn(2, 2)};

    // benchmark
    std::vector<std::size_t> bench_sizes{11, 21, 41};  // grid points per spatial axis
    std::size_t bench_time_elements = 40;
    double fdm_safety = 0.9;
    /// FDM runs whose working set (three full fields) exceeds this are skipped.
    std::uint64_t memory_guard_bytes = 1ull << 30;

    /// Builds the configured problem.
    WeakProblem build_problem() const;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Key-value text: one "key = value" per line, '#' starts a comment, lists are
/// comma separated. Overrides are applied after the file; the output-directory
/// environment variable sits between the two. Throws ConfigError naming the key.
RunConfig parse_config(const std::optional<std::filesystem::path>& file, const ConfigOverrides& overrides = {});
RunConfig parse_config_text(const std::string& text, const ConfigOverrides& overrides = {});

/// Every resolved setting, defaults included, as "key = value" lines that
/// parse_config_text accepts back.
std::string describe_config(const RunConfig& config);

std::string to_string(ProblemId id);
std::string to_string(SolveMode mode);
/// "fe_linear" or "chidenn:s:p:a".
std::string describe_hyper(const Hyperparams& hyper);
/// Inverse of describe_hyper; a may be omitted ("chidenn:2:2").
Hyperparams parse_hyper(const std::string& text);

}  // namespace chtd
