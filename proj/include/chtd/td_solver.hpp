#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chtd/banded_matrix.hpp"
#include "chtd/operators_1d.hpp"
#include "chtd/separated_solution.hpp"

namespace chtd {

/// coeff · ⊗_i Op_i
struct BilinearTerm {
    double coeff = 1.0;
    std::vector<OperatorKind> ops;
};

/// coeff · Π_i f_i(x_i)
struct SourceTerm {
    double coeff = 1.0;
    std::vector<ScalarFunction> factors;
};

struct SeparableSource {
    std::vector<SourceTerm> terms;

    /// Σ_terms coeff·Π f_i(point_i)
    double operator()(std::span<const double> point) const;
};

/// Σ_terms a_t(δu, u) = Σ_source (δu, b_s) with every factor of u discretized
/// on its own 1D basis.
struct WeakProblem {
    std::string id;
    std::vector<DimSpec> dims;
    std::vector<BilinearTerm> terms;
    SeparableSource source;

    std::size_t n_dims() const noexcept { return dims.size(); }
    /// Throws InvalidArgument on structural inconsistencies.
    void validate() const;
};

enum class SolveMode : std::uint8_t { FullAls, Greedy };

struct SolverConfig {
    std::size_t rank = 1;
    SolveMode mode = SolveMode::FullAls;
    double tol = 1e-6;
    std::size_t max_sweeps = 100;
    std::uint64_t seed = 0;
    /// Quadrature points per element for every dimension; defaults per basis.
    std::optional<std::size_t> quad_points;
    /// GREEDY only: after the last rank, run full sweeps over all ranks.
    bool greedy_refine = false;

    void validate() const;
};

struct SweepRecord {
    std::size_t index = 0;
    /// Rank being enriched in GREEDY mode; rank count for full sweeps.
    std::size_t stage = 0;
    double change = 0.0;
    /// ‖A_d U_d − Q_d‖ / ‖Q_d‖ per dimension.
    std::vector<double> residuals;
    double wall_seconds = 0.0;
};

struct SolveTrace {
    std::vector<SweepRecord> sweeps;
    bool converged = false;
};

/// Reduced (Dirichlet-eliminated) 1D operators and loads of one dimension.
struct DimOperators {
    ConstraintSet constraints;
    std::array<std::optional<BandedMatrix>, kOperatorKinds> ops;
    /// One reduced load vector per source term.
    std::vector<Eigen::VectorXd> loads;

    std::size_t n_reduced() const noexcept { return constraints.n_reduced(); }
    const BandedMatrix& op(OperatorKind kind) const;
};

using OperatorBundles = std::vector<DimOperators>;

/// Assembles every operator kind referenced by the terms plus the source loads.
OperatorBundles precompute_dim_operators(const WeakProblem& problem,
                                         std::optional<std::size_t> quad_points = std::nullopt);

struct BlockSystem {
    Eigen::MatrixXd matrix;  // (M·L̂_d)², block (m,n) couples test rank m with trial rank n
    Eigen::VectorXd rhs;     // M·L̂_d
};

/// A_d and Q_d of dimension d with all other factors frozen at state.
/// Throws SingularBlock if some rank vanishes in another dimension.
BlockSystem build_block_system(const WeakProblem& problem, const OperatorBundles& bundles,
                               const SeparatedSolution& state, std::size_t d);

struct SweepResult {
    SeparatedSolution state;
    /// max_d ‖U_d,new − U_d,old‖ / max(‖U_d,new‖, 1e-30)
    double change = 0.0;
    std::vector<double> residuals;
};

/// One pass of the alternating fixed point over all dimensions in declared order.
SweepResult als_sweep(const WeakProblem& problem, const OperatorBundles& bundles, const SeparatedSolution& state);

struct SolveResult {
    SeparatedSolution solution;
    SolveTrace trace;
};

/// Deterministic for fixed (problem, config). A warm start supplies the leading
/// ranks; the remaining ones are drawn from the seeded generator.
SolveResult solve(const WeakProblem& problem, const SolverConfig& config,
                  const std::optional<SeparatedSolution>& warm_start = std::nullopt);
SolveResult solve(const WeakProblem& problem, const OperatorBundles& bundles, const SolverConfig& config,
                  const std::optional<SeparatedSolution>& warm_start = std::nullopt);

// Problems -------------------------------------------------------------------

/// Δu + b = 0 on [0,10]², u = 0 on the boundary, b = exp(−10(x−5)² − 10(y−5)²).
WeakProblem poisson2d_problem(std::array<std::size_t, 2> n_elem, const Hyperparams& hyper);

/// Same operator with b = 2(π/10)²·sin(πx/10)·sin(πy/10), exact solution sin(πx/10)·sin(πy/10).
WeakProblem manufactured_poisson2d_problem(std::array<std::size_t, 2> n_elem, const Hyperparams& hyper);
double manufactured_poisson2d_exact(double x, double y);

struct DiffusionConstants {
    double length = 0.01;  // m, cube edge
    double t_end = 0.5;    // s
    double rho = 1000.0;
    double c_p = 367.8;
    double k = 5.836;
    double source_amplitude = 2.55e11;
    double source_width = 5e-4;
    double heat_depth = 9.5e-3;  // source active for z >= heat_depth

    double alpha() const noexcept { return k / (rho * c_p); }
    double rho_cp() const noexcept { return rho * c_p; }
};

/// Three Gaussian spots (x, y) times H(z − depth) times 1(t).
SeparableSource diffusion_source(const DiffusionConstants& c = {});

/// Heaviside with H(0) = 1/2.
double heaviside(double v) noexcept;

/// ρc_p u̇ − kΔu = b in space-time on [0,L]³ × [0,t_end], u = 0 on spatial faces and at t = 0.
/// verbatim_sign flips to ρc_p u̇ + kΔu + b = 0 as printed.
WeakProblem diffusion_spacetime_problem(std::array<std::size_t, 4> n_elem, const Hyperparams& hyper,
                                        bool verbatim_sign = false, const DiffusionConstants& c = {});

}  // namespace chtd
