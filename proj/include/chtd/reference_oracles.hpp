#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "chtd/grid_field.hpp"
#include "chtd/separated_solution.hpp"
#include "chtd/td_solver.hpp"

namespace chtd {

/// Largest stable forward-Euler step of the 7-point 3D heat stencil: dx²·ρ·c_p/(6k).
double critical_dt(double dx, double rho, double c_p, double k);

struct FdmConfig {
    /// Grid points per axis including the two Dirichlet faces.
    std::size_t points = 21;
    /// Explicit step; safety·critical_dt when unset.
    std::optional<double> dt;
    double safety = 0.9;
    double t_end = 0.5;
    /// Fixed step count; overrides t_end (t_end = n_steps·dt).
    std::optional<std::size_t> n_steps;
    /// Keep the field every this many steps (0: final field only).
    std::size_t snapshot_stride = 0;
    DiffusionConstants constants;

    double dx() const noexcept;
    double critical() const;
};

struct FdmResult {
    GridField field;  // final field, shape points³
    std::vector<GridField> snapshots;
    std::vector<double> snapshot_times;
    /// max|u| after every step.
    std::vector<double> max_abs;
    std::size_t steps = 0;
    double dt = 0.0;
    double t_final = 0.0;
    /// dt exceeded the critical step.
    bool above_critical = false;
};

/// Forward Euler u ← u + dt·(α·Lap₇(u) + b/(ρc_p)) on [0,L]³ with zero faces and zero initial state.
/// The source's fourth factor, if any, is evaluated at the start of each step.
/// Throws Divergence on non-finite values.
FdmResult solve_diffusion_fdm3d(const FdmConfig& config, const SeparableSource& source);

using Function2D = std::function<double(double, double)>;

/// −Δu = b on [lo,hi]² with u = 0 on the boundary, 5-point stencil on n×n points,
/// conjugate gradients to relative residual 1e-10. Throws NotConverged.
GridField solve_poisson_grid2d(std::size_t n, const Function2D& b, double lo = 0.0, double hi = 10.0,
                               std::size_t max_iterations = 0);

inline constexpr std::size_t kDenseGalerkinMaxDof = 10'000;

/// Direct solve of the un-separated Galerkin system Σ_t coeff·(Op_x ⊗ Op_y) assembled
/// from the same 1D operators. Returns nodal values on the mesh nodes. Throws TooLarge.
GridField dense_galerkin_2d(const WeakProblem& problem, std::optional<std::size_t> quad_points = std::nullopt);

/// ‖∇(u_h − u_ref)‖ / ‖∇u_ref‖ over the u_h mesh by Gauss quadrature. The reference
/// gradient is taken by central differences and interpolated bilinearly.
/// Throws UndefinedMetric for a zero-energy reference.
double energy_norm_error(const SeparatedSolution& uh, const GridField& ref,
                         std::optional<std::size_t> quad_points = std::nullopt);
/// GridField u_h gets the same finite-difference gradient as the reference.
double energy_norm_error(const GridField& uh, const GridField& ref);

struct RelativeError {
    double value = 0.0;
    /// b was identically zero and value holds ‖a‖₂.
    bool zero_reference = false;
};

/// ‖a − b‖₂ / ‖b‖₂. Throws InvalidArgument on shape mismatch.
RelativeError rel_l2_error(const GridField& a, const GridField& b);

/// Central-difference gradient of a 2D field, bilinearly interpolated.
class GridGradient2D {
public:
    explicit GridGradient2D(const GridField& field);
    /// Clamps to the grid bounds.
    std::array<double, 2> operator()(double x, double y) const;

private:
    std::vector<double> xs_, ys_;
    std::vector<double> gx_, gy_;
};

}  // namespace chtd
