#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "chtd/mesh_quad.hpp"

namespace chtd {

enum class BasisKind : std::uint32_t { FeLinear = 0, Chidenn = 1 };

/// Basis hyperparameters: patch size s (element layers), dilation a, reproducing order p.
/// FeLinear ignores s, a and p.
struct Hyperparams {
    BasisKind kind = BasisKind::FeLinear;
    std::size_t s = 1;
    double a = 1.0;
    std::size_t p = 1;

    static Hyperparams fe_linear() { return {}; }
    /// a defaults to s.
    static Hyperparams chidenn(std::size_t s, std::size_t p, std::optional<double> a = std::nullopt);

    /// Throws InvalidArgument for p > s, s == 0 or a <= 0 on CHIDENN.
    void validate() const;

    /// Largest node distance between two basis functions sharing an element.
    std::size_t coupling_width() const noexcept { return kind == BasisKind::FeLinear ? 1 : 2 * s + 1; }

    /// Default quadrature points per element: 2 for FeLinear, max(8, p+2) for CHIDENN.
    std::size_t default_quad_points() const noexcept;

    bool operator==(const Hyperparams&) const = default;
};

/// Values and x-derivatives of functions attached to consecutive nodes
/// first_node, first_node+1, ...
struct NodalEval {
    std::size_t first_node = 0;
    std::vector<double> values;
    std::vector<double> derivs;

    std::size_t size() const noexcept { return values.size(); }
    /// Value for node k, zero outside the stored window.
    double value_at(std::size_t node) const noexcept;
    double deriv_at(std::size_t node) const noexcept;
};

/// Convolution patch of node i: the nodes within s elements (clipped to the mesh)
/// and the factorized radial + monomial interpolation system over them.
class PatchWeights {
public:
    std::size_t center_node() const noexcept { return center_; }
    std::size_t first_node() const noexcept { return first_; }
    std::size_t size() const noexcept { return coords_.size(); }
    std::vector<std::size_t> patch_nodes() const;

    /// Reciprocal condition estimate of the local moment matrix.
    double rcond() const noexcept { return rcond_; }

    /// Right-hand side [r(x); p(x)] and its x-derivative for the local system.
    void rhs(double x, Eigen::VectorXd& value, Eigen::VectorXd& deriv) const;
    /// Dense local moment matrix (kernel block + monomial blocks).
    Eigen::MatrixXd moment_matrix() const;

private:
    friend PatchWeights build_patch(const Mesh1D&, std::size_t, const Hyperparams&);
    friend NodalEval eval_patch_weights(const PatchWeights&, double);

    // Patch systems reach condition numbers near 1e7 for wide kernels; solving in
    // extended precision keeps the weights and their derivatives accurate to double.
    using Real = long double;
    using MatrixR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

    Real kernel(Real r) const noexcept;
    Real local(Real x) const noexcept { return (x - center_x_) / scale_; }
    void rhs_ext(Real x, VectorR& value, VectorR& deriv) const;
    MatrixR moment_matrix_ext() const;

    std::size_t center_ = 0;
    std::size_t first_ = 0;
    std::size_t order_ = 0;  // reproducing order p
    double center_x_ = 0.0;
    double scale_ = 1.0;      // s·h, monomial frame
    double width_ = 1.0;      // a·h, kernel width
    std::vector<double> coords_;
    Eigen::PartialPivLU<MatrixR> lu_;
    double rcond_ = 0.0;
};

/// Throws InvalidArgument on bad input, IllConditionedPatch if the moment matrix is singular.
PatchWeights build_patch(const Mesh1D& mesh, std::size_t node, const Hyperparams& hyper);

/// W_j(x) and dW_j/dx over the patch nodes.
NodalEval eval_patch_weights(const PatchWeights& patch, double x);

/// Composite 1D basis on a mesh with all patches precomputed.
class Basis1D {
public:
    Basis1D(const Mesh1D& mesh, const Hyperparams& hyper);

    const Mesh1D& mesh() const noexcept { return mesh_; }
    const Hyperparams& hyper() const noexcept { return hyper_; }

    /// First node and count of the basis functions active on element e.
    std::size_t active_first(std::size_t e) const noexcept;
    std::size_t active_count(std::size_t e) const noexcept;

    /// Ñ_k and dÑ_k/dx on element e at coordinate x (x assumed inside the element).
    NodalEval eval_in_element(std::size_t e, double x) const;
    /// Throws OutOfDomain.
    NodalEval eval(double x) const;

    /// Replace every patch function by the Kronecker delta W^i_j = δ_ij, which
    /// collapses the composite basis onto the linear hat functions.
    void use_identity_patches_for_testing() { identity_patches_ = true; }

private:
    Mesh1D mesh_;
    Hyperparams hyper_;
    std::vector<PatchWeights> patches_;
    bool identity_patches_ = false;
};

/// Ñ_k and dÑ_k/dx tabulated at the quadrature points of every element.
class BasisTable {
public:
    BasisTable(const Basis1D& basis, QuadRule quad);

    const Mesh1D& mesh() const noexcept { return mesh_; }
    const Hyperparams& hyper() const noexcept { return hyper_; }
    const QuadRule& quad() const noexcept { return quad_; }
    std::size_t n_elem() const noexcept { return mesh_.n_elem(); }
    std::size_t n_nodes() const noexcept { return mesh_.n_nodes(); }
    std::size_t n_quad() const noexcept { return quad_.size(); }

    std::size_t first_node(std::size_t e) const noexcept { return first_[e]; }
    std::size_t n_active(std::size_t e) const noexcept { return count_[e]; }
    /// Physical coordinate of quadrature point q in element e.
    double point(std::size_t e, std::size_t q) const noexcept { return points_[e * n_quad() + q]; }
    /// Quadrature weight times jacobian.
    double weight(std::size_t q) const noexcept { return quad_.weights[q] * jacobian_; }
    /// Row of basis values at quadrature point q of element e (length n_active(e)).
    std::span<const double> values(std::size_t e, std::size_t q) const noexcept;
    std::span<const double> derivs(std::size_t e, std::size_t q) const noexcept;

private:
    Mesh1D mesh_;
    Hyperparams hyper_;
    QuadRule quad_;
    double jacobian_;
    std::size_t stride_;  // max active count
    std::vector<std::size_t> first_;
    std::vector<std::size_t> count_;
    std::vector<double> points_;
    std::vector<double> values_;
    std::vector<double> derivs_;
};

/// Uses hyper.default_quad_points() when quad is not given.
BasisTable build_basis_table(const Mesh1D& mesh, const Hyperparams& hyper,
                             std::optional<QuadRule> quad = std::nullopt);

/// Basis values at an arbitrary coordinate, building only the patches it needs.
/// Throws OutOfDomain.
NodalEval eval_basis_at(const Mesh1D& mesh, const Hyperparams& hyper, double x);

}  // namespace chtd
