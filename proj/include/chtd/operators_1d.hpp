#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "chtd/banded_matrix.hpp"
#include "chtd/chidenn_basis.hpp"

namespace chtd {

/// MASS[a,b] = ∫Ñ_a Ñ_b, STIFF[a,b] = ∫Ñ'_a Ñ'_b, GRAD[a,b] = ∫Ñ_a Ñ'_b (row a tests, column b trial).
enum class OperatorKind : std::uint8_t { Mass = 0, Stiff = 1, Grad = 2 };

inline constexpr std::size_t kOperatorKinds = 3;

std::string_view to_string(OperatorKind kind) noexcept;

using ScalarFunction = std::function<double(double)>;

/// Homogeneous Dirichlet nodes of one dimension and the full <-> reduced index maps.
class ConstraintSet {
public:
    ConstraintSet() = default;
    /// Throws InvalidArgument for indices >= n_full.
    ConstraintSet(std::size_t n_full, std::vector<std::size_t> constrained);

    static ConstraintSet none(std::size_t n_full) { return ConstraintSet(n_full, {}); }
    static ConstraintSet both_ends(std::size_t n_full) { return ConstraintSet(n_full, {0, n_full - 1}); }

    std::size_t n_full() const noexcept { return n_full_; }
    std::size_t n_reduced() const noexcept { return reduced_to_full_.size(); }
    std::span<const std::size_t> constrained() const noexcept { return constrained_; }
    bool is_constrained(std::size_t i) const noexcept { return full_to_reduced_[i] < 0; }
    /// -1 for constrained nodes.
    std::ptrdiff_t reduced_index(std::size_t i) const noexcept { return full_to_reduced_[i]; }
    std::size_t full_index(std::size_t r) const noexcept { return reduced_to_full_[r]; }

    Eigen::VectorXd reduce(const Eigen::VectorXd& full) const;
    /// Reinserts zeros at constrained nodes.
    Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const;

    bool operator==(const ConstraintSet& other) const noexcept {
        return n_full_ == other.n_full_ && constrained_ == other.constrained_;
    }

private:
    std::size_t n_full_ = 0;
    std::vector<std::size_t> constrained_;
    std::vector<std::ptrdiff_t> full_to_reduced_;
    std::vector<std::size_t> reduced_to_full_;
};

BandedMatrix assemble_operator(const BasisTable& table, OperatorKind kind);

/// F[a] = ∫ Ñ_a(x)·f(x) dx
Eigen::VectorXd assemble_load(const BasisTable& table, const ScalarFunction& f);

struct ReducedSystem {
    BandedMatrix matrix;
    Eigen::VectorXd rhs;
};

/// Drops rows and columns of constrained nodes. Throws EmptySystem when nothing remains.
ReducedSystem apply_dirichlet(const BandedMatrix& matrix, const Eigen::VectorXd& rhs,
                              const ConstraintSet& constraints);
BandedMatrix reduce_matrix(const BandedMatrix& matrix, const ConstraintSet& constraints);

}  // namespace chtd
