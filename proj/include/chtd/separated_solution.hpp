#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chtd/chidenn_basis.hpp"
#include "chtd/grid_field.hpp"
#include "chtd/mesh_quad.hpp"
#include "chtd/operators_1d.hpp"

namespace chtd {

/// One coordinate direction of a separated problem.
struct DimSpec {
    Mesh1D mesh;
    Hyperparams hyper;
    ConstraintSet constraints;
    std::string label;

    std::size_t n_nodes() const noexcept { return mesh.n_nodes(); }
    bool operator==(const DimSpec&) const = default;
};

/// Rank-M separated field u(p) = Σ_m Π_i [Ñ_i(p_i)·u_i^(m)]. Factor d is an
/// L_d × M matrix whose column m holds the nodal coefficients of rank m.
class SeparatedSolution {
public:
    SeparatedSolution() = default;
    /// Throws InvalidArgument if shapes disagree, labels repeat, or a constrained
    /// node carries a nonzero coefficient.
    SeparatedSolution(std::vector<DimSpec> dims, std::vector<Eigen::MatrixXd> factors);

    static SeparatedSolution zeros(std::vector<DimSpec> dims, std::size_t rank);

    std::size_t n_dims() const noexcept { return dims_.size(); }
    std::size_t rank() const noexcept { return rank_; }
    const std::vector<DimSpec>& dims() const noexcept { return dims_; }
    const DimSpec& dim(std::size_t d) const { return dims_.at(d); }
    const std::vector<Eigen::MatrixXd>& factors() const noexcept { return factors_; }
    const Eigen::MatrixXd& factor(std::size_t d) const { return factors_.at(d); }

    /// Replaces factor d; constrained rows are zeroed.
    void set_factor(std::size_t d, Eigen::MatrixXd f);

private:
    std::vector<DimSpec> dims_;
    std::vector<Eigen::MatrixXd> factors_;
    std::size_t rank_ = 0;
};

/// Point evaluation with cached per-dimension bases.
class SolutionEvaluator {
public:
    explicit SolutionEvaluator(const SeparatedSolution& sol);

    /// Throws OutOfDomain.
    double value(std::span<const double> point) const;
    /// Gradient with respect to every coordinate.
    std::vector<double> gradient(std::span<const double> point) const;

    /// Rows: samples, columns: ranks; entries Ñ(x_j)·u^(m) (or its derivative).
    Eigen::MatrixXd sample_factor(std::size_t d, std::span<const double> xs, bool derivative = false) const;

private:
    const SeparatedSolution& sol_;
    std::vector<std::shared_ptr<const Basis1D>> bases_;
};

/// Σ_m Π_i Ñ_i(p_i)·u_i^(m). Throws OutOfDomain.
double evaluate(const SeparatedSolution& sol, std::span<const double> point);

inline constexpr std::size_t kDefaultGridCap = 100'000'000;

/// Dense tensor of evaluate over the sample grid. Throws TooLarge above cap entries.
GridField evaluate_grid(const SeparatedSolution& sol, const std::vector<std::vector<double>>& samples,
                        std::size_t cap = kDefaultGridCap);

/// Factor payload M·Σ L_i·8 bytes.
std::uint64_t storage_bytes(const SeparatedSolution& sol);
std::uint64_t storage_bytes(std::size_t rank, std::span<const std::size_t> nodes_per_dim);

struct NormalizeResult {
    SeparatedSolution solution;
    /// Ranks with a zero column in some non-final dimension (left untouched).
    std::vector<std::size_t> degenerate_ranks;
};

/// Scales every non-final factor column to unit norm, pushing the scale into the last dimension.
NormalizeResult normalize(const SeparatedSolution& sol);

// CHTD1 container --------------------------------------------------------

inline constexpr std::uint32_t kChtdVersion = 1;
inline constexpr std::size_t kChtdHeaderBytes = 32;

struct ChtdHeader {
    std::uint32_t version = 0;
    std::uint32_t n_dims = 0;
    std::uint32_t rank = 0;
    std::uint64_t payload_bytes = 0;
};

std::vector<char> encode_chtd(const SeparatedSolution& sol);
/// Throws CorruptFile with the byte offset of the first inconsistency.
SeparatedSolution decode_chtd(const std::vector<char>& bytes);

void export_solution(const SeparatedSolution& sol, const std::filesystem::path& path);
SeparatedSolution import_solution(const std::filesystem::path& path);

/// Bytes taken by the per-dimension descriptors.
std::size_t chtd_descriptor_bytes(const SeparatedSolution& sol);

}  // namespace chtd
