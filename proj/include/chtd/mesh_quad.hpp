#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chtd {

/// Uniform 1D mesh on [x_min, x_max] with n_elem linear elements.
class Mesh1D {
public:
    Mesh1D(double x_min, double x_max, std::size_t n_elem);

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    std::size_t n_elem() const noexcept { return n_elem_; }
    std::size_t n_nodes() const noexcept { return n_elem_ + 1; }
    double h() const noexcept { return h_; }
    double length() const noexcept { return x_max_ - x_min_; }

    std::span<const double> nodes() const noexcept { return nodes_; }
    double node(std::size_t i) const { return nodes_.at(i); }

    /// True when x lies in [x_min, x_max] up to a round-off slack of 1e-12·length.
    bool contains(double x) const noexcept;

    /// Element holding x; a point on an interior node belongs to the element on its right,
    /// the right boundary belongs to the last element. Throws OutOfDomain.
    std::size_t locate(double x) const;

    bool operator==(const Mesh1D& other) const noexcept {
        return x_min_ == other.x_min_ && x_max_ == other.x_max_ && n_elem_ == other.n_elem_;
    }

private:
    double x_min_;
    double x_max_;
    std::size_t n_elem_;
    double h_;
    std::vector<double> nodes_;
};

/// Throws InvalidArgument on n_elem == 0 or x_max <= x_min.
Mesh1D uniform_mesh(double x_min, double x_max, std::size_t n_elem);

/// Gauss-Legendre rule on the parent interval [-1, 1].
struct QuadRule {
    std::vector<double> points;
    std::vector<double> weights;

    std::size_t size() const noexcept { return points.size(); }
};

inline constexpr std::size_t kMaxGaussPoints = 64;

/// Tabulated for n_points <= 10, Newton-computed above. Throws InvalidArgument outside 1..64.
QuadRule gauss_rule(std::size_t n_points);

struct ElementPoint {
    double x;
    double jacobian;
};

/// x = nodes[e] + (xi + 1)·h/2, jacobian = h/2.
ElementPoint map_to_element(const Mesh1D& mesh, std::size_t e, double xi);

}  // namespace chtd
