#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace chtd {

/// Square matrix with entries only in |i - j| <= half_bandwidth, stored row by row.
class BandedMatrix {
public:
    BandedMatrix() = default;
    BandedMatrix(std::size_t n, std::size_t half_bandwidth);

    std::size_t n() const noexcept { return n_; }
    std::size_t half_bandwidth() const noexcept { return hb_; }

    bool in_band(std::size_t i, std::size_t j) const noexcept {
        return (i > j ? i - j : j - i) <= hb_;
    }
    /// Zero outside the band.
    double operator()(std::size_t i, std::size_t j) const noexcept {
        return in_band(i, j) ? entries_[index(i, j)] : 0.0;
    }
    /// i, j must lie inside the band.
    void add(std::size_t i, std::size_t j, double v) noexcept { entries_[index(i, j)] += v; }

    double max_abs() const noexcept;
    /// max|A - Aᵀ| <= 1e-12·max|A|.
    bool symmetric() const noexcept;

    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
    /// uᵀ·A·v
    double bilinear(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) const;
    Eigen::MatrixXd to_dense() const;

private:
    std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * (2 * hb_ + 1) + (j + hb_ - i); }

    std::size_t n_ = 0;
    std::size_t hb_ = 0;
    std::vector<double> entries_;
};

}  // namespace chtd
