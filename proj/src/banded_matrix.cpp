#include "chtd/banded_matrix.hpp"

#include <algorithm>
#include <cmath>

namespace chtd {

BandedMatrix::BandedMatrix(std::size_t n, std::size_t half_bandwidth)
    : n_(n), hb_(half_bandwidth), entries_(n * (2 * half_bandwidth + 1), 0.0) {}

double BandedMatrix::max_abs() const noexcept {
    double m = 0.0;
    for (double v : entries_) m = std::max(m, std::abs(v));
    return m;
}

bool BandedMatrix::symmetric() const noexcept {
    double asym = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t hi = std::min(n_ - 1, i + hb_);
        for (std::size_t j = i + 1; j <= hi; ++j) asym = std::max(asym, std::abs((*this)(i, j) - (*this)(j, i)));
    }
    return asym <= 1e-12 * max_abs();
}

Eigen::VectorXd BandedMatrix::multiply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t lo = i >= hb_ ? i - hb_ : 0;
        const std::size_t hi = std::min(n_ - 1, i + hb_);
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) acc += entries_[index(i, j)] * x[static_cast<Eigen::Index>(j)];
        y[static_cast<Eigen::Index>(i)] = acc;
    }
    return y;
}

double BandedMatrix::bilinear(const Eigen::Ref<const Eigen::VectorXd>& u,
                              const Eigen::Ref<const Eigen::VectorXd>& v) const {
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t lo = i >= hb_ ? i - hb_ : 0;
        const std::size_t hi = std::min(n_ - 1, i + hb_);
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) acc += entries_[index(i, j)] * v[static_cast<Eigen::Index>(j)];
        total += u[static_cast<Eigen::Index>(i)] * acc;
    }
    return total;
}

Eigen::MatrixXd BandedMatrix::to_dense() const {
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t lo = i >= hb_ ? i - hb_ : 0;
        const std::size_t hi = std::min(n_ - 1, i + hb_);
        for (std::size_t j = lo; j <= hi; ++j)
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entries_[index(i, j)];
    }
    return d;
}

}  // namespace chtd
