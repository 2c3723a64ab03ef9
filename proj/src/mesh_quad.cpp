#include "chtd/mesh_quad.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "chtd/error.hpp"

namespace chtd {

Mesh1D::Mesh1D(double x_min, double x_max, std::size_t n_elem)
    : x_min_(x_min), x_max_(x_max), n_elem_(n_elem) {
    if (n_elem == 0) throw InvalidArgument("mesh needs at least one element");
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
        throw InvalidArgument("mesh bounds must satisfy x_min < x_max");
    h_ = (x_max - x_min) / static_cast<double>(n_elem);
    nodes_.resize(n_elem + 1);
    for (std::size_t i = 0; i <= n_elem; ++i)
        nodes_[i] = x_min + static_cast<double>(i) * h_;
    nodes_.back() = x_max;
}

bool Mesh1D::contains(double x) const noexcept {
    const double slack = 1e-12 * length();
    return x >= x_min_ - slack && x <= x_max_ + slack;
}

std::size_t Mesh1D::locate(double x) const {
    if (!contains(x))
        throw OutOfDomain("coordinate " + std::to_string(x) + " outside [" +
                              std::to_string(x_min_) + ", " + std::to_string(x_max_) + "]",
                          x);
    const double t = std::floor((x - x_min_) / h_);
    if (t <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(t), n_elem_ - 1);
}

Mesh1D uniform_mesh(double x_min, double x_max, std::size_t n_elem) {
    return Mesh1D(x_min, x_max, n_elem);
}

namespace {

struct GaussTable {
    std::vector<double> points;
    std::vector<double> weights;
};

// Gauss-Legendre nodes and weights, computed to 40 digits and rounded.
const std::array<GaussTable, 10>& gauss_tables() {
    static const std::array<GaussTable, 10> tables = {{
        // n = 1
        {{0.0},
         {2.0}},
        // n = 2
        {{-5.77350269189625764509e-1, 5.77350269189625764509e-1},
         {1.0, 1.0}},
        // n = 3
        {{-7.74596669241483377036e-1, 0.0, 7.74596669241483377036e-1},
         {5.55555555555555555556e-1, 8.88888888888888888889e-1, 5.55555555555555555556e-1}},
        // n = 4
        {{-8.61136311594052575224e-1, -3.39981043584856264803e-1, 3.39981043584856264803e-1, 8.61136311594052575224e-1},
         {3.47854845137453857373e-1, 6.52145154862546142627e-1, 6.52145154862546142627e-1, 3.47854845137453857373e-1}},
        // n = 5
        {{-9.06179845938663992798e-1, -5.38469310105683091036e-1, 0.0, 5.38469310105683091036e-1, 9.06179845938663992798e-1},
         {2.36926885056189087514e-1, 4.78628670499366468041e-1, 5.68888888888888888889e-1, 4.78628670499366468041e-1, 2.36926885056189087514e-1}},
        // n = 6
        {{-9.32469514203152027812e-1, -6.61209386466264513661e-1, -2.38619186083196908631e-1, 2.38619186083196908631e-1, 6.61209386466264513661e-1, 9.32469514203152027812e-1},
         {1.7132449237917034504e-1, 3.6076157304813860757e-1, 4.6791393457269104739e-1, 4.6791393457269104739e-1, 3.6076157304813860757e-1, 1.7132449237917034504e-1}},
        // n = 7
        {{-9.49107912342758524526e-1, -7.41531185599394439864e-1, -4.05845151377397166907e-1, 0.0, 4.05845151377397166907e-1, 7.41531185599394439864e-1, 9.49107912342758524526e-1},
         {1.29484966168869693271e-1, 2.79705391489276667901e-1, 3.8183005050511894495e-1, 4.17959183673469387755e-1, 3.8183005050511894495e-1, 2.79705391489276667901e-1, 1.29484966168869693271e-1}},
        // n = 8
        {{-9.60289856497536231684e-1, -7.96666477413626739592e-1, -5.25532409916328985818e-1, -1.83434642495649804939e-1, 1.83434642495649804939e-1, 5.25532409916328985818e-1, 7.96666477413626739592e-1, 9.60289856497536231684e-1},
         {1.01228536290376259153e-1, 2.22381034453374470544e-1, 3.13706645877887287338e-1, 3.62683783378361982965e-1, 3.62683783378361982965e-1, 3.13706645877887287338e-1, 2.22381034453374470544e-1, 1.01228536290376259153e-1}},
        // n = 9
        {{-9.68160239507626089836e-1, -8.36031107326635794299e-1, -6.13371432700590397309e-1, -3.24253423403808929039e-1, 0.0, 3.24253423403808929039e-1, 6.13371432700590397309e-1, 8.36031107326635794299e-1, 9.68160239507626089836e-1},
         {8.12743883615744119719e-2, 1.80648160694857404058e-1, 2.60610696402935462319e-1, 3.12347077040002840069e-1, 3.30239355001259763165e-1, 3.12347077040002840069e-1, 2.60610696402935462319e-1, 1.80648160694857404058e-1, 8.12743883615744119719e-2}},
        // n = 10
        {{-9.73906528517171720078e-1, -8.65063366688984510732e-1, -6.79409568299024406234e-1, -4.33395394129247190799e-1, -1.48874338981631210885e-1, 1.48874338981631210885e-1, 4.33395394129247190799e-1, 6.79409568299024406234e-1, 8.65063366688984510732e-1, 9.73906528517171720078e-1},
         {6.66713443086881375936e-2, 1.49451349150580593146e-1, 2.19086362515982043996e-1, 2.69266719309996355091e-1, 2.95524224714752870174e-1, 2.95524224714752870174e-1, 2.69266719309996355091e-1, 2.19086362515982043996e-1, 1.49451349150580593146e-1, 6.66713443086881375936e-2}},
    }};
    return tables;
}

}  // namespace

namespace {

// Newton on P_n from the Chebyshev-like initial guesses; fine to n = 64 in double.
QuadRule computed_gauss_rule(std::size_t n) {
    QuadRule rule;
    rule.points.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            dp = nd * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.points[i] = -x;
        rule.points[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.points[n / 2] = 0.0;
    return rule;
}

}  // namespace

QuadRule gauss_rule(std::size_t n_points) {
    if (n_points < 1 || n_points > kMaxGaussPoints)
        throw InvalidArgument("gauss_rule supports 1.." + std::to_string(kMaxGaussPoints) + " points, got " +
                              std::to_string(n_points));
    if (n_points > 10) return computed_gauss_rule(n_points);
    const auto& t = gauss_tables()[n_points - 1];
    return QuadRule{t.points, t.weights};
}

ElementPoint map_to_element(const Mesh1D& mesh, std::size_t e, double xi) {
    if (e >= mesh.n_elem())
        throw InvalidArgument("element index " + std::to_string(e) + " out of range");
    const double half = 0.5 * mesh.h();
    return {mesh.node(e) + (xi + 1.0) * half, half};
}

}  // namespace chtd
