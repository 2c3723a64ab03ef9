#include <cmath>
#include <numbers>

#include "chtd/error.hpp"
#include "chtd/td_solver.hpp"

namespace chtd {

namespace {

DimSpec make_dim(double lo, double hi, std::size_t n_elem, const Hyperparams& hyper, std::string label,
                 bool constrain_start, bool constrain_end) {
    Mesh1D mesh(lo, hi, n_elem);
    std::vector<std::size_t> con;
    if (constrain_start) con.push_back(0);
    if (constrain_end) con.push_back(n_elem);
    ConstraintSet cs(mesh.n_nodes(), std::move(con));
    return DimSpec{std::move(mesh), hyper, std::move(cs), std::move(label)};
}

WeakProblem poisson_skeleton(std::array<std::size_t, 2> n_elem, const Hyperparams& hyper, std::string id) {
    hyper.validate();
    for (std::size_t n : n_elem)
        if (n < 2) throw InvalidArgument("poisson2d needs at least 2 elements per dimension");
    WeakProblem pb;
    pb.id = std::move(id);
    pb.dims.push_back(make_dim(0.0, 10.0, n_elem[0], hyper, "x", true, true));
    pb.dims.push_back(make_dim(0.0, 10.0, n_elem[1], hyper, "y", true, true));
    pb.terms = {{1.0, {OperatorKind::Stiff, OperatorKind::Mass}}, {1.0, {OperatorKind::Mass, OperatorKind::Stiff}}};
    return pb;
}

}  // namespace

double SeparableSource::operator()(std::span<const double> point) const {
    double total = 0.0;
    for (const auto& t : terms) {
        double v = t.coeff;
        for (std::size_t i = 0; i < t.factors.size() && i < point.size(); ++i) v *= t.factors[i](point[i]);
        total += v;
    }
    return total;
}

WeakProblem poisson2d_problem(std::array<std::size_t, 2> n_elem, const Hyperparams& hyper) {
    WeakProblem pb = poisson_skeleton(n_elem, hyper, "poisson2d");
    const ScalarFunction bump = [](double v) { return std::exp(-10.0 * (v - 5.0) * (v - 5.0)); };
    pb.source.terms.push_back({1.0, {bump, bump}});
    return pb;
}

WeakProblem manufactured_poisson2d_problem(std::array<std::size_t, 2> n_elem, const Hyperparams& hyper) {
    WeakProblem pb = poisson_skeleton(n_elem, hyper, "poisson2d-manufactured");
    constexpr double w = std::numbers::pi / 10.0;
    const ScalarFunction wave = [](double v) { return std::sin(std::numbers::pi * v / 10.0); };
    pb.source.terms.push_back({2.0 * w * w, {wave, wave}});
    return pb;
}

double manufactured_poisson2d_exact(double x, double y) {
    return std::sin(std::numbers::pi * x / 10.0) * std::sin(std::numbers::pi * y / 10.0);
}

double heaviside(double v) noexcept {
    if (v > 0.0) return 1.0;
    if (v < 0.0) return 0.0;
    return 0.5;
}

SeparableSource diffusion_source(const DiffusionConstants& c) {
    const double w2 = c.source_width * c.source_width;
    auto gauss = [w2](double center) -> ScalarFunction {
        return [center, w2](double v) { return std::exp(-2.0 * (v - center) * (v - center) / w2); };
    };
    const double depth = c.heat_depth;
    const ScalarFunction layer = [depth](double z) { return heaviside(z - depth); };
    const ScalarFunction one = [](double) { return 1.0; };
    // Spot centres as given; the first and third lie outside the cube.
    const double centres[3][2] = {{2e-3, -2e-3}, {2e-3, 2e-3}, {-2e-3, 2e-3}};
    SeparableSource src;
    for (const auto& cxy : centres)
        src.terms.push_back({c.source_amplitude, {gauss(cxy[0]), gauss(cxy[1]), layer, one}});
    return src;
}

WeakProblem diffusion_spacetime_problem(std::array<std::size_t, 4> n_elem, const Hyperparams& hyper,
                                        bool verbatim_sign, const DiffusionConstants& c) {
    hyper.validate();
    for (std::size_t n : n_elem)
        if (n < 2) throw InvalidArgument("diffusion4d needs at least 2 elements per dimension");
    WeakProblem pb;
    pb.id = verbatim_sign ? "diffusion4d-verbatim-sign" : "diffusion4d";
    pb.dims.push_back(make_dim(0.0, c.length, n_elem[0], hyper, "x", true, true));
    pb.dims.push_back(make_dim(0.0, c.length, n_elem[1], hyper, "y", true, true));
    pb.dims.push_back(make_dim(0.0, c.length, n_elem[2], hyper, "z", true, true));
    pb.dims.push_back(make_dim(0.0, c.t_end, n_elem[3], hyper, "t", true, false));

    using K = OperatorKind;
    const double sign = verbatim_sign ? -1.0 : 1.0;
    pb.terms = {{c.rho_cp(), {K::Mass, K::Mass, K::Mass, K::Grad}},
                {sign * c.k, {K::Stiff, K::Mass, K::Mass, K::Mass}},
                {sign * c.k, {K::Mass, K::Stiff, K::Mass, K::Mass}},
                {sign * c.k, {K::Mass, K::Mass, K::Stiff, K::Mass}}};
    pb.source = diffusion_source(c);
    for (auto& t : pb.source.terms) t.coeff *= sign;
    return pb;
}

}  // namespace chtd
