#include "chtd/reference_oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "chtd/alloc_tracker.hpp"
#include "chtd/error.hpp"

namespace chtd {

double critical_dt(double dx, double rho, double c_p, double k) {
    if (!(dx > 0.0) || !(rho > 0.0) || !(c_p > 0.0) || !(k > 0.0))
        throw InvalidArgument("critical_dt requires positive inputs");
    return dx * dx * rho * c_p / (6.0 * k);
}

double FdmConfig::dx() const noexcept { return constants.length / static_cast<double>(points - 1); }

double FdmConfig::critical() const { return critical_dt(dx(), constants.rho, constants.c_p, constants.k); }

FdmResult solve_diffusion_fdm3d(const FdmConfig& config, const SeparableSource& source) {
    if (config.points < 3) throw InvalidArgument("FDM needs at least 3 points per axis");
    if (!(config.safety > 0.0)) throw InvalidArgument("safety factor must be positive");
    const auto& c = config.constants;
    const std::size_t n = config.points;
    const double dx = config.dx();
    const double crit = config.critical();

    FdmResult res;
    std::size_t steps = 0;
    double dt = config.dt.value_or(config.safety * crit);
    if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
    if (config.n_steps) {
        steps = *config.n_steps;
    } else {
        // Round the step count up and shrink dt so the run lands on t_end.
        const double ratio = config.t_end / dt;
        steps = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio));
        steps = std::max<std::size_t>(steps, 1);
        dt = config.t_end / static_cast<double>(steps);
    }
    res.dt = dt;
    res.above_critical = dt > crit * (1.0 + 1e-12);

    const std::vector<double> axis = linspace(0.0, c.length, n);
    const std::size_t total = n * n * n;
    alloc::Scoped track((2 + source.terms.size()) * total * sizeof(double));

    // Spatial part of every source term, already divided by ρc_p.
    std::vector<std::vector<double>> spatial;
    for (const auto& term : source.terms) {
        if (term.factors.size() < 3) throw InvalidArgument("FDM source terms need x, y and z factors");
        std::vector<double> fx(n), fy(n), fz(n);
        for (std::size_t i = 0; i < n; ++i) {
            fx[i] = term.factors[0](axis[i]);
            fy[i] = term.factors[1](axis[i]);
            fz[i] = term.factors[2](axis[i]);
        }
        std::vector<double> b(total);
        const double scale = term.coeff / c.rho_cp();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k) b[(i * n + j) * n + k] = scale * fx[i] * fy[j] * fz[k];
        spatial.push_back(std::move(b));
    }

    std::vector<double> u(total, 0.0), next(total, 0.0), forcing(total, 0.0);
    const double lam = c.alpha() * dt / (dx * dx);
    const std::size_t sj = n, si = n * n;
    auto snapshot = [&](double t) {
        GridField f({axis, axis, axis}, "diffusion4d-fdm");
        f.values = u;
        res.snapshots.push_back(std::move(f));
        res.snapshot_times.push_back(t);
    };
    if (config.snapshot_stride > 0) snapshot(0.0);

    for (std::size_t step = 0; step < steps; ++step) {
        const double t = static_cast<double>(step) * dt;
        std::fill(forcing.begin(), forcing.end(), 0.0);
        for (std::size_t s = 0; s < spatial.size(); ++s) {
            const auto& term = source.terms[s];
            const double ft = term.factors.size() > 3 ? term.factors[3](t) : 1.0;
            if (ft == 0.0) continue;
            for (std::size_t p = 0; p < total; ++p) forcing[p] += ft * spatial[s][p];
        }
        double max_abs = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            for (std::size_t j = 1; j + 1 < n; ++j) {
                for (std::size_t k = 1; k + 1 < n; ++k) {
                    const std::size_t p = i * si + j * sj + k;
                    const double lap = u[p - si] + u[p + si] + u[p - sj] + u[p + sj] + u[p - 1] + u[p + 1] - 6.0 * u[p];
                    const double v = u[p] + lam * lap + dt * forcing[p];
                    next[p] = v;
                    max_abs = std::max(max_abs, std::abs(v));
                }
            }
        }
        if (!std::isfinite(max_abs)) throw Divergence(step + 1);
        u.swap(next);
        res.max_abs.push_back(max_abs);
        if (config.snapshot_stride > 0 && (step + 1) % config.snapshot_stride == 0)
            snapshot(static_cast<double>(step + 1) * dt);
    }
    res.steps = steps;
    res.t_final = static_cast<double>(steps) * dt;
    res.field = GridField({axis, axis, axis}, "diffusion4d-fdm");
    res.field.values = std::move(u);
    return res;
}

GridField solve_poisson_grid2d(std::size_t n, const Function2D& b, double lo, double hi, std::size_t max_iterations) {
    if (n < 3) throw InvalidArgument("grid Poisson solve needs n >= 3");
    const std::vector<double> axis = linspace(lo, hi, n);
    GridField field({axis, axis}, "poisson2d-grid");
    const std::size_t m = n - 2;  // interior points per axis
    const double h = axis[1] - axis[0];
    const double inv_h2 = 1.0 / (h * h);

    using SpMat = Eigen::SparseMatrix<double>;
    const auto dof = static_cast<Eigen::Index>(m * m);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(dof) * 5);
    Eigen::VectorXd rhs(dof);
    auto id = [m](std::size_t i, std::size_t j) { return static_cast<Eigen::Index>(i * m + j); };
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const Eigen::Index p = id(i, j);
            trip.emplace_back(p, p, 4.0 * inv_h2);
            if (i > 0) trip.emplace_back(p, id(i - 1, j), -inv_h2);
            if (i + 1 < m) trip.emplace_back(p, id(i + 1, j), -inv_h2);
            if (j > 0) trip.emplace_back(p, id(i, j - 1), -inv_h2);
            if (j + 1 < m) trip.emplace_back(p, id(i, j + 1), -inv_h2);
            rhs[p] = b(axis[i + 1], axis[j + 1]);
        }
    }
    if (rhs.cwiseAbs().maxCoeff() == 0.0) return field;

    SpMat a(dof, dof);
    a.setFromTriplets(trip.begin(), trip.end());
    alloc::Scoped track(static_cast<std::size_t>(a.nonZeros()) * 12 + static_cast<std::size_t>(dof) * 8 * 6);
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-10);
    cg.setMaxIterations(static_cast<Eigen::Index>(max_iterations > 0 ? max_iterations : 20 * n + 1000));
    cg.compute(a);
    const Eigen::VectorXd u = cg.solve(rhs);
    if (cg.info() != Eigen::Success)
        throw NotConverged("conjugate gradients stopped at residual " + std::to_string(cg.error()), cg.error());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) field(i + 1, j + 1) = u[id(i, j)];
    return field;
}

GridField dense_galerkin_2d(const WeakProblem& problem, std::optional<std::size_t> quad_points) {
    if (problem.n_dims() != 2) throw InvalidArgument("dense_galerkin_2d needs a two-dimensional problem");
    const OperatorBundles bundles = precompute_dim_operators(problem, quad_points);
    const std::size_t lx = bundles[0].n_reduced(), ly = bundles[1].n_reduced();
    if (lx * ly > kDenseGalerkinMaxDof)
        throw TooLarge("dense Galerkin oracle limited to " + std::to_string(kDenseGalerkinMaxDof) + " unknowns");

    const auto dof = static_cast<Eigen::Index>(lx * ly);
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& t : problem.terms) {
        const Eigen::MatrixXd ox = bundles[0].op(t.ops[0]).to_dense();
        const Eigen::MatrixXd oy = bundles[1].op(t.ops[1]).to_dense();
        for (Eigen::Index a = 0; a < ox.rows(); ++a)
            for (Eigen::Index a2 = 0; a2 < ox.cols(); ++a2) {
                if (ox(a, a2) == 0.0) continue;
                for (Eigen::Index b = 0; b < oy.rows(); ++b)
                    for (Eigen::Index b2 = 0; b2 < oy.cols(); ++b2)
                        if (oy(b, b2) != 0.0)
                            trip.emplace_back(a * oy.rows() + b, a2 * oy.rows() + b2, t.coeff * ox(a, a2) * oy(b, b2));
            }
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dof);
    for (std::size_t s = 0; s < problem.source.terms.size(); ++s) {
        const double coeff = problem.source.terms[s].coeff;
        const auto& fx = bundles[0].loads[s];
        const auto& fy = bundles[1].loads[s];
        for (Eigen::Index a = 0; a < fx.size(); ++a) rhs.segment(a * fy.size(), fy.size()) += coeff * fx[a] * fy;
    }

    const Mesh1D& mx = problem.dims[0].mesh;
    const Mesh1D& my = problem.dims[1].mesh;
    GridField field({std::vector<double>(mx.nodes().begin(), mx.nodes().end()),
                     std::vector<double>(my.nodes().begin(), my.nodes().end())},
                    problem.id + "-dense");
    if (rhs.cwiseAbs().maxCoeff() == 0.0) return field;

    Eigen::SparseMatrix<double> a(dof, dof);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw std::runtime_error("dense Galerkin factorization failed");
    const Eigen::VectorXd u = lu.solve(rhs);
    const auto& cx = problem.dims[0].constraints;
    const auto& cy = problem.dims[1].constraints;
    for (std::size_t a = 0; a < lx; ++a)
        for (std::size_t b = 0; b < ly; ++b)
            field(cx.full_index(a), cy.full_index(b)) = u[static_cast<Eigen::Index>(a * ly + b)];
    return field;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> central_difference(const std::vector<double>& coords, std::size_t stride,
                                       const std::vector<double>& values, std::size_t offset) {
    const std::size_t n = coords.size();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
        g[i] = (values[offset + hi * stride] - values[offset + lo * stride]) / (coords[hi] - coords[lo]);
    }
    return g;
}

// Interval index and local fraction of x in a sorted coordinate list, clamped.
std::pair<std::size_t, double> bracket(const std::vector<double>& c, double x) {
    if (x <= c.front()) return {0, 0.0};
    if (x >= c.back()) return {c.size() - 2, 1.0};
    const auto it = std::upper_bound(c.begin(), c.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - c.begin()) - 1;
    return {i, (x - c[i]) / (c[i + 1] - c[i])};
}

}  // namespace

GridGradient2D::GridGradient2D(const GridField& f) {
    if (f.n_dims() != 2 || f.coords[0].size() < 2 || f.coords[1].size() < 2)
        throw InvalidArgument("gradient needs a 2D grid with at least 2 points per axis");
    xs_ = f.coords[0];
    ys_ = f.coords[1];
    const std::size_t nx = xs_.size(), ny = ys_.size();
    gx_.resize(nx * ny);
    gy_.resize(nx * ny);
    for (std::size_t j = 0; j < ny; ++j) {
        const auto col = central_difference(xs_, ny, f.values, j);
        for (std::size_t i = 0; i < nx; ++i) gx_[i * ny + j] = col[i];
    }
    for (std::size_t i = 0; i < nx; ++i) {
        const auto row = central_difference(ys_, 1, f.values, i * ny);
        for (std::size_t j = 0; j < ny; ++j) gy_[i * ny + j] = row[j];
    }
}

std::array<double, 2> GridGradient2D::operator()(double x, double y) const {
    const auto [i, tx] = bracket(xs_, x);
    const auto [j, ty] = bracket(ys_, y);
    const std::size_t ny = ys_.size();
    auto lerp2 = [&](const std::vector<double>& g) {
        const double g00 = g[i * ny + j], g01 = g[i * ny + j + 1];
        const double g10 = g[(i + 1) * ny + j], g11 = g[(i + 1) * ny + j + 1];
        return (1 - tx) * ((1 - ty) * g00 + ty * g01) + tx * ((1 - ty) * g10 + ty * g11);
    };
    return {lerp2(gx_), lerp2(gy_)};
}

double energy_norm_error(const SeparatedSolution& uh, const GridField& ref, std::optional<std::size_t> quad_points) {
    if (uh.n_dims() != 2) throw InvalidArgument("energy norm error is defined for 2D solutions");
    const GridGradient2D gref(ref);
    std::array<std::optional<BasisTable>, 2> tables;
    std::array<Eigen::MatrixXd, 2> val, der;  // rows: (element, quad point), cols: ranks
    for (std::size_t d = 0; d < 2; ++d) {
        const auto& spec = uh.dim(d);
        const std::size_t nq = quad_points.value_or(std::max<std::size_t>(spec.hyper.default_quad_points(), 4));
        tables[d].emplace(build_basis_table(spec.mesh, spec.hyper, gauss_rule(nq)));
        const BasisTable& t = *tables[d];
        const auto& f = uh.factor(d);
        val[d] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t.n_elem() * t.n_quad()), f.cols());
        der[d] = val[d];
        for (std::size_t e = 0; e < t.n_elem(); ++e)
            for (std::size_t q = 0; q < t.n_quad(); ++q) {
                const auto row = static_cast<Eigen::Index>(e * t.n_quad() + q);
                const auto v = t.values(e, q);
                const auto g = t.derivs(e, q);
                for (std::size_t k = 0; k < v.size(); ++k) {
                    val[d].row(row) += v[k] * f.row(static_cast<Eigen::Index>(t.first_node(e) + k));
                    der[d].row(row) += g[k] * f.row(static_cast<Eigen::Index>(t.first_node(e) + k));
                }
            }
    }
    const BasisTable& tx = *tables[0];
    const BasisTable& ty = *tables[1];
    double num = 0.0, den = 0.0;
    for (std::size_t ex = 0; ex < tx.n_elem(); ++ex)
        for (std::size_t qx = 0; qx < tx.n_quad(); ++qx) {
            const auto rx = static_cast<Eigen::Index>(ex * tx.n_quad() + qx);
            const double x = tx.point(ex, qx);
            for (std::size_t ey = 0; ey < ty.n_elem(); ++ey)
                for (std::size_t qy = 0; qy < ty.n_quad(); ++qy) {
                    const auto ry = static_cast<Eigen::Index>(ey * ty.n_quad() + qy);
                    const double w = tx.weight(qx) * ty.weight(qy);
                    const double gx = der[0].row(rx).dot(val[1].row(ry));
                    const double gy = val[0].row(rx).dot(der[1].row(ry));
                    const auto r = gref(x, ty.point(ey, qy));
                    num += w * ((gx - r[0]) * (gx - r[0]) + (gy - r[1]) * (gy - r[1]));
                    den += w * (r[0] * r[0] + r[1] * r[1]);
                }
        }
    if (!(den > 0.0)) throw UndefinedMetric("reference has zero energy");
    return std::sqrt(num / den);
}

double energy_norm_error(const GridField& uh, const GridField& ref) {
    if (uh.n_dims() != 2) throw InvalidArgument("energy norm error is defined for 2D fields");
    const GridGradient2D gh(uh);
    const GridGradient2D gref(ref);
    const QuadRule quad = gauss_rule(3);
    const auto& xs = uh.coords[0];
    const auto& ys = uh.coords[1];
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const double hx = xs[i + 1] - xs[i], hy = ys[j + 1] - ys[j];
            for (std::size_t a = 0; a < quad.size(); ++a)
                for (std::size_t b = 0; b < quad.size(); ++b) {
                    const double x = xs[i] + 0.5 * (quad.points[a] + 1.0) * hx;
                    const double y = ys[j] + 0.5 * (quad.points[b] + 1.0) * hy;
                    const double w = 0.25 * hx * hy * quad.weights[a] * quad.weights[b];
                    const auto g = gh(x, y);
                    const auto r = gref(x, y);
                    num += w * ((g[0] - r[0]) * (g[0] - r[0]) + (g[1] - r[1]) * (g[1] - r[1]));
                    den += w * (r[0] * r[0] + r[1] * r[1]);
                }
        }
    if (!(den > 0.0)) throw UndefinedMetric("reference has zero energy");
    return std::sqrt(num / den);
}

RelativeError rel_l2_error(const GridField& a, const GridField& b) {
    if (a.shape() != b.shape()) throw InvalidArgument("rel_l2_error needs matching grid shapes");
    double diff = 0.0, ref = 0.0, own = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
        ref += b.values[i] * b.values[i];
        own += a.values[i] * a.values[i];
    }
    if (ref == 0.0) return {std::sqrt(own), true};
    return {std::sqrt(diff / ref), false};
}

}  // namespace chtd
