#include "chtd/chidenn_basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chtd/error.hpp"

namespace chtd {

Hyperparams Hyperparams::chidenn(std::size_t s, std::size_t p, std::optional<double> a) {
    Hyperparams h;
    h.kind = BasisKind::Chidenn;
    h.s = s;
    h.p = p;
    h.a = a.value_or(static_cast<double>(s));
    h.validate();
    return h;
}

void Hyperparams::validate() const {
    if (kind == BasisKind::FeLinear) return;
    if (kind != BasisKind::Chidenn) throw InvalidArgument("unknown basis kind");
    if (s == 0) throw InvalidArgument("patch size s must be positive");
    if (p > s) throw InvalidArgument("p must not exceed s");
    if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("dilation a must be positive");
}

std::size_t Hyperparams::default_quad_points() const noexcept {
    if (kind == BasisKind::FeLinear) return 2;
    // p + 2 leaves drift near 1e-3 because the Gaussian kernels are not polynomial; 8 reaches 1e-10.
    return std::max<std::size_t>(8, p + 2);
}

double NodalEval::value_at(std::size_t node) const noexcept {
    if (node < first_node || node >= first_node + values.size()) return 0.0;
    return values[node - first_node];
}

double NodalEval::deriv_at(std::size_t node) const noexcept {
    if (node < first_node || node >= first_node + derivs.size()) return 0.0;
    return derivs[node - first_node];
}

// ---------------------------------------------------------------------------
// Patches

std::vector<std::size_t> PatchWeights::patch_nodes() const {
    std::vector<std::size_t> ids(coords_.size());
    for (std::size_t j = 0; j < ids.size(); ++j) ids[j] = first_ + j;
    return ids;
}

PatchWeights::Real PatchWeights::kernel(Real r) const noexcept {
    const Real t = r / width_;
    return std::exp(-t * t);
}

void PatchWeights::rhs_ext(Real x, VectorR& value, VectorR& deriv) const {
    const std::size_t n = coords_.size();
    const std::size_t m = order_ + 1;
    value.resize(static_cast<Eigen::Index>(n + m));
    deriv.resize(static_cast<Eigen::Index>(n + m));
    const Real w2 = static_cast<Real>(width_) * width_;
    for (std::size_t j = 0; j < n; ++j) {
        const Real r = x - coords_[j];
        const Real phi = kernel(r);
        value[j] = phi;
        deriv[j] = -2 * r / w2 * phi;
    }
    const Real xi = local(x);
    Real pw = 1;       // xi^q
    Real pw_prev = 0;  // xi^(q-1)
    for (std::size_t q = 0; q < m; ++q) {
        value[n + q] = pw;
        deriv[n + q] = q == 0 ? Real(0) : static_cast<Real>(q) * pw_prev / scale_;
        pw_prev = pw;
        pw *= xi;
    }
}

PatchWeights::MatrixR PatchWeights::moment_matrix_ext() const {
    const auto n = static_cast<Eigen::Index>(coords_.size());
    const auto m = static_cast<Eigen::Index>(order_ + 1);
    MatrixR g = MatrixR::Zero(n + m, n + m);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) g(j, k) = kernel(static_cast<Real>(coords_[j]) - coords_[k]);
        const Real xi = local(coords_[j]);
        Real pw = 1;
        for (Eigen::Index q = 0; q < m; ++q) {
            g(j, n + q) = pw;
            g(n + q, j) = pw;
            pw *= xi;
        }
    }
    return g;
}

void PatchWeights::rhs(double x, Eigen::VectorXd& value, Eigen::VectorXd& deriv) const {
    VectorR v, d;
    rhs_ext(x, v, d);
    value = v.cast<double>();
    deriv = d.cast<double>();
}

Eigen::MatrixXd PatchWeights::moment_matrix() const { return moment_matrix_ext().cast<double>(); }

PatchWeights build_patch(const Mesh1D& mesh, std::size_t node, const Hyperparams& hyper) {
    hyper.validate();
    if (hyper.kind != BasisKind::Chidenn) throw InvalidArgument("build_patch requires a CHIDENN basis");
    if (node >= mesh.n_nodes()) throw InvalidArgument("node index " + std::to_string(node) + " out of range");

    PatchWeights patch;
    patch.center_ = node;
    patch.first_ = node >= hyper.s ? node - hyper.s : 0;
    const std::size_t last = std::min(mesh.n_nodes() - 1, node + hyper.s);
    patch.order_ = hyper.p;
    patch.center_x_ = mesh.node(node);
    patch.scale_ = static_cast<double>(hyper.s) * mesh.h();
    patch.width_ = hyper.a * mesh.h();
    for (std::size_t k = patch.first_; k <= last; ++k) patch.coords_.push_back(mesh.node(k));
    if (patch.coords_.size() < hyper.p + 1)
        throw InvalidArgument("patch of node " + std::to_string(node) + " has fewer than p+1 nodes");

    patch.lu_.compute(patch.moment_matrix_ext());
    patch.rcond_ = static_cast<double>(patch.lu_.rcond());
    if (!(patch.rcond_ > 1e-15)) throw IllConditionedPatch(node, 1.0 / patch.rcond_);
    return patch;
}

NodalEval eval_patch_weights(const PatchWeights& patch, double x) {
    PatchWeights::VectorR rv, rd;
    patch.rhs_ext(x, rv, rd);
    // The moment matrix is symmetric, so the weights solve G·w = [r(x); p(x)].
    const Eigen::VectorXd wv = patch.lu_.solve(rv).cast<double>();
    const Eigen::VectorXd wd = patch.lu_.solve(rd).cast<double>();
    NodalEval out;
    out.first_node = patch.first_;
    const std::size_t n = patch.size();
    out.values.assign(wv.data(), wv.data() + n);
    out.derivs.assign(wd.data(), wd.data() + n);
    return out;
}

// ---------------------------------------------------------------------------
// Composite basis

namespace {

std::size_t active_first_of(const Hyperparams& hyper, std::size_t e) {
    if (hyper.kind == BasisKind::FeLinear) return e;
    return e >= hyper.s ? e - hyper.s : 0;
}

std::size_t active_last_of(const Mesh1D& mesh, const Hyperparams& hyper, std::size_t e) {
    if (hyper.kind == BasisKind::FeLinear) return e + 1;
    return std::min(mesh.n_nodes() - 1, e + 1 + hyper.s);
}

// Ñ_k(x) = N_e(x)·W^e_k(x) + N_{e+1}(x)·W^{e+1}_k(x) on element e.
// Null patches mean identity weights (plain hat functions).
NodalEval composite(const Mesh1D& mesh, const Hyperparams& hyper, std::size_t e, double x,
                    const PatchWeights* left, const PatchWeights* right) {
    const double h = mesh.h();
    const double n_left = (mesh.node(e + 1) - x) / h;
    const double n_right = (x - mesh.node(e)) / h;
    const double dn_left = -1.0 / h;
    const double dn_right = 1.0 / h;

    NodalEval out;
    out.first_node = active_first_of(hyper, e);
    const std::size_t count = active_last_of(mesh, hyper, e) - out.first_node + 1;
    out.values.assign(count, 0.0);
    out.derivs.assign(count, 0.0);

    auto accumulate = [&](std::size_t node, const PatchWeights* patch, double n, double dn) {
        if (patch == nullptr) {
            out.values[node - out.first_node] += n;
            out.derivs[node - out.first_node] += dn;
            return;
        }
        const NodalEval w = eval_patch_weights(*patch, x);
        for (std::size_t j = 0; j < w.size(); ++j) {
            const std::size_t k = w.first_node + j - out.first_node;
            out.values[k] += n * w.values[j];
            out.derivs[k] += dn * w.values[j] + n * w.derivs[j];
        }
    };
    accumulate(e, left, n_left, dn_left);
    accumulate(e + 1, right, n_right, dn_right);
    return out;
}

}  // namespace

Basis1D::Basis1D(const Mesh1D& mesh, const Hyperparams& hyper) : mesh_(mesh), hyper_(hyper) {
    hyper_.validate();
    if (hyper_.kind == BasisKind::Chidenn) {
        patches_.reserve(mesh_.n_nodes());
        for (std::size_t i = 0; i < mesh_.n_nodes(); ++i) patches_.push_back(build_patch(mesh_, i, hyper_));
    }
}

std::size_t Basis1D::active_first(std::size_t e) const noexcept { return active_first_of(hyper_, e); }

std::size_t Basis1D::active_count(std::size_t e) const noexcept {
    return active_last_of(mesh_, hyper_, e) - active_first_of(hyper_, e) + 1;
}

NodalEval Basis1D::eval_in_element(std::size_t e, double x) const {
    const bool plain = patches_.empty() || identity_patches_;
    return composite(mesh_, hyper_, e, x, plain ? nullptr : &patches_[e], plain ? nullptr : &patches_[e + 1]);
}

NodalEval Basis1D::eval(double x) const { return eval_in_element(mesh_.locate(x), x); }

NodalEval eval_basis_at(const Mesh1D& mesh, const Hyperparams& hyper, double x) {
    hyper.validate();
    const std::size_t e = mesh.locate(x);
    if (hyper.kind == BasisKind::FeLinear) return composite(mesh, hyper, e, x, nullptr, nullptr);
    const PatchWeights left = build_patch(mesh, e, hyper);
    const PatchWeights right = build_patch(mesh, e + 1, hyper);
    return composite(mesh, hyper, e, x, &left, &right);
}

// ---------------------------------------------------------------------------
// Tables

BasisTable::BasisTable(const Basis1D& basis, QuadRule quad)
    : mesh_(basis.mesh()), hyper_(basis.hyper()), quad_(std::move(quad)), jacobian_(0.5 * mesh_.h()) {
    const std::size_t ne = mesh_.n_elem();
    const std::size_t nq = quad_.size();
    stride_ = 0;
    first_.resize(ne);
    count_.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        first_[e] = basis.active_first(e);
        count_[e] = basis.active_count(e);
        stride_ = std::max(stride_, count_[e]);
    }
    points_.resize(ne * nq);
    values_.assign(ne * nq * stride_, 0.0);
    derivs_.assign(ne * nq * stride_, 0.0);
    for (std::size_t e = 0; e < ne; ++e) {
        for (std::size_t q = 0; q < nq; ++q) {
            const double x = map_to_element(mesh_, e, quad_.points[q]).x;
            points_[e * nq + q] = x;
            const NodalEval ev = basis.eval_in_element(e, x);
            std::copy(ev.values.begin(), ev.values.end(), values_.begin() + (e * nq + q) * stride_);
            std::copy(ev.derivs.begin(), ev.derivs.end(), derivs_.begin() + (e * nq + q) * stride_);
        }
    }
}

std::span<const double> BasisTable::values(std::size_t e, std::size_t q) const noexcept {
    return {values_.data() + (e * n_quad() + q) * stride_, count_[e]};
}

std::span<const double> BasisTable::derivs(std::size_t e, std::size_t q) const noexcept {
    return {derivs_.data() + (e * n_quad() + q) * stride_, count_[e]};
}

BasisTable build_basis_table(const Mesh1D& mesh, const Hyperparams& hyper, std::optional<QuadRule> quad) {
    QuadRule rule = quad ? std::move(*quad) : gauss_rule(hyper.default_quad_points());
    return BasisTable(Basis1D(mesh, hyper), std::move(rule));
}

}  // namespace chtd
