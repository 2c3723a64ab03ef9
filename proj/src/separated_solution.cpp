#include "chtd/separated_solution.hpp"

#include <cmath>
#include <set>

#include "chtd/error.hpp"

namespace chtd {

SeparatedSolution::SeparatedSolution(std::vector<DimSpec> dims, std::vector<Eigen::MatrixXd> factors)
    : dims_(std::move(dims)), factors_(std::move(factors)) {
    if (dims_.size() != factors_.size()) throw InvalidArgument("one factor matrix per dimension required");
    std::set<std::string> labels;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        if (!labels.insert(dims_[d].label).second)
            throw InvalidArgument("duplicate dimension label '" + dims_[d].label + "'");
        if (dims_[d].constraints.n_full() != dims_[d].n_nodes())
            throw InvalidArgument("constraint set of dimension " + dims_[d].label + " has wrong size");
        const auto& f = factors_[d];
        if (static_cast<std::size_t>(f.rows()) != dims_[d].n_nodes())
            throw InvalidArgument("factor rows of dimension " + dims_[d].label + " differ from its node count");
        if (d > 0 && f.cols() != factors_[0].cols()) throw InvalidArgument("factor matrices disagree on rank");
        for (std::size_t c : dims_[d].constraints.constrained())
            if (f.row(static_cast<Eigen::Index>(c)).cwiseAbs().maxCoeff() != 0.0)
                throw InvalidArgument("constrained node " + std::to_string(c) + " of dimension " + dims_[d].label +
                                      " is nonzero");
    }
    rank_ = factors_.empty() ? 0 : static_cast<std::size_t>(factors_[0].cols());
}

SeparatedSolution SeparatedSolution::zeros(std::vector<DimSpec> dims, std::size_t rank) {
    std::vector<Eigen::MatrixXd> f;
    f.reserve(dims.size());
    for (const auto& d : dims)
        f.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.n_nodes()), static_cast<Eigen::Index>(rank)));
    return SeparatedSolution(std::move(dims), std::move(f));
}

void SeparatedSolution::set_factor(std::size_t d, Eigen::MatrixXd f) {
    auto& dst = factors_.at(d);
    if (f.rows() != dst.rows() || f.cols() != dst.cols()) throw InvalidArgument("factor shape mismatch");
    for (std::size_t c : dims_[d].constraints.constrained()) f.row(static_cast<Eigen::Index>(c)).setZero();
    dst = std::move(f);
}

// ---------------------------------------------------------------------------

SolutionEvaluator::SolutionEvaluator(const SeparatedSolution& sol) : sol_(sol) {
    bases_.reserve(sol.n_dims());
    for (const auto& d : sol.dims()) bases_.push_back(std::make_shared<const Basis1D>(d.mesh, d.hyper));
}

namespace {

// Ñ(x)·U for every rank: a row vector of length M.
Eigen::RowVectorXd contract(const NodalEval& ev, const Eigen::MatrixXd& factor, bool derivative) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(factor.cols());
    const auto& w = derivative ? ev.derivs : ev.values;
    for (std::size_t j = 0; j < w.size(); ++j) row += w[j] * factor.row(static_cast<Eigen::Index>(ev.first_node + j));
    return row;
}

void check_point(const SeparatedSolution& sol, std::span<const double> point) {
    if (point.size() != sol.n_dims()) throw InvalidArgument("point dimension does not match solution");
}

}  // namespace

double SolutionEvaluator::value(std::span<const double> point) const {
    check_point(sol_, point);
    Eigen::RowVectorXd prod = Eigen::RowVectorXd::Ones(static_cast<Eigen::Index>(sol_.rank()));
    for (std::size_t d = 0; d < sol_.n_dims(); ++d)
        prod = prod.cwiseProduct(contract(bases_[d]->eval(point[d]), sol_.factor(d), false));
    return prod.sum();
}

std::vector<double> SolutionEvaluator::gradient(std::span<const double> point) const {
    check_point(sol_, point);
    const std::size_t nd = sol_.n_dims();
    std::vector<Eigen::RowVectorXd> val(nd), der(nd);
    for (std::size_t d = 0; d < nd; ++d) {
        const NodalEval ev = bases_[d]->eval(point[d]);
        val[d] = contract(ev, sol_.factor(d), false);
        der[d] = contract(ev, sol_.factor(d), true);
    }
    std::vector<double> g(nd);
    for (std::size_t k = 0; k < nd; ++k) {
        Eigen::RowVectorXd prod = der[k];
        for (std::size_t d = 0; d < nd; ++d)
            if (d != k) prod = prod.cwiseProduct(val[d]);
        g[k] = prod.sum();
    }
    return g;
}

Eigen::MatrixXd SolutionEvaluator::sample_factor(std::size_t d, std::span<const double> xs, bool derivative) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(sol_.rank()));
    for (std::size_t j = 0; j < xs.size(); ++j)
        out.row(static_cast<Eigen::Index>(j)) = contract(bases_.at(d)->eval(xs[j]), sol_.factor(d), derivative);
    return out;
}

double evaluate(const SeparatedSolution& sol, std::span<const double> point) {
    check_point(sol, point);
    Eigen::RowVectorXd prod = Eigen::RowVectorXd::Ones(static_cast<Eigen::Index>(sol.rank()));
    for (std::size_t d = 0; d < sol.n_dims(); ++d) {
        const auto& spec = sol.dim(d);
        prod = prod.cwiseProduct(contract(eval_basis_at(spec.mesh, spec.hyper, point[d]), sol.factor(d), false));
    }
    return prod.sum();
}

GridField evaluate_grid(const SeparatedSolution& sol, const std::vector<std::vector<double>>& samples,
                        std::size_t cap) {
    if (samples.size() != sol.n_dims()) throw InvalidArgument("one sample list per dimension required");
    std::size_t total = 1;
    for (const auto& s : samples) {
        if (s.empty()) throw InvalidArgument("empty sample list");
        if (s.size() > cap / total) throw TooLarge("grid of more than " + std::to_string(cap) + " entries requested");
        total *= s.size();
    }
    const SolutionEvaluator ev(sol);
    std::vector<Eigen::MatrixXd> b(sol.n_dims());
    for (std::size_t d = 0; d < sol.n_dims(); ++d) b[d] = ev.sample_factor(d, samples[d]);

    GridField out(samples);
    const std::size_t nd = sol.n_dims();
    const auto m = static_cast<Eigen::Index>(sol.rank());
    if (m == 0) return out;
    const Eigen::MatrixXd& last = b[nd - 1];
    const std::size_t n_last = samples[nd - 1].size();

    // Walk the leading dimensions, carrying the Hadamard product of their sample rows.
    std::vector<std::size_t> idx(nd, 0);
    const std::size_t n_outer = total / n_last;
    Eigen::RowVectorXd prefix(m);
    for (std::size_t outer = 0; outer < n_outer; ++outer) {
        prefix.setOnes();
        for (std::size_t d = 0; d + 1 < nd; ++d) prefix = prefix.cwiseProduct(b[d].row(static_cast<Eigen::Index>(idx[d])));
        const Eigen::VectorXd col = last * prefix.transpose();
        std::copy(col.data(), col.data() + n_last, out.values.begin() + static_cast<std::ptrdiff_t>(outer * n_last));
        for (std::size_t d = nd - 1; d-- > 0;) {
            if (++idx[d] < samples[d].size()) break;
            idx[d] = 0;
        }
    }
    return out;
}

std::uint64_t storage_bytes(std::size_t rank, std::span<const std::size_t> nodes_per_dim) {
    std::uint64_t nodes = 0;
    for (std::size_t l : nodes_per_dim) nodes += l;
    return static_cast<std::uint64_t>(rank) * nodes * sizeof(double);
}

std::uint64_t storage_bytes(const SeparatedSolution& sol) {
    std::vector<std::size_t> nodes;
    for (const auto& d : sol.dims()) nodes.push_back(d.n_nodes());
    return storage_bytes(sol.rank(), nodes);
}

NormalizeResult normalize(const SeparatedSolution& sol) {
    NormalizeResult res{sol, {}};
    const std::size_t nd = sol.n_dims();
    if (nd == 0) return res;
    std::vector<Eigen::MatrixXd> f = sol.factors();
    for (std::size_t m = 0; m < sol.rank(); ++m) {
        const auto col = static_cast<Eigen::Index>(m);
        bool degenerate = false;
        for (std::size_t d = 0; d + 1 < nd; ++d) degenerate = degenerate || f[d].col(col).norm() == 0.0;
        if (degenerate) {
            res.degenerate_ranks.push_back(m);
            continue;
        }
        double scale = 1.0;
        for (std::size_t d = 0; d + 1 < nd; ++d) {
            const double n = f[d].col(col).norm();
            f[d].col(col) /= n;
            scale *= n;
        }
        f[nd - 1].col(col) *= scale;
    }
    res.solution = SeparatedSolution(sol.dims(), std::move(f));
    return res;
}

}  // namespace chtd
