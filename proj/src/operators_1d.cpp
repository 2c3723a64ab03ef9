#include "chtd/operators_1d.hpp"

#include <algorithm>
#include <string>

#include "chtd/error.hpp"

namespace chtd {

std::string_view to_string(OperatorKind kind) noexcept {
    switch (kind) {
        case OperatorKind::Mass: return "MASS";
        case OperatorKind::Stiff: return "STIFF";
        case OperatorKind::Grad: return "GRAD";
    }
    return "?";
}

ConstraintSet::ConstraintSet(std::size_t n_full, std::vector<std::size_t> constrained)
    : n_full_(n_full), constrained_(std::move(constrained)), full_to_reduced_(n_full, 0) {
    std::sort(constrained_.begin(), constrained_.end());
    constrained_.erase(std::unique(constrained_.begin(), constrained_.end()), constrained_.end());
    for (std::size_t c : constrained_) {
        if (c >= n_full) throw InvalidArgument("constraint index " + std::to_string(c) + " out of range");
        full_to_reduced_[c] = -1;
    }
    for (std::size_t i = 0; i < n_full; ++i) {
        if (full_to_reduced_[i] < 0) continue;
        full_to_reduced_[i] = static_cast<std::ptrdiff_t>(reduced_to_full_.size());
        reduced_to_full_.push_back(i);
    }
}

Eigen::VectorXd ConstraintSet::reduce(const Eigen::VectorXd& full) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(n_reduced()));
    for (std::size_t k = 0; k < n_reduced(); ++k) r[static_cast<Eigen::Index>(k)] = full[static_cast<Eigen::Index>(reduced_to_full_[k])];
    return r;
}

Eigen::VectorXd ConstraintSet::expand(const Eigen::VectorXd& reduced) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_full_));
    for (std::size_t k = 0; k < n_reduced(); ++k) f[static_cast<Eigen::Index>(reduced_to_full_[k])] = reduced[static_cast<Eigen::Index>(k)];
    return f;
}

BandedMatrix assemble_operator(const BasisTable& table, OperatorKind kind) {
    BandedMatrix a(table.n_nodes(), table.hyper().coupling_width());
    for (std::size_t e = 0; e < table.n_elem(); ++e) {
        const std::size_t first = table.first_node(e);
        const std::size_t na = table.n_active(e);
        for (std::size_t q = 0; q < table.n_quad(); ++q) {
            const double w = table.weight(q);
            const auto v = table.values(e, q);
            const auto d = table.derivs(e, q);
            const auto& test = kind == OperatorKind::Stiff ? d : v;
            const auto& trial = kind == OperatorKind::Mass ? v : d;
            for (std::size_t i = 0; i < na; ++i) {
                const double wt = w * test[i];
                for (std::size_t j = 0; j < na; ++j) a.add(first + i, first + j, wt * trial[j]);
            }
        }
    }
    return a;
}

Eigen::VectorXd assemble_load(const BasisTable& table, const ScalarFunction& f) {
    Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table.n_nodes()));
    for (std::size_t e = 0; e < table.n_elem(); ++e) {
        const std::size_t first = table.first_node(e);
        for (std::size_t q = 0; q < table.n_quad(); ++q) {
            const double wf = table.weight(q) * f(table.point(e, q));
            if (wf == 0.0) continue;
            const auto v = table.values(e, q);
            for (std::size_t i = 0; i < v.size(); ++i) load[static_cast<Eigen::Index>(first + i)] += wf * v[i];
        }
    }
    return load;
}

BandedMatrix reduce_matrix(const BandedMatrix& matrix, const ConstraintSet& constraints) {
    if (constraints.n_full() != matrix.n()) throw InvalidArgument("constraint set size does not match matrix");
    const std::size_t nr = constraints.n_reduced();
    if (nr == 0) throw EmptySystem("all nodes are constrained");
    const std::size_t hb = matrix.half_bandwidth();
    BandedMatrix out(nr, hb);
    for (std::size_t r = 0; r < nr; ++r) {
        const std::size_t i = constraints.full_index(r);
        for (std::size_t c = r >= hb ? r - hb : 0; c < std::min(nr, r + hb + 1); ++c) {
            const std::size_t j = constraints.full_index(c);
            if (matrix.in_band(i, j)) out.add(r, c, matrix(i, j));
        }
    }
    return out;
}

ReducedSystem apply_dirichlet(const BandedMatrix& matrix, const Eigen::VectorXd& rhs,
                              const ConstraintSet& constraints) {
    if (static_cast<std::size_t>(rhs.size()) != matrix.n()) throw InvalidArgument("rhs size does not match matrix");
    ReducedSystem sys{reduce_matrix(matrix, constraints), constraints.reduce(rhs)};
    return sys;
}

}  // namespace chtd
