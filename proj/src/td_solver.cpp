#include "chtd/td_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "chtd/alloc_tracker.hpp"
#include "chtd/error.hpp"

namespace chtd {

void WeakProblem::validate() const {
    if (dims.empty()) throw InvalidArgument("problem has no dimensions");
    if (terms.empty()) throw InvalidArgument("problem has no bilinear terms");
    for (const auto& t : terms)
        if (t.ops.size() != dims.size()) throw InvalidArgument("bilinear term arity differs from dimension count");
    for (const auto& s : source.terms)
        if (s.factors.size() != dims.size()) throw InvalidArgument("source term arity differs from dimension count");
    for (const auto& d : dims) {
        d.hyper.validate();
        if (d.constraints.n_full() != d.n_nodes()) throw InvalidArgument("constraint set size mismatch in " + d.label);
        if (d.constraints.n_reduced() == 0) throw EmptySystem("dimension " + d.label + " has no free nodes");
    }
}

void SolverConfig::validate() const {
    if (rank < 1) throw InvalidArgument("rank must be at least 1");
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (max_sweeps < 1) throw InvalidArgument("max_sweeps must be at least 1");
    if (quad_points && (*quad_points < 1 || *quad_points > kMaxGaussPoints))
        throw InvalidArgument("quad_points must be in 1.." + std::to_string(kMaxGaussPoints));
}

const BandedMatrix& DimOperators::op(OperatorKind kind) const {
    const auto& o = ops[static_cast<std::size_t>(kind)];
    if (!o) throw InvalidArgument(std::string("operator ") + std::string(to_string(kind)) + " was not assembled");
    return *o;
}

OperatorBundles precompute_dim_operators(const WeakProblem& problem, std::optional<std::size_t> quad_points) {
    problem.validate();
    OperatorBundles bundles;
    for (std::size_t d = 0; d < problem.n_dims(); ++d) {
        const DimSpec& spec = problem.dims[d];
        const QuadRule quad = gauss_rule(quad_points.value_or(spec.hyper.default_quad_points()));
        const BasisTable table = build_basis_table(spec.mesh, spec.hyper, quad);
        DimOperators ops{spec.constraints, {}, {}};
        for (const auto& t : problem.terms) {
            auto& slot = ops.ops[static_cast<std::size_t>(t.ops[d])];
            if (!slot) slot = reduce_matrix(assemble_operator(table, t.ops[d]), spec.constraints);
        }
        for (const auto& s : problem.source.terms)
            ops.loads.push_back(spec.constraints.reduce(assemble_load(table, s.factors[d])));
        bundles.push_back(std::move(ops));
    }
    return bundles;
}

namespace {

using Factors = std::vector<Eigen::MatrixXd>;
using Clock = std::chrono::steady_clock;

constexpr double kChangeFloor = 1e-30;
/// Pivots below this fraction of the largest are treated as zero in block solves.
constexpr double kBlockRankThreshold = 1e-12;

Eigen::MatrixXd band_times(const BandedMatrix& a, const Eigen::MatrixXd& u) {
    Eigen::MatrixXd out(u.rows(), u.cols());
    for (Eigen::Index c = 0; c < u.cols(); ++c) out.col(c) = a.multiply(u.col(c));
    return out;
}

Factors reduce_factors(const SeparatedSolution& sol) {
    Factors u;
    for (std::size_t d = 0; d < sol.n_dims(); ++d) {
        const auto& cs = sol.dim(d).constraints;
        Eigen::MatrixXd r(static_cast<Eigen::Index>(cs.n_reduced()), static_cast<Eigen::Index>(sol.rank()));
        for (std::size_t k = 0; k < cs.n_reduced(); ++k)
            r.row(static_cast<Eigen::Index>(k)) = sol.factor(d).row(static_cast<Eigen::Index>(cs.full_index(k)));
        u.push_back(std::move(r));
    }
    return u;
}

SeparatedSolution expand_factors(const std::vector<DimSpec>& dims, const Factors& u) {
    std::vector<Eigen::MatrixXd> full;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        const auto& cs = dims[d].constraints;
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cs.n_full()), u[d].cols());
        for (std::size_t k = 0; k < cs.n_reduced(); ++k)
            f.row(static_cast<Eigen::Index>(cs.full_index(k))) = u[d].row(static_cast<Eigen::Index>(k));
        full.push_back(std::move(f));
    }
    return SeparatedSolution(dims, std::move(full));
}

std::size_t factor_bytes(const Factors& u) {
    std::size_t n = 0;
    for (const auto& f : u) n += static_cast<std::size_t>(f.size()) * sizeof(double);
    return n;
}

/// Ranks whose columns are nonzero in every dimension other than d.
std::vector<std::size_t> live_ranks(const Factors& u, std::size_t d) {
    std::vector<std::size_t> live;
    const auto m = static_cast<std::size_t>(u[0].cols());
    for (std::size_t r = 0; r < m; ++r) {
        bool ok = true;
        for (std::size_t i = 0; i < u.size() && ok; ++i)
            if (i != d && u[i].col(static_cast<Eigen::Index>(r)).cwiseAbs().maxCoeff() == 0.0) ok = false;
        if (ok) live.push_back(r);
    }
    return live;
}

bool source_vanishes(const WeakProblem& problem, const OperatorBundles& bundles) {
    for (std::size_t s = 0; s < problem.source.terms.size(); ++s) {
        if (problem.source.terms[s].coeff == 0.0) continue;
        bool zero_somewhere = false;
        for (const auto& b : bundles) zero_somewhere = zero_somewhere || b.loads[s].cwiseAbs().maxCoeff() == 0.0;
        if (!zero_somewhere) return false;
    }
    return true;
}

// Block system of dimension d restricted to the given ranks (block k ↔ ranks[k]).
BlockSystem assemble_block_system(const WeakProblem& problem, const OperatorBundles& bundles, const Factors& u,
                                  std::size_t d, const std::vector<std::size_t>& ranks) {
    const std::size_t nd = problem.n_dims();
    const auto r = static_cast<Eigen::Index>(ranks.size());
    const auto l = static_cast<Eigen::Index>(bundles[d].n_reduced());
    std::vector<Eigen::Index> cols(ranks.begin(), ranks.end());

    // Per other dimension and operator kind: C = Uᵀ·Op·U over the selected ranks.
    std::vector<std::array<std::optional<Eigen::MatrixXd>, kOperatorKinds>> contracted(nd);
    for (const auto& t : problem.terms) {
        for (std::size_t i = 0; i < nd; ++i) {
            if (i == d) continue;
            auto& slot = contracted[i][static_cast<std::size_t>(t.ops[i])];
            if (slot) continue;
            const Eigen::MatrixXd ui = u[i](Eigen::all, cols);
            slot = ui.transpose() * band_times(bundles[i].op(t.ops[i]), ui);
        }
    }

    // Scalar block weights summed per operator kind acting on dimension d.
    std::array<Eigen::MatrixXd, kOperatorKinds> weights;
    std::array<bool, kOperatorKinds> used{};
    for (auto& w : weights) w = Eigen::MatrixXd::Zero(r, r);
    for (const auto& t : problem.terms) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Constant(r, r, t.coeff);
        for (std::size_t i = 0; i < nd; ++i)
            if (i != d) s = s.cwiseProduct(*contracted[i][static_cast<std::size_t>(t.ops[i])]);
        weights[static_cast<std::size_t>(t.ops[d])] += s;
        used[static_cast<std::size_t>(t.ops[d])] = true;
    }

    BlockSystem sys{Eigen::MatrixXd::Zero(r * l, r * l), Eigen::VectorXd::Zero(r * l)};
    for (std::size_t k = 0; k < kOperatorKinds; ++k) {
        if (!used[k]) continue;
        const BandedMatrix& op = bundles[d].op(static_cast<OperatorKind>(k));
        const std::size_t hb = op.half_bandwidth();
        const auto n = static_cast<std::size_t>(l);
        for (Eigen::Index bm = 0; bm < r; ++bm) {
            for (Eigen::Index bn = 0; bn < r; ++bn) {
                const double w = weights[k](bm, bn);
                if (w == 0.0) continue;
                for (std::size_t a = 0; a < n; ++a) {
                    const std::size_t lo = a >= hb ? a - hb : 0;
                    const std::size_t hi = std::min(n - 1, a + hb);
                    for (std::size_t b = lo; b <= hi; ++b)
                        sys.matrix(bm * l + static_cast<Eigen::Index>(a), bn * l + static_cast<Eigen::Index>(b)) +=
                            w * op(a, b);
                }
            }
        }
    }

    for (std::size_t s = 0; s < problem.source.terms.size(); ++s) {
        const double coeff = problem.source.terms[s].coeff;
        if (coeff == 0.0) continue;
        Eigen::VectorXd scale = Eigen::VectorXd::Constant(r, coeff);
        for (std::size_t i = 0; i < nd; ++i)
            if (i != d) scale = scale.cwiseProduct(u[i](Eigen::all, cols).transpose() * bundles[i].loads[s]);
        for (Eigen::Index bm = 0; bm < r; ++bm) sys.rhs.segment(bm * l, l) += scale[bm] * bundles[d].loads[s];
    }
    return sys;
}

/// Alternating updates on reduced factors; only active ranks are unknowns.
class Alternating {
public:
    Alternating(const WeakProblem& problem, const OperatorBundles& bundles, Factors u)
        : problem_(problem), bundles_(bundles), u_(std::move(u)) {}

    const Factors& factors() const noexcept { return u_; }
    Factors& factors() noexcept { return u_; }

    struct Outcome {
        double change = 0.0;
        std::vector<double> residuals;
    };

    Outcome sweep(const std::vector<bool>& active) {
        const Factors before = u_;
        Outcome out;
        for (std::size_t d = 0; d < u_.size(); ++d) out.residuals.push_back(update(d, active));
        for (std::size_t d = 0; d < u_.size(); ++d) {
            double diff = 0.0, norm = 0.0;
            for (Eigen::Index m = 0; m < u_[d].cols(); ++m) {
                if (!active[static_cast<std::size_t>(m)]) continue;
                diff += (u_[d].col(m) - before[d].col(m)).squaredNorm();
                norm += u_[d].col(m).squaredNorm();
            }
            out.change = std::max(out.change, std::sqrt(diff) / std::max(std::sqrt(norm), kChangeFloor));
        }
        return out;
    }

private:
    double update(std::size_t d, const std::vector<bool>& active) {
        const std::vector<std::size_t> live = live_ranks(u_, d);
        std::vector<Eigen::Index> act_pos, frz_pos;
        for (std::size_t k = 0; k < live.size(); ++k) (active[live[k]] ? act_pos : frz_pos).push_back(static_cast<Eigen::Index>(k));
        for (std::size_t m = 0; m < active.size(); ++m)
            if (active[m]) u_[d].col(static_cast<Eigen::Index>(m)).setZero();
        if (act_pos.empty()) return 0.0;

        const auto l = static_cast<Eigen::Index>(bundles_[d].n_reduced());
        const auto bytes = static_cast<std::size_t>(live.size() * live.size()) * static_cast<std::size_t>(l * l) * sizeof(double);
        alloc::Scoped track(bytes);
        const BlockSystem full = assemble_block_system(problem_, bundles_, u_, d, live);

        auto block_indices = [l](const std::vector<Eigen::Index>& pos) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index p : pos)
                for (Eigen::Index a = 0; a < l; ++a) idx.push_back(p * l + a);
            return idx;
        };
        const auto ia = block_indices(act_pos);
        Eigen::MatrixXd a_aa;
        Eigen::VectorXd rhs;
        if (frz_pos.empty()) {
            a_aa = full.matrix;
            rhs = full.rhs;
        } else {
            const auto iff = block_indices(frz_pos);
            a_aa = full.matrix(ia, ia);
            Eigen::VectorXd u_f(static_cast<Eigen::Index>(iff.size()));
            for (std::size_t k = 0; k < frz_pos.size(); ++k)
                u_f.segment(static_cast<Eigen::Index>(k) * l, l) = u_[d].col(static_cast<Eigen::Index>(live[static_cast<std::size_t>(frz_pos[k])]));
            rhs = full.rhs(ia) - full.matrix(ia, iff) * u_f;
        }

        const double rhs_norm = rhs.norm();
        double residual = 0.0;
        if (rhs_norm > 0.0) {
            // Redundant ranks make A_d rank deficient; the minimum-norm solution pins
            // the otherwise free mixing between them so the sweep can settle.
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a_aa);
            cod.setThreshold(kBlockRankThreshold);
            const Eigen::VectorXd x = cod.solve(rhs);
            if (!x.allFinite())
                throw SingularBlock("block solve of dimension " + std::to_string(d) + " produced non-finite values", d,
                                    live[static_cast<std::size_t>(act_pos.front())]);
            residual = (a_aa * x - rhs).norm() / rhs_norm;
            for (std::size_t k = 0; k < act_pos.size(); ++k)
                u_[d].col(static_cast<Eigen::Index>(live[static_cast<std::size_t>(act_pos[k])])) = x.segment(static_cast<Eigen::Index>(k) * l, l);
        }
        normalize_active(active);
        return residual;
    }

    void normalize_active(const std::vector<bool>& active) {
        const std::size_t nd = u_.size();
        for (std::size_t m = 0; m < active.size(); ++m) {
            if (!active[m]) continue;
            const auto c = static_cast<Eigen::Index>(m);
            double scale = 1.0;
            bool zero = false;
            for (std::size_t d = 0; d + 1 < nd; ++d) zero = zero || u_[d].col(c).norm() == 0.0;
            if (zero) continue;
            for (std::size_t d = 0; d + 1 < nd; ++d) {
                const double n = u_[d].col(c).norm();
                u_[d].col(c) /= n;
                scale *= n;
            }
            u_[nd - 1].col(c) *= scale;
        }
    }

    const WeakProblem& problem_;
    const OperatorBundles& bundles_;
    Factors u_;
};

class FactorInit {
public:
    explicit FactorInit(std::uint64_t seed) : rng_(seed) {}

    void fill(Factors& u, std::size_t rank) {
        for (auto& f : u)
            for (Eigen::Index a = 0; a < f.rows(); ++a) f(a, static_cast<Eigen::Index>(rank)) = normal_(rng_);
    }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::vector<std::size_t> dead_ranks(const Factors& u) {
    std::vector<std::size_t> dead;
    for (Eigen::Index m = 0; m < u[0].cols(); ++m)
        for (const auto& f : u)
            if (f.col(m).cwiseAbs().maxCoeff() == 0.0) {
                dead.push_back(static_cast<std::size_t>(m));
                break;
            }
    return dead;
}

}  // namespace

BlockSystem build_block_system(const WeakProblem& problem, const OperatorBundles& bundles,
                               const SeparatedSolution& state, std::size_t d) {
    if (d >= problem.n_dims()) throw InvalidArgument("dimension index out of range");
    const Factors u = reduce_factors(state);
    const std::vector<std::size_t> live = live_ranks(u, d);
    for (std::size_t m = 0, k = 0; m < state.rank(); ++m) {
        if (k < live.size() && live[k] == m) {
            ++k;
            continue;
        }
        throw SingularBlock("rank " + std::to_string(m) + " vanishes in a dimension other than " +
                                problem.dims[d].label,
                            d, m);
    }
    return assemble_block_system(problem, bundles, u, d, live);
}

SweepResult als_sweep(const WeakProblem& problem, const OperatorBundles& bundles, const SeparatedSolution& state) {
    Alternating als(problem, bundles, reduce_factors(state));
    const auto out = als.sweep(std::vector<bool>(state.rank(), true));
    return {expand_factors(problem.dims, als.factors()), out.change, out.residuals};
}

SolveResult solve(const WeakProblem& problem, const SolverConfig& config,
                  const std::optional<SeparatedSolution>& warm_start) {
    const OperatorBundles bundles = precompute_dim_operators(problem, config.quad_points);
    return solve(problem, bundles, config, warm_start);
}

SolveResult solve(const WeakProblem& problem, const OperatorBundles& bundles, const SolverConfig& config,
                  const std::optional<SeparatedSolution>& warm_start) {
    problem.validate();
    config.validate();
    const std::size_t m_total = config.rank;
    Factors u;
    for (const auto& b : bundles)
        u.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b.n_reduced()), static_cast<Eigen::Index>(m_total)));
    alloc::Scoped track_state(2 * factor_bytes(u));

    std::size_t warm = 0;
    if (warm_start) {
        if (warm_start->rank() > m_total) throw InvalidArgument("warm start has more ranks than requested");
        if (warm_start->dims() != problem.dims) throw InvalidArgument("warm start dimensions differ from problem");
        const Factors w = reduce_factors(*warm_start);
        warm = warm_start->rank();
        for (std::size_t d = 0; d < u.size(); ++d) u[d].leftCols(static_cast<Eigen::Index>(warm)) = w[d];
    }

    FactorInit init(config.seed);
    const bool zero_source = source_vanishes(problem, bundles);
    SolveTrace trace;
    Alternating als(problem, bundles, std::move(u));

    std::size_t budget = config.max_sweeps;
    double best_change = std::numeric_limits<double>::infinity();
    Factors best = als.factors();

    // Amplitude Π_d‖u_d^m‖ of one rank.
    auto amplitude = [&](std::size_t m) {
        double a = 1.0;
        for (const auto& f : als.factors()) a *= f.col(static_cast<Eigen::Index>(m)).norm();
        return a;
    };

    // Once the earlier ranks solve the problem, an enrichment rank only chases
    // round-off and never settles. Such a rank and all later ones are dropped.
    bool dropped = false;
    auto negligible = [&](std::size_t m) {
        double leading = 0.0;
        for (std::size_t k = 0; k < m; ++k) leading = std::max(leading, amplitude(k));
        return leading > 0.0 && amplitude(m) < config.tol * leading;
    };

    // Sweeps until the change drops below tol or the sweep budget is spent.
    // enrich names the single active rank of a greedy stage.
    auto run = [&](const std::vector<bool>& active, std::size_t stage,
                   std::optional<std::size_t> enrich = std::nullopt) -> bool {
        while (budget > 0) {
            --budget;
            const auto t0 = Clock::now();
            const auto out = als.sweep(active);
            SweepRecord rec{trace.sweeps.size() + 1, stage, out.change, out.residuals,
                            std::chrono::duration<double>(Clock::now() - t0).count()};
            trace.sweeps.push_back(std::move(rec));
            if (out.change <= best_change) {
                best_change = out.change;
                best = als.factors();
            }
            if (enrich && negligible(*enrich)) {
                for (std::size_t k = *enrich; k < m_total; ++k)
                    for (auto& f : als.factors()) f.col(static_cast<Eigen::Index>(k)).setZero();
                dropped = true;
            }
            if (dropped || zero_source || out.change < config.tol) {
                best = als.factors();
                return true;
            }
            for (std::size_t m : dead_ranks(als.factors()))
                if (active[m]) init.fill(als.factors(), m);
        }
        return false;
    };

    bool converged = true;
    if (config.mode == SolveMode::FullAls) {
        for (std::size_t m = warm; m < m_total; ++m) init.fill(als.factors(), m);
        converged = run(std::vector<bool>(m_total, true), m_total);
    } else {
        for (std::size_t m = warm; m < m_total && !zero_source; ++m) {
            if (budget == 0) {
                converged = false;
                break;
            }
            init.fill(als.factors(), m);
            std::vector<bool> active(m_total, false);
            active[m] = true;
            best_change = std::numeric_limits<double>::infinity();
            converged = run(active, m + 1, m) && converged;
            if (dropped) break;
        }
        if (zero_source) converged = run(std::vector<bool>(m_total, true), m_total);
        if (config.greedy_refine && !zero_source) {
            best_change = std::numeric_limits<double>::infinity();
            converged = run(std::vector<bool>(m_total, true), m_total) && converged;
        }
    }
    trace.converged = converged;
    return {expand_factors(problem.dims, converged ? als.factors() : best), std::move(trace)};
}

}  // namespace chtd
