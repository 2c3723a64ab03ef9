#include <array>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chtd/error.hpp"
#include "chtd/reference_oracles.hpp"
#include "chtd/td_solver.hpp"
#include "support/checks.hpp"

using namespace chtd;

namespace {

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

GridField nodal_values(const SeparatedSolution& sol) {
    const auto nx = sol.dim(0).mesh.nodes(), ny = sol.dim(1).mesh.nodes();
    return evaluate_grid(sol, {{nx.begin(), nx.end()}, {ny.begin(), ny.end()}});
}

}  // namespace

TEST(Problems, PoissonStructure) {
    const WeakProblem pb = poisson2d_problem({8, 6}, Hyperparams::fe_linear());
    EXPECT_NO_THROW(pb.validate());
    ASSERT_EQ(pb.n_dims(), 2u);
    EXPECT_EQ(pb.dims[0].n_nodes(), 9u);
    EXPECT_EQ(pb.dims[1].n_nodes(), 7u);
    EXPECT_EQ(pb.dims[0].constraints.n_reduced(), 7u);
    EXPECT_EQ(pb.terms.size(), 2u);
    const std::array<double, 2> centre{5.0, 5.0};
    EXPECT_DOUBLE_EQ(pb.source(centre), 1.0);
    const std::array<double, 2> off{6.0, 5.0};
    EXPECT_NEAR(pb.source(off), std::exp(-10.0), 1e-15);
}

TEST(Problems, DiffusionStructure) {
    const DiffusionConstants c;
    EXPECT_NEAR(c.alpha(), 1.58674e-5, 1e-10);
    const WeakProblem pb = diffusion_spacetime_problem({4, 4, 4, 6}, Hyperparams::chidenn(2, 2));
    EXPECT_NO_THROW(pb.validate());
    ASSERT_EQ(pb.n_dims(), 4u);
    const auto t_con = pb.dims[3].constraints.constrained();
    ASSERT_EQ(t_con.size(), 1u);
    EXPECT_EQ(t_con[0], 0u);
    EXPECT_EQ(pb.dims[0].constraints.constrained().size(), 2u);
    ASSERT_EQ(pb.source.terms.size(), 3u);
    // The second spot is the one centred inside the cube.
    const std::array<double, 4> p{2e-3, 2e-3, 9.8e-3, 0.1};
    EXPECT_NEAR(pb.source(p), 2.55e11, 2.55e11 * 1e-6);
    const std::array<double, 4> shallow{2e-3, 2e-3, 5e-3, 0.1};
    EXPECT_EQ(pb.source(shallow), 0.0);
    EXPECT_EQ(heaviside(0.0), 0.5);

    const WeakProblem verbatim = diffusion_spacetime_problem({4, 4, 4, 6}, Hyperparams::chidenn(2, 2), true);
    EXPECT_EQ(verbatim.terms[1].coeff, -pb.terms[1].coeff);
    EXPECT_EQ(verbatim.terms[0].coeff, pb.terms[0].coeff);
}

TEST(Problems, ConfigValidation) {
    SolverConfig cfg;
    cfg.rank = 0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg.rank = 2;
    cfg.tol = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    EXPECT_THROW(poisson2d_problem({1, 4}, Hyperparams::fe_linear()), InvalidArgument);
}

TEST(BlockSystem, MatchesKroneckerContraction) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t nx = 3 + rng() % 10, ny = 3 + rng() % 10;
        const std::size_t rank = 1 + rng() % 3;
        const Hyperparams hp = trial % 2 ? Hyperparams::chidenn(1 + rng() % 2, 1) : Hyperparams::fe_linear();
        const WeakProblem pb = poisson2d_problem({nx, ny}, hp);
        const OperatorBundles bundles = precompute_dim_operators(pb);
        const SeparatedSolution state = oracle::random_state(pb.dims, rank, rng());
        const oracle::Kronecker2D sys = oracle::kronecker_system(pb, bundles);
        const auto red = oracle::reduced_factors(state);
        for (std::size_t d = 0; d < 2; ++d) {
            const BlockSystem got = build_block_system(pb, bundles, state, d);
            const BlockSystem want = oracle::contract_kronecker(sys, red, d);
            EXPECT_LE(rel_diff(got.matrix, want.matrix), 1e-10) << "trial " << trial << " d=" << d;
            EXPECT_LE(rel_diff(got.rhs, want.rhs), 1e-10) << "trial " << trial << " d=" << d;
            EXPECT_LE((got.matrix - got.matrix.transpose()).cwiseAbs().maxCoeff(), 1e-12 * got.matrix.cwiseAbs().maxCoeff());
        }
    }
}

TEST(BlockSystem, NonSymmetricTermsMatchKroneckerContraction) {
    for (std::size_t rank : {1u, 2u, 3u}) {
        WeakProblem pb = diffusion_spacetime_problem({4, 4, 4, 5}, Hyperparams::fe_linear());
        // Collapse to (x, t): keep the GRAD-in-time structure on two dimensions.
        pb.dims = {pb.dims[0], pb.dims[3]};
        pb.terms = {{2.0, {OperatorKind::Mass, OperatorKind::Grad}}, {0.5, {OperatorKind::Stiff, OperatorKind::Mass}},
                    {1.5, {OperatorKind::Grad, OperatorKind::Stiff}}};
        const ScalarFunction f = [](double v) { return 1.0 + v; };
        pb.source.terms = {{1.0, {f, f}}};
        const OperatorBundles bundles = precompute_dim_operators(pb);
        const SeparatedSolution state = oracle::random_state(pb.dims, rank, 40 + rank);
        for (std::size_t d = 0; d < 2; ++d)
            EXPECT_LE(oracle::block_deviation(pb, bundles, state, build_block_system(pb, bundles, state, d), d), 1e-12);
    }
}

TEST(BlockSystem, VanishedRankThrows) {
    const WeakProblem pb = poisson2d_problem({6, 6}, Hyperparams::fe_linear());
    const OperatorBundles bundles = precompute_dim_operators(pb);
    SeparatedSolution state = oracle::random_state(pb.dims, 2, 1);
    Eigen::MatrixXd fy = state.factor(1);
    fy.col(1).setZero();
    state.set_factor(1, fy);
    EXPECT_THROW(build_block_system(pb, bundles, state, 0), SingularBlock);
    EXPECT_NO_THROW(build_block_system(pb, bundles, state, 1));
}

TEST(Solve, ZeroSourceConvergesImmediately) {
    WeakProblem pb = poisson2d_problem({8, 8}, Hyperparams::fe_linear());
    pb.source.terms[0].coeff = 0.0;
    SolverConfig cfg;
    cfg.rank = 2;
    const SolveResult r = solve(pb, cfg);
    EXPECT_TRUE(r.trace.converged);
    EXPECT_LE(r.trace.sweeps.size(), 2u);
    for (double v : nodal_values(r.solution).values) EXPECT_LE(std::abs(v), 1e-14);
}

TEST(Solve, ManufacturedMatchesDenseGalerkin) {
    const WeakProblem pb = manufactured_poisson2d_problem({16, 16}, Hyperparams::fe_linear());
    SolverConfig cfg;
    cfg.rank = 10;
    cfg.tol = 1e-6;
    cfg.max_sweeps = 100;
    const SolveResult r = solve(pb, cfg);
    EXPECT_TRUE(r.trace.converged);
    EXPECT_LE(r.trace.sweeps.size(), 100u);
    const GridField dense = dense_galerkin_2d(pb);
    EXPECT_LE(rel_l2_error(nodal_values(r.solution), dense).value, 1e-3);
    for (double res : r.trace.sweeps.back().residuals) EXPECT_LE(res, 1e-8);
}

TEST(Solve, ConvergedStateIsAFixedPoint) {
    const WeakProblem pb = manufactured_poisson2d_problem({10, 10}, Hyperparams::chidenn(2, 2));
    SolverConfig cfg;
    cfg.rank = 1;
    cfg.tol = 1e-10;
    const SolveResult r = solve(pb, cfg);
    ASSERT_TRUE(r.trace.converged);
    const OperatorBundles bundles = precompute_dim_operators(pb);
    const SweepResult again = als_sweep(pb, bundles, r.solution);
    EXPECT_LE(again.change, 1e-8);
    for (std::size_t d = 0; d < 2; ++d) {
        const BlockSystem bs = build_block_system(pb, bundles, r.solution, d);
        const auto red = oracle::reduced_factors(r.solution);
        const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(red[d].data(), red[d].size());
        EXPECT_LE((bs.matrix * u - bs.rhs).norm() / bs.rhs.norm(), 1e-8);
    }
}

TEST(Solve, OneSweepReducesResidualFromRandomStart) {
    const WeakProblem pb = poisson2d_problem({12, 12}, Hyperparams::fe_linear());
    const OperatorBundles bundles = precompute_dim_operators(pb);
    const SeparatedSolution start = oracle::random_state(pb.dims, 2, 9);
    const auto residual = [&](const SeparatedSolution& s) {
        const BlockSystem bs = build_block_system(pb, bundles, s, 0);
        const auto red = oracle::reduced_factors(s);
        const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(red[0].data(), red[0].size());
        return (bs.matrix * u - bs.rhs).norm() / bs.rhs.norm();
    };
    EXPECT_LT(residual(als_sweep(pb, bundles, start).state), residual(start));
}

TEST(Solve, ConstrainedRowsStayZero) {
    const WeakProblem pb = diffusion_spacetime_problem({4, 4, 4, 5}, Hyperparams::fe_linear());
    SolverConfig cfg;
    cfg.rank = 2;
    cfg.max_sweeps = 5;
    const SolveResult r = solve(pb, cfg);
    for (std::size_t d = 0; d < 4; ++d)
        for (std::size_t c : r.solution.dim(d).constraints.constrained())
            EXPECT_EQ(r.solution.factor(d).row(static_cast<Eigen::Index>(c)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE(r.trace.sweeps.size(), 5u);
}

TEST(Solve, DeterministicForFixedSeed) {
    const WeakProblem pb = poisson2d_problem({12, 12}, Hyperparams::chidenn(2, 2));
    SolverConfig cfg;
    cfg.rank = 3;
    cfg.seed = 17;
    const SolveResult a = solve(pb, cfg);
    const SolveResult b = solve(pb, cfg);
    EXPECT_EQ(encode_chtd(a.solution), encode_chtd(b.solution));
    ASSERT_EQ(a.trace.sweeps.size(), b.trace.sweeps.size());
    for (std::size_t i = 0; i < a.trace.sweeps.size(); ++i)
        EXPECT_EQ(a.trace.sweeps[i].change, b.trace.sweeps[i].change);
}

TEST(Solve, HigherRankDoesNotIncreaseEnergyError) {
    const Hyperparams hp = Hyperparams::fe_linear();
    const WeakProblem pb = poisson2d_problem({16, 16}, hp);
    const GridField dense = dense_galerkin_2d(pb);
    SolverConfig cfg;
    cfg.tol = 1e-8;
    cfg.max_sweeps = 200;
    cfg.rank = 1;
    const SolveResult r1 = solve(pb, cfg);
    cfg.rank = 5;
    const SolveResult r5 = solve(pb, cfg, r1.solution);
    EXPECT_LE(energy_norm_error(nodal_values(r5.solution), dense),
              energy_norm_error(nodal_values(r1.solution), dense) + 1e-12);
}

TEST(Solve, GreedyMode) {
    const WeakProblem pb = manufactured_poisson2d_problem({12, 12}, Hyperparams::fe_linear());
    SolverConfig cfg;
    cfg.rank = 3;
    cfg.mode = SolveMode::Greedy;
    cfg.tol = 1e-8;
    cfg.max_sweeps = 200;
    const SolveResult r = solve(pb, cfg);
    EXPECT_TRUE(r.trace.converged);
    EXPECT_EQ(r.solution.rank(), 3u);
    EXPECT_LE(r.trace.sweeps.size(), 200u);
    std::size_t last_stage = 0;
    for (const auto& s : r.trace.sweeps) {
        EXPECT_GE(s.stage, last_stage);
        last_stage = s.stage;
    }
    const GridField dense = dense_galerkin_2d(pb);
    EXPECT_LE(rel_l2_error(nodal_values(r.solution), dense).value, 1e-3);
}

TEST(Solve, NonConvergenceIsReported) {
    const WeakProblem pb = poisson2d_problem({12, 12}, Hyperparams::fe_linear());
    SolverConfig cfg;
    cfg.rank = 4;
    cfg.tol = 1e-16;
    cfg.max_sweeps = 1;
    const SolveResult r = solve(pb, cfg);
    EXPECT_FALSE(r.trace.converged);
    EXPECT_EQ(r.trace.sweeps.size(), 1u);
    EXPECT_EQ(r.solution.rank(), 4u);
}
