#include <cmath>

#include <gtest/gtest.h>

#include "chtd/error.hpp"
#include "chtd/mesh_quad.hpp"

using namespace chtd;

TEST(Mesh1D, UnitSpacing) {
    const Mesh1D m = uniform_mesh(0.0, 10.0, 10);
    ASSERT_EQ(m.n_nodes(), 11u);
    for (std::size_t i = 0; i <= 10; ++i) EXPECT_DOUBLE_EQ(m.node(i), static_cast<double>(i));
    EXPECT_DOUBLE_EQ(m.h(), 1.0);
}

TEST(Mesh1D, SmallDomain) {
    const Mesh1D m = uniform_mesh(0.0, 0.01, 4);
    const double expected[] = {0.0, 0.0025, 0.005, 0.0075, 0.01};
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(m.node(i), expected[i], 1e-18);
    EXPECT_EQ(m.node(4), 0.01);
}

TEST(Mesh1D, RejectsBadInput) {
    EXPECT_THROW(uniform_mesh(0.0, 10.0, 0), InvalidArgument);
    EXPECT_THROW(uniform_mesh(1.0, 1.0, 3), InvalidArgument);
    EXPECT_THROW(uniform_mesh(2.0, 1.0, 3), InvalidArgument);
}

TEST(Mesh1D, NodesIncreaseWithUniformSpacing) {
    for (std::size_t n : {1u, 3u, 17u, 100u, 1000u}) {
        const Mesh1D m(-0.3, 7.1, n);
        EXPECT_EQ(m.node(0), -0.3);
        EXPECT_EQ(m.node(n), 7.1);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_LT(m.node(i), m.node(i + 1));
            EXPECT_NEAR(m.node(i + 1) - m.node(i), m.h(), 1e-12 * m.h() * 10);
        }
    }
}

TEST(Mesh1D, Locate) {
    const Mesh1D m(0.0, 10.0, 10);
    EXPECT_EQ(m.locate(0.0), 0u);
    EXPECT_EQ(m.locate(4.25), 4u);
    EXPECT_EQ(m.locate(4.0), 4u);
    EXPECT_EQ(m.locate(10.0), 9u);
    EXPECT_THROW(m.locate(10.5), OutOfDomain);
    EXPECT_THROW(m.locate(-0.1), OutOfDomain);
}

TEST(GaussRule, OneAndTwoPoints) {
    const QuadRule r1 = gauss_rule(1);
    ASSERT_EQ(r1.size(), 1u);
    EXPECT_EQ(r1.points[0], 0.0);
    EXPECT_EQ(r1.weights[0], 2.0);
    const QuadRule r2 = gauss_rule(2);
    ASSERT_EQ(r2.size(), 2u);
    EXPECT_NEAR(r2.points[0], -1.0 / std::sqrt(3.0), 2e-16);
    EXPECT_NEAR(r2.points[1], 1.0 / std::sqrt(3.0), 2e-16);
    EXPECT_NEAR(r2.weights[0], 1.0, 1e-16);
    EXPECT_NEAR(r2.weights[1], 1.0, 1e-16);
}

TEST(GaussRule, FivePointsIntegrateEighthPower) {
    const QuadRule r = gauss_rule(5);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.points[i], 8);
    EXPECT_NEAR(s, 2.0 / 9.0, 1e-12);
}

TEST(GaussRule, ExactnessUpToDegreeTwoNMinusOne) {
    for (std::size_t n = 1; n <= 20; ++n) {
        const QuadRule r = gauss_rule(n);
        double wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_GT(r.weights[i], 0.0);
            EXPECT_GE(r.points[i], -1.0);
            EXPECT_LE(r.points[i], 1.0);
            if (i > 0) EXPECT_LT(r.points[i - 1], r.points[i]) << "n=" << n;
            wsum += r.weights[i];
        }
        EXPECT_NEAR(wsum, 2.0, 1e-12) << "n=" << n;
        for (std::size_t q = 0; q <= 2 * n - 1; ++q) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.points[i], static_cast<double>(q));
            const double exact = q % 2 == 1 ? 0.0 : 2.0 / static_cast<double>(q + 1);
            EXPECT_NEAR(s, exact, 1e-12) << "n=" << n << " q=" << q;
        }
    }
}

TEST(GaussRule, OutOfRange) {
    EXPECT_THROW(gauss_rule(0), InvalidArgument);
    EXPECT_THROW(gauss_rule(kMaxGaussPoints + 1), InvalidArgument);
}

TEST(MapToElement, Examples) {
    const Mesh1D m(0.0, 10.0, 10);
    auto p = map_to_element(m, 2, 0.0);
    EXPECT_DOUBLE_EQ(p.x, 2.5);
    EXPECT_DOUBLE_EQ(p.jacobian, 0.5);
    p = map_to_element(m, 0, -1.0);
    EXPECT_DOUBLE_EQ(p.x, 0.0);
    EXPECT_DOUBLE_EQ(p.jacobian, 0.5);
    const Mesh1D s(0.0, 0.01, 4);
    p = map_to_element(s, 3, 1.0);
    EXPECT_NEAR(p.x, 0.01, 1e-18);
    EXPECT_NEAR(p.jacobian, 0.00125, 1e-18);
    EXPECT_THROW(map_to_element(m, 10, 0.0), InvalidArgument);
}

TEST(MapToElement, StaysInsideElement) {
    const Mesh1D m(-1.0, 3.0, 7);
    for (std::size_t e = 0; e < m.n_elem(); ++e)
        for (double xi : {-1.0, 0.0, 1.0}) {
            const double x = map_to_element(m, e, xi).x;
            EXPECT_GE(x, m.node(e) - 1e-15);
            EXPECT_LE(x, m.node(e + 1) + 1e-15);
        }
}
