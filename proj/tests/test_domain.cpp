#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "robinwave/domain.hpp"
#include "shooting_oracle.hpp"

using namespace robinwave;

namespace {

Field field_of(const GridPtr& g, double (*f)(Point)) { return Field::from_function(g, f); }

}  // namespace

TEST(BuildGrid, IntervalGeometry) {
    const auto g = build_interval(0.0, 1.0, 101);
    EXPECT_DOUBLE_EQ(g->h, 0.01);
    ASSERT_EQ(g->boundary_nodes.size(), 2u);
    EXPECT_EQ(g->boundary_nodes[0], 0);
    EXPECT_EQ(g->boundary_nodes[1], 100);
    EXPECT_NEAR(g->measure, 1.0, 1e-14);
    EXPECT_NEAR(g->boundary_measure, 2.0, 1e-14);
}

TEST(BuildGrid, SquareAndDiskMeasures) {
    const auto sq = build_rectangle(0.0, 1.0, 0.0, 1.0, 51, 51);
    EXPECT_NEAR(sq->measure, 1.0, 1e-10);
    EXPECT_NEAR(sq->boundary_measure, 4.0, 1e-10);
    const auto disk = build_disk(1.0, 64, 64);
    EXPECT_NEAR(disk->measure, std::numbers::pi, 1e-6);
    EXPECT_NEAR(disk->boundary_measure, 2.0 * std::numbers::pi, 1e-6);
}

TEST(BuildGrid, RejectsTooFewNodes) {
    EXPECT_THROW(build_interval(0.0, 1.0, 7), ConfigError);
    EXPECT_THROW(build_disk(1.0, 8, 4), ConfigError);
}

TEST(BuildGrid, PartitionAndUnitNormalsProperty) {
    for (const auto& g : {build_interval(-1.0, 2.0, 33), build_rectangle(0.0, 2.0, 0.0, 1.0, 17, 9),
                          build_disk(1.5, 12, 24)}) {
        std::vector<int> seen(g->size(), 0);
        for (int i : g->boundary_nodes) ++seen[i];
        for (int i : g->interior_nodes) ++seen[i];
        for (int c : seen) EXPECT_EQ(c, 1);
        for (const auto& bp : g->boundary_points) {
            EXPECT_NEAR(std::hypot(bp.normal[0], bp.normal[1]), 1.0, 1e-14);
            EXPECT_TRUE(g->on_boundary[bp.node]);
        }
    }
}

TEST(Laplacian, QuadraticAndConstant) {
    const auto g = build_interval(0.0, 1.0, 101);
    const auto sq = apply_laplacian(field_of(g, [](Point p) { return p.x * p.x; }));
    const auto cst = apply_laplacian(field_of(g, [](Point) { return 3.0; }));
    for (int i : g->interior_nodes) {
        EXPECT_NEAR(sq[i], 2.0, 1e-3);
        EXPECT_EQ(cst[i], 0.0);
    }
}

TEST(Laplacian, SineRefinementRatio) {
    const auto defect = [](int n) {
        const auto g = build_interval(0.0, 1.0, n);
        const auto lap = apply_laplacian(field_of(g, [](Point p) { return std::sin(std::numbers::pi * p.x); }));
        double worst = 0.0;
        for (int i : g->interior_nodes) {
            const double want = -std::numbers::pi * std::numbers::pi * std::sin(std::numbers::pi * g->points[i].x);
            worst = std::max(worst, std::fabs(lap[i] - want));
        }
        return worst;
    };
    const double ratio = defect(101) / defect(201);
    EXPECT_NEAR(ratio, 4.0, 0.2);
}

TEST(RobinTrace, LinearAndEigenfunction) {
    const auto g = build_interval(0.0, 1.0, 101);
    const auto zero = robin_trace_residual(field_of(g, [](Point) { return 0.0; }));
    for (double r : zero) EXPECT_EQ(r, 0.0);
    const auto lin = robin_trace_residual(field_of(g, [](Point p) { return p.x; }));
    ASSERT_EQ(lin.size(), 2u);
    EXPECT_NEAR(lin[0], -1.0, 1e-10);
    EXPECT_NEAR(lin[1], 2.0, 1e-10);

    const double mu = std::sqrt(oracle::robin_interval_eigenvalues(1.0, 1).front());
    const auto fine = build_interval(0.0, 1.0, 20001);
    Field cand(fine, std::vector<double>(fine->size()));
    for (int i = 0; i < fine->size(); ++i) {
        const double x = fine->points[i].x;
        cand.values[i] = mu * std::cos(mu * x) + std::sin(mu * x);
    }
    const auto res = robin_trace_residual(cand);
    EXPECT_LT(std::fabs(res[0]), 1e-8);
    EXPECT_LT(std::fabs(res[1]), 1e-8);
}

TEST(Norms, FrozenValues) {
    const auto g = build_interval(0.0, 1.0, 101);
    const auto one = field_of(g, [](Point) { return 1.0; });
    EXPECT_NEAR(norm(one, NormKind::H1), std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(norm(one, NormKind::L2), 1.0, 1e-14);
    EXPECT_NEAR(norm(field_of(g, [](Point p) { return p.x; }), NormKind::H1), std::sqrt(2.0), 1e-6);
    EXPECT_EQ(parse_norm_kind("boundary-L2"), NormKind::BoundaryL2);
    EXPECT_THROW(parse_norm_kind("H2"), ConfigError);
}

TEST(Norms, H1SplitsIntoGradientAndBoundaryPieces) {
    const auto g = build_disk(1.0, 16, 32);
    const auto u = field_of(g, [](Point p) { return std::exp(p.x) * std::cos(2.0 * p.y); });
    const double h1 = norm(u, NormKind::H1);
    const double b = norm(u, NormKind::BoundaryL2);
    EXPECT_NEAR(h1 * h1, dirichlet_energy(*g, u.values) + b * b, 1e-12 * h1 * h1);
}

TEST(Domain, DiscreteIntegrationByParts) {
    // ∫(Δ_h u)v + ∫∇u·∇v - ∫_Γ(∂νu)v → 0 for smooth u, v on the unit square.
    const auto defect = [](int n) {
        const auto g = build_rectangle(0.0, 1.0, 0.0, 1.0, n, n);
        const auto u = Field::from_function(g, [](Point p) { return std::sin(p.x) * std::exp(p.y); });
        const auto v = Field::from_function(g, [](Point p) { return 1.0 + p.x * p.y; });
        // Exact pieces: Δu = 0, so ∫∇u·∇v = ∫_Γ (∂νu) v.
        const auto lap = apply_laplacian(u);
        double lhs = 0.0;
        for (int i : g->interior_nodes) lhs += g->cell_weights[i] * lap[i] * v[i];
        (void)lhs;
        double flux = 0.0;
        for (const auto& bp : g->boundary_points) {
            const Point p = g->points[bp.node];
            const double ux = std::cos(p.x) * std::exp(p.y);
            const double uy = std::sin(p.x) * std::exp(p.y);
            flux += bp.weight * (ux * bp.normal[0] + uy * bp.normal[1]) * v[bp.node];
        }
        return std::fabs(dirichlet_form(*g, u.values, v.values) - flux);
    };
    const double coarse = defect(33);
    const double fine = defect(65);
    EXPECT_LT(fine, coarse);
    EXPECT_LT(fine, 0.02);
}

TEST(Poincare, ShootingOracleAndRefinement) {
    const double mu0 = oracle::robin_interval_eigenvalues(1.0, 1).front();
    EXPECT_NEAR(mu0, 1.7070529755509225, 1e-12);
    const double d101 = poincare_constant(*build_interval(0.0, 1.0, 101)) - mu0;
    const double d201 = poincare_constant(*build_interval(0.0, 1.0, 201)) - mu0;
    const double d401 = poincare_constant(*build_interval(0.0, 1.0, 401)) - mu0;
    EXPECT_LT(std::fabs(d401), 1e-4);
    EXPECT_NEAR(d101 / d201, 4.0, 0.3);
    EXPECT_LT(std::fabs(d201), std::fabs(d101));
}

TEST(Poincare, PositiveAndStableUnderResolutionChange) {
    for (const auto& g : {build_rectangle(0.0, 1.0, 0.0, 2.0, 21, 41), build_disk(1.0, 16, 32)}) {
        EXPECT_GT(poincare_constant(*g), 0.0);
    }
    const double base = poincare_constant(*build_rectangle(0.0, 1.0, 0.0, 1.0, 31, 31));
    const double plus = poincare_constant(*build_rectangle(0.0, 1.0, 0.0, 1.0, 34, 34));
    const double minus = poincare_constant(*build_rectangle(0.0, 1.0, 0.0, 1.0, 28, 28));
    EXPECT_LT(std::fabs(plus - base) / base, 0.01);
    EXPECT_LT(std::fabs(minus - base) / base, 0.01);
}
