#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "robinwave/domain.hpp"
#include "robinwave/equilibria.hpp"
#include "shooting_oracle.hpp"

using namespace robinwave;

namespace {

EllipticProblem chafee(double lambda, int n = 101) {
    return {build_interval(0.0, 1.0, n), make_source("chafee-cubic", {{"lambda", lambda}})};
}

std::vector<double> small_random(const Grid& g, std::uint64_t seed, double amp) {
    std::mt19937_64 rng(seed);
    auto v = random_smooth_field(g, rng);
    const double n = norm(g, v, NormKind::H1);
    for (double& x : v) x *= amp / n;
    return v;
}

// Continuous energy of a shooting profile sampled on a uniform grid.
double oracle_energy(const std::vector<double>& u, double lambda) {
    const int n = static_cast<int>(u.size());
    const double h = 1.0 / (n - 1);
    double acc = 0.5 * (u.front() * u.front() + u.back() * u.back());
    for (int i = 0; i + 1 < n; ++i) {
        const double du = (u[i + 1] - u[i]) / h;
        acc += 0.5 * h * du * du;
    }
    for (int i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
        acc += w * (-0.5 * lambda * u[i] * u[i] + 0.25 * std::pow(u[i], 4));
    }
    return acc;
}

}  // namespace

TEST(Energy, FrozenValues) {
    const auto pb = chafee(1.0);
    const std::vector<double> zero(pb.grid->size(), 0.0);
    const std::vector<double> one(pb.grid->size(), 1.0);
    const std::vector<double> minus_one(pb.grid->size(), -1.0);
    EXPECT_EQ(energy(pb, zero), 0.0);
    EXPECT_NEAR(energy(pb, one), 0.75, 1e-12);
    EXPECT_DOUBLE_EQ(energy(pb, one), energy(pb, minus_one));
}

TEST(Residual, ZeroAtZero) {
    const auto pb = chafee(3.0);
    const auto r = residual(pb, std::vector<double>(pb.grid->size(), 0.0));
    EXPECT_EQ(r.combined(), 0.0);
}

TEST(Residual, GradientCheckProperty) {
    for (const auto& pb : {chafee(2.0, 61), EllipticProblem{build_rectangle(0, 1, 0, 1, 15, 15),
                                                            make_source("example-exp", {{"lambda", 2.0}})},
                           EllipticProblem{build_disk(1.0, 10, 16), make_source("chafee-cubic", {{"lambda", 4.0}})}}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto u = small_random(*pb.grid, seed, 1.0);
            const auto w = small_random(*pb.grid, seed + 100, 1.0);
            const double eps = 1e-4;
            std::vector<double> up(u), um(u);
            for (std::size_t i = 0; i < u.size(); ++i) {
                up[i] += eps * w[i];
                um[i] -= eps * w[i];
            }
            const double fd = (energy(pb, up) - energy(pb, um)) / (2.0 * eps);
            ASSERT_NEAR(fd, pair_residual(*pb.grid, residual(pb, u), w), 1e-6);
        }
    }
}

TEST(Residual, MatchesStrongFormForSmoothField) {
    // u = cos(x): interior -u'' + f₀(u) with f₀ = λs; boundary ∂νu + u.
    const auto g = build_interval(0.0, 1.0, 401);
    const EllipticProblem pb{g, make_source("linear", {{"lambda", 2.0}})};
    const auto u = Field::from_function(g, [](Point p) { return std::cos(p.x); });
    const auto r = residual(pb, u.values);
    for (int i : g->interior_nodes) ASSERT_NEAR(r.interior[i], 3.0 * std::cos(g->points[i].x), 1e-5);
    // ∂νu + u at 0: sin(0) + 1 = 1; at 1: -sin(1) + cos(1). O(h) corrections from the half cell.
    EXPECT_NEAR(r.boundary[0], 1.0, 1e-2);
    EXPECT_NEAR(r.boundary[1], -std::sin(1.0) + std::cos(1.0), 1e-2);
}

TEST(Newton, CoerciveLandscapeReturnsToZero) {
    const auto pb = chafee(0.5);
    const auto eq = newton_solve(pb, small_random(*pb.grid, 3, 0.3));
    EXPECT_LT(norm(eq.phi, NormKind::H1), 1e-9);
    EXPECT_LT(eq.residual, 1e-9);
    EXPECT_FALSE(eq.degenerate);
    const double mu0 = poincare_constant(*pb.grid);
    EXPECT_NEAR(eq.hessian_min_eigenvalue, mu0 - 0.5, 1e-8);
    EXPECT_NEAR(eq.hessian_min_eigenvalue, 1.207, 2e-3);
}

TEST(Newton, DegenerateAtPrincipalEigenvalue) {
    const auto g = build_interval(0.0, 1.0, 101);
    const double mu0 = poincare_constant(*g);
    const EllipticProblem pb{g, make_source("chafee-cubic", {{"lambda", mu0}})};
    const auto eq = newton_solve(pb, std::vector<double>(g->size(), 0.0));
    EXPECT_TRUE(eq.degenerate);
    EXPECT_LT(std::fabs(eq.hessian_min_eigenvalue), 1e-6);
}

TEST(Newton, ExampleExpHasZeroEquilibrium) {
    const EllipticProblem pb{build_interval(0.0, 1.0, 101), make_source("example-exp", {{"lambda", 2.0}})};
    const auto eq = newton_solve(pb, small_random(*pb.grid, 9, 0.5));
    EXPECT_LT(eq.residual, 1e-10);
    EXPECT_LT(norm(eq.phi, NormKind::L2), 1e-10);
}

TEST(Newton, NonconvergenceCarriesLastIterate) {
    const auto pb = chafee(25.0);
    NewtonOptions opt;
    opt.max_iter = 1;
    try {
        newton_solve(pb, small_random(*pb.grid, 2, 3.0), opt);
        FAIL() << "expected NonconvergenceError";
    } catch (const NonconvergenceError& e) {
        EXPECT_EQ(e.last_iterate.size(), pb.grid->size());
    }
    opt.tol = 0.0;
    EXPECT_THROW(newton_solve(pb, std::vector<double>(pb.grid->size(), 0.0), opt), ConfigError);
}

TEST(Deflation, CountsMatchShootingOracle) {
    int prev = 0;
    for (double lambda : {1.0, 10.0, 25.0}) {
        const auto pb = chafee(lambda);
        DeflationOptions opt;
        opt.max_amplitude = std::sqrt(lambda) + 1.0;
        const auto eqs = deflated_enumerate(pb, 8, opt);
        const int want = oracle::chafee_solution_count(lambda);
        EXPECT_EQ(static_cast<int>(eqs.size()), want) << "lambda=" << lambda;
        EXPECT_GE(static_cast<int>(eqs.size()), prev);
        prev = static_cast<int>(eqs.size());

        for (std::size_t k = 0; k + 1 < eqs.size(); ++k) EXPECT_LE(eqs[k].energy, eqs[k + 1].energy);
        for (const auto& eq : eqs) {
            EXPECT_LT(eq.residual, 1e-9);
            double step = 0.0;
            for (double s : newton_step(pb, eq.phi.values)) step = std::max(step, std::fabs(s));
            EXPECT_LT(step, 1e-10);
            // Odd nonlinearity: -φ must also be present.
            std::vector<double> neg(eq.phi.values);
            for (double& v : neg) v = -v;
            double best = 1e300;
            for (const auto& other : eqs) {
                std::vector<double> d(neg);
                for (std::size_t i = 0; i < d.size(); ++i) d[i] -= other.phi.values[i];
                best = std::min(best, norm(*pb.grid, d, NormKind::H1));
            }
            EXPECT_LT(best, 1e-6);
        }
    }
}

TEST(Deflation, BifurcatedPairHasLowerEnergyThanOracleZero) {
    const double lambda = 10.0;
    const auto pb = chafee(lambda, 201);
    DeflationOptions opt;
    opt.max_amplitude = 4.0;
    const auto eqs = deflated_enumerate(pb, 6, opt);
    ASSERT_EQ(eqs.size(), 3u);
    const auto shots = oracle::chafee_positive_shots(lambda);
    ASSERT_EQ(shots.size(), 1u);
    std::vector<double> profile;
    const auto f = [lambda](double u) { return -lambda * u + u * u * u; };
    oracle::robin_shoot(f, shots[0], 1.0, &profile, 201);
    const double e_oracle = oracle_energy(profile, lambda);
    EXPECT_LT(e_oracle, 0.0);
    EXPECT_NEAR(eqs[0].energy, e_oracle, 1e-2 * std::fabs(e_oracle));
    EXPECT_NEAR(eqs[1].energy, e_oracle, 1e-2 * std::fabs(e_oracle));
    EXPECT_NEAR(eqs[2].energy, 0.0, 1e-12);
    EXPECT_NEAR(std::fabs(eqs[0].phi[0]), shots[0], 1e-2 * shots[0]);
}

TEST(Deflation, RejectsZeroStarts) { EXPECT_THROW(deflated_enumerate(chafee(1.0), 0), ConfigError); }
