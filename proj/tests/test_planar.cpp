#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "robinwave/planar.hpp"

using namespace robinwave;
using namespace robinwave::planar;

namespace {

constexpr double kPi = std::numbers::pi;

double fan_angle(int k) { return kTwoPi * k / 16.0; }

}  // namespace

TEST(Planar, GradientMatchesCentralDifferences) {
    for (const auto& spec : {PotentialSpec{}, cosine_profile(2.0, 1.0, 0.3)}) {
        for (double rho : {1.15, 1.22, 1.4}) {
            for (double th : {0.3, 2.0, 5.1}) {
                if (rho * spec.M(th) - 1.0 < 0.1) continue;
                const double h = 1e-6;
                const double d_rho = (w_eval(spec, rho + h, th) - w_eval(spec, rho - h, th)) / (2 * h);
                const double d_th = (w_eval(spec, rho, th + h) - w_eval(spec, rho, th - h)) / (2 * h);
                const auto g = w_grad(spec, rho, th);
                EXPECT_NEAR(g[0], d_rho, 1e-6 * (1.0 + std::fabs(d_rho)));
                EXPECT_NEAR(g[1], d_th, 1e-6 * (1.0 + std::fabs(d_th)));
            }
        }
    }
}

TEST(Planar, VanishesOnClosedDiskAndUnderflowsCleanly) {
    const PotentialSpec spec;
    for (double rho : {0.0, 0.5, 1.0}) {
        EXPECT_EQ(w_eval(spec, rho, 1.0), 0.0);
        const auto g = w_grad(spec, rho, 1.0);
        EXPECT_EQ(g[0], 0.0);
        EXPECT_EQ(g[1], 0.0);
    }
    const double w = w_eval(spec, 1.0 + 1e-4, 0.7);
    EXPECT_EQ(w, 0.0);
    EXPECT_TRUE(std::isfinite(flow_field(spec, 1.0 + 1e-4, 0.7, true)[0]));
}

TEST(Planar, RejectsInvalidSpecsAndStarts) {
    PotentialSpec bad;
    bad.C = 0.0;
    EXPECT_THROW(validate(bad), ConfigError);
    PotentialSpec aperiodic;
    aperiodic.M = [](double th) { return 1.0 + 0.01 * th; };
    EXPECT_THROW(validate(aperiodic), ConfigError);
    EXPECT_THROW(integrate_and_classify(PotentialSpec{}, 1.6, 0.0, 10.0), ConfigError);
    EXPECT_THROW(integrate_and_classify(PotentialSpec{}, 1.2, 0.0, -1.0), ConfigError);
}

TEST(Planar, SpiralOrderingAndZeroLevel) {
    for (const auto& spec : {PotentialSpec{}, cosine_profile(3.0, 1.2, 0.25)}) {
        const auto chk = check_spiral_ordering(spec, 0.05, 200.0, 4000);
        EXPECT_TRUE(chk.ordering);
        EXPECT_LT(chk.max_abs_w, 1e-12 * spec.C);
    }
}

TEST(Planar, SpiralApproachesCircle) {
    const PotentialSpec spec;
    // At θ = 100 the l₂ gap is 1/θ = 0.01 up to rounding; l₁ is strictly inside.
    const auto l2 = spiral_levels(spec, 0, 100.0, 1e4, 3);
    const auto l1 = spiral_levels(spec, 1, 100.0, 100.0, 2);
    EXPECT_LE(l2.rho[0] - 1.0, 0.01 + 1e-15);
    EXPECT_LT(l1.rho[0] - 1.0, 0.01);
    EXPECT_LT(l2.rho[2] - 1.0, l2.rho[1] - 1.0);
    EXPECT_LT(l2.rho[2] - 1.0, 1.0001e-4);
    EXPECT_GT(l2.rho[2] - 1.0, 0.0);
}

// Sign changes of W along a radial ray inside 1 < ρM < 1.5 coincide one to one
// with the spiral radii ρ_k = (1 + 1/(θ + kπ))/M(θ).
TEST(Planar, RadialSignChangesAreSpiralCrossings) {
    for (const auto& spec : {PotentialSpec{}, cosine_profile(1.0, 1.0, 0.2)}) {
        for (double th : {0.4, 2.9, 4.4}) {
            const double m = spec.M(th);
            const double s_lo = 0.05, s_hi = 0.5;
            std::vector<double> crossings;
            const int n = 200000;
            double prev = w_eval(spec, (1.0 + s_lo) / m, th);
            double prev_r = (1.0 + s_lo) / m;
            for (int i = 1; i <= n; ++i) {
                const double r = (1.0 + s_lo + (s_hi - s_lo) * i / n) / m;
                const double w = w_eval(spec, r, th);
                if (prev * w < 0.0) crossings.push_back(0.5 * (prev_r + r));
                prev = w;
                prev_r = r;
            }
            std::vector<double> radii;
            for (int k = -10; k < 100; ++k) {
                const double u = th + k * kPi;
                if (u <= 0.0) continue;
                const double s = 1.0 / u;
                if (s > s_lo && s < s_hi) radii.push_back((1.0 + s) / m);
            }
            std::sort(radii.begin(), radii.end());
            ASSERT_EQ(crossings.size(), radii.size());
            for (std::size_t k = 0; k < radii.size(); ++k) EXPECT_NEAR(crossings[k], radii[k], 1e-5);
        }
    }
}

TEST(Planar, StartInsideDiskIsPoint) {
    const auto tr = integrate_and_classify(PotentialSpec{}, 0.5, 1.0, 50.0);
    EXPECT_EQ(tr.classification, OmegaClass::point);
    EXPECT_DOUBLE_EQ(tr.winding, 0.0);
}

TEST(Planar, LyapunovNonincreasingAlongFan) {
    const PotentialSpec spec;
    const auto fan = fan_experiment(spec, 1.3, 16, 200.0);
    ASSERT_EQ(fan.trajectories.size(), 16u);
    for (const auto& tr : fan.trajectories) {
        EXPECT_LE(tr.max_w_increase, 1e-12);
        EXPECT_GT(tr.samples.size(), 2u);
    }
}

// Forward integration from a generic start leaves the annulus: the ridge
// carrying the trapped orbit repels. Fan starts 6 and 7 fall on opposite sides.
TEST(Planar, FanStartsOnEitherSideOfTrappedOrbit) {
    const PotentialSpec spec;
    const auto a = integrate_and_classify(spec, 1.3, fan_angle(6), 200.0);
    const auto b = integrate_and_classify(spec, 1.3, fan_angle(7), 200.0);
    double min_a = 2.0, min_b = 2.0;
    for (const auto& s : a.samples) min_a = std::min(min_a, s.rho);
    for (const auto& s : b.samples) min_b = std::min(min_b, s.rho);
    EXPECT_LT(min_a, 1.2);
    EXPECT_GT(min_b, 1.25);
    EXPECT_TRUE(a.escaped);
    EXPECT_TRUE(b.escaped);
    const auto orbit = construct_trapped_orbit(spec, 1.3);
    EXPECT_GT(orbit.theta0, fan_angle(6));
    EXPECT_LT(orbit.theta0, fan_angle(7));
}

TEST(Planar, RawAndRescaledOrbitsCoincide) {
    const PotentialSpec spec;
    IntegrateOptions opt;
    opt.exit_gap = 0.31;
    const auto rescaled = integrate_and_classify(spec, 1.3, fan_angle(6), 200.0, opt);
    opt.rescaled = false;
    const auto raw = integrate_and_classify(spec, 1.3, fan_angle(6), 1e6, opt);
    EXPECT_GT(raw.end().tau, 10.0 * rescaled.end().tau);
    EXPECT_LT(orbit_hausdorff(rescaled, raw, 1.1, 1.3), 1e-4);
}

TEST(Planar, TrappedOrbitWindsOntoCircle) {
    const PotentialSpec spec;
    const auto orbit = construct_trapped_orbit(spec, 1.3);
    const auto& tr = orbit.trajectory;
    EXPECT_NEAR(tr.start().rho, 1.3, 1e-12);
    EXPECT_EQ(tr.classification, OmegaClass::circle);
    EXPECT_LE(tr.max_w_increase, 0.0);
    for (std::size_t k = 1; k < tr.samples.size(); ++k) {
        ASSERT_LT(tr.samples[k].rho, tr.samples[k - 1].rho);
        ASSERT_GT(tr.samples[k].tau, tr.samples[k - 1].tau);
    }
    const auto first = truncate(spec, tr, 2000.0);
    const auto doubled = truncate(spec, tr, 4000.0);
    EXPECT_EQ(first.classification, OmegaClass::circle);
    EXPECT_GT(first.winding, 2.0);
    EXPECT_GT(doubled.winding, first.winding);
    EXPECT_LT(doubled.end().rho, first.end().rho);
}

TEST(Planar, TrappedStartAgreesWithForwardShooting) {
    const PotentialSpec spec;
    const auto coarse = construct_trapped_orbit(spec, 1.3);
    TrappedOrbitOptions fine;
    fine.dtheta = 0.005;
    const auto refined = construct_trapped_orbit(spec, 1.3, fine);
    EXPECT_LT(std::fabs(coarse.theta0 - refined.theta0), 1e-4);
    const double shot = shoot_trapped_start(spec, 1.3, fan_angle(6), fan_angle(7));
    EXPECT_LT(std::fabs(refined.theta0 - shot), 1e-4);
}

TEST(Planar, TrappedOrbitWithAngularProfile) {
    const auto spec = cosine_profile(1.0, 1.0, 0.1);
    const auto orbit = construct_trapped_orbit(spec, 1.3);
    EXPECT_EQ(orbit.trajectory.classification, OmegaClass::circle);
    EXPECT_LE(orbit.trajectory.max_w_increase, 1e-15);
    const double shot = shoot_trapped_start(spec, 1.3, orbit.theta0 - 0.05, orbit.theta0 + 0.05);
    EXPECT_LT(std::fabs(orbit.theta0 - shot), 1e-4);
}

TEST(Planar, ExportsTrajectoryAndClassification) {
    const auto tr = integrate_and_classify(PotentialSpec{}, 1.3, 0.0, 20.0);
    const auto dir = std::filesystem::temp_directory_path() / "robinwave_planar_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "traj.csv").string();
    write_trajectory_csv(path, tr);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "tau,rho,theta_total,W");
    const auto j = classification_json(tr);
    EXPECT_EQ(j.at("class"), "undetermined");
    EXPECT_TRUE(j.contains("winding"));
    EXPECT_TRUE(j.contains("final_rho"));
    std::filesystem::remove_all(dir);
}
