#pragma once

// Model planar gradient flow ξ̇ = -∇W for
//   W(ρ, θ) = C exp(-1/s) sin(1/s - θ),  s = ρM(θ) - 1 > 0,   W = 0 otherwise,
// its spiral zero set, ω-limit classification of trajectories, and a
// construction of the orbit that winds onto the circle ρM = 1.
//
// The flow is integrated after multiplying the vector field by e^{1/s}, a
// positive factor that changes the time parametrisation but not the orbits.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "robinwave/error.hpp"
#include "robinwave/io.hpp"
#include "robinwave/specfun.hpp"

namespace robinwave::planar {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct PotentialSpec {
    double C = 1.0;
    std::function<double(double)> M = [](double) { return 1.0; };
    std::function<double(double)> dM = [](double) { return 0.0; };
};

inline void validate(const PotentialSpec& spec) {
    if (!(spec.C > 0.0)) throw ConfigError("planar: C must be positive");
    for (int k = 0; k < 256; ++k) {
        const double th = kTwoPi * k / 256.0;
        const double m = spec.M(th);
        if (!(m > 0.0)) throw ConfigError("planar: M must be positive");
        if (std::fabs(m - spec.M(th + kTwoPi)) >= 1e-12) throw ConfigError("planar: M must be 2π-periodic");
    }
}

/// M(θ) = m0 (1 + a cos θ).
inline PotentialSpec cosine_profile(double C, double m0, double a) {
    if (!(m0 > 0.0) || !(std::fabs(a) < 1.0)) throw ConfigError("planar: cosine profile needs m0 > 0, |a| < 1");
    PotentialSpec spec;
    spec.C = C;
    spec.M = [m0, a](double th) { return m0 * (1.0 + a * std::cos(th)); };
    spec.dM = [m0, a](double th) { return -m0 * a * std::sin(th); };
    return spec;
}

namespace detail {

// exp(-1/s) is below the smallest normal double once 1/s > 708.
inline constexpr double kFlatLimit = 708.0;

inline double flat(double s) { return 1.0 / s > kFlatLimit ? 0.0 : std::exp(-1.0 / s); }

}  // namespace detail

inline double w_eval(const PotentialSpec& spec, double rho, double theta) {
    const double s = rho * spec.M(theta) - 1.0;
    if (s <= 0.0) return 0.0;
    const double e = detail::flat(s);
    if (e == 0.0) return 0.0;
    return spec.C * e * std::sin(1.0 / s - theta);
}

/// (∂ρW, ∂θW); (0, 0) on and inside the circle ρM = 1.
inline std::array<double, 2> w_grad(const PotentialSpec& spec, double rho, double theta) {
    const double m = spec.M(theta);
    const double s = rho * m - 1.0;
    if (s <= 0.0) return {0.0, 0.0};
    const double e = detail::flat(s);
    if (e == 0.0) return {0.0, 0.0};
    const double psi = 1.0 / s - theta;
    const double sn = std::sin(psi);
    const double cs = std::cos(psi);
    const double s2 = s * s;
    return {spec.C * e * (m / s2) * (sn - cs), spec.C * e * (-cs + (rho * spec.dM(theta) / s2) * (sn - cs))};
}

/// Polar gradient flow (ρ̇, θ̇) = (-∂ρW, -ρ⁻²∂θW), optionally multiplied by e^{1/s}.
inline std::array<double, 2> flow_field(const PotentialSpec& spec, double rho, double theta, bool rescaled) {
    const double m = spec.M(theta);
    const double s = rho * m - 1.0;
    if (s <= 0.0) return {0.0, 0.0};
    const double psi = 1.0 / s - theta;
    const double sn = std::sin(psi);
    const double cs = std::cos(psi);
    const double s2 = s * s;
    const double scale = rescaled ? spec.C : spec.C * detail::flat(s);
    const double g_rho = scale * (m / s2) * (sn - cs);
    const double g_theta = scale * (-cs + (rho * spec.dM(theta) / s2) * (sn - cs));
    return {-g_rho, -g_theta / (rho * rho)};
}

struct PlanarSample {
    double tau = 0.0;
    double rho = 0.0;
    double theta = 0.0;  // unwrapped
    double W = 0.0;
};

enum class OmegaClass { point, circle, undetermined };

inline std::string omega_class_name(OmegaClass c) {
    switch (c) {
        case OmegaClass::point: return "point";
        case OmegaClass::circle: return "circle";
        case OmegaClass::undetermined: return "undetermined";
    }
    return "undetermined";
}

struct PlanarTrajectory {
    std::vector<PlanarSample> samples;
    OmegaClass classification = OmegaClass::undetermined;
    double winding = 0.0;
    bool escaped = false;        // left the annulus ρM - 1 > exit_gap
    double max_w_increase = 0.0;  // largest W(k+1) - W(k) over samples

    [[nodiscard]] const PlanarSample& start() const { return samples.front(); }
    [[nodiscard]] const PlanarSample& end() const { return samples.back(); }
};

/// Carries the partial trajectory when the step size underflows.
class StepUnderflowError : public NumericalError {
public:
    StepUnderflowError(const std::string& what, PlanarTrajectory partial)
        : NumericalError(what), trajectory(std::move(partial)) {}
    PlanarTrajectory trajectory;
};

struct ClassifyOptions {
    double circle_tol = 1e-3;
    double min_winding = 2.0;
    double point_tol = 1e-10;
};

/// Classification of the sampled ω-limit behaviour:
///   circle: final |ρ - 1/M(θ)| < circle_tol and winding > min_winding;
///   point: displacement over the last 10% of the τ-span < point_tol with
///          ρ bounded away from 1/M;
///   undetermined otherwise.
inline void classify(const PotentialSpec& spec, PlanarTrajectory& tr, const ClassifyOptions& opt = {}) {
    if (tr.samples.empty()) throw DataError("classify: empty trajectory");
    const auto& last = tr.samples.back();
    tr.winding = (last.theta - tr.samples.front().theta) / kTwoPi;
    tr.max_w_increase = 0.0;
    for (std::size_t k = 1; k < tr.samples.size(); ++k) {
        tr.max_w_increase = std::max(tr.max_w_increase, tr.samples[k].W - tr.samples[k - 1].W);
    }
    const double gap = std::fabs(last.rho - 1.0 / spec.M(last.theta));
    if (gap < opt.circle_tol && tr.winding > opt.min_winding) {
        tr.classification = OmegaClass::circle;
        return;
    }
    const double t0 = tr.samples.front().tau;
    const double cut = last.tau - 0.1 * (last.tau - t0);
    double disp = 0.0;
    for (const auto& s : tr.samples) {
        if (s.tau < cut) continue;
        const double dx = s.rho * std::cos(s.theta) - last.rho * std::cos(last.theta);
        const double dy = s.rho * std::sin(s.theta) - last.rho * std::sin(last.theta);
        disp = std::max(disp, std::hypot(dx, dy));
    }
    if (!tr.escaped && disp < opt.point_tol && gap > opt.circle_tol) {
        tr.classification = OmegaClass::point;
        return;
    }
    tr.classification = OmegaClass::undetermined;
}

struct IntegrateOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double exit_gap = 1.0;     // stop once ρM - 1 exceeds this
    double start_gap = 0.5;    // δ: starts need ρ₀M ∈ (1, 1 + δ) unless inside the circle
    bool rescaled = true;
    double max_sample_dtau = std::numeric_limits<double>::infinity();
    ClassifyOptions classify{};
};

/// Adaptive Dormand-Prince 5(4) integration of the (rescaled) gradient flow
/// from (ρ₀, θ₀) up to τ_max, followed by classification.
inline PlanarTrajectory integrate_and_classify(const PotentialSpec& spec, double rho0, double theta0, double tau_max,
                                               const IntegrateOptions& opt = {}) {
    validate(spec);
    if (!(rho0 >= 0.0) || !std::isfinite(theta0)) throw ConfigError("planar: invalid start");
    if (!(tau_max > 0.0)) throw ConfigError("planar: tau_max must be positive");
    const double gap0 = rho0 * spec.M(theta0) - 1.0;
    if (gap0 >= opt.start_gap) throw ConfigError("planar: start outside the annulus 1 < ρM < 1 + δ");

    using State = std::array<double, 2>;
    const auto f = [&](const State& y) { return flow_field(spec, y[0], y[1], opt.rescaled); };
    // Dormand-Prince tableau.
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                            a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                            b6 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    PlanarTrajectory tr;
    State y{rho0, theta0};
    double tau = 0.0;
    tr.samples.push_back({tau, y[0], y[1], w_eval(spec, y[0], y[1])});
    double h = 1e-3;
    double last_sample = 0.0;
    State k1 = f(y);
    while (tau < tau_max) {
        if (y[0] * spec.M(y[1]) - 1.0 > opt.exit_gap) {
            tr.escaped = true;
            break;
        }
        if (k1[0] == 0.0 && k1[1] == 0.0) {
            // Identically zero field: the state is an equilibrium.
            tau = tau_max;
            tr.samples.push_back({tau, y[0], y[1], w_eval(spec, y[0], y[1])});
            break;
        }
        h = std::min(h, tau_max - tau);
        if (h < 1e-14 * (1.0 + tau)) {
            classify(spec, tr, opt.classify);
            std::ostringstream msg;
            msg << "planar: step size underflow at tau = " << tau << ", rho = " << y[0];
            throw StepUnderflowError(msg.str(), std::move(tr));
        }
        const auto at = [&](double c1, const State& q1, double c2 = 0, const State& q2 = {}, double c3 = 0,
                            const State& q3 = {}, double c4 = 0, const State& q4 = {}, double c5 = 0,
                            const State& q5 = {}) {
            State z;
            for (int i = 0; i < 2; ++i) z[i] = y[i] + h * (c1 * q1[i] + c2 * q2[i] + c3 * q3[i] + c4 * q4[i] + c5 * q5[i]);
            return z;
        };
        const State k2 = f(at(a21, k1));
        const State k3 = f(at(a31, k1, a32, k2));
        const State k4 = f(at(a41, k1, a42, k2, a43, k3));
        const State k5 = f(at(a51, k1, a52, k2, a53, k3, a54, k4));
        const State k6 = f(at(a61, k1, a62, k2, a63, k3, a64, k4, a65, k5));
        State yn;
        for (int i = 0; i < 2; ++i) yn[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        const State k7 = f(yn);
        double err = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = opt.atol + opt.rtol * std::max(std::fabs(y[i]), std::fabs(yn[i]));
            err = std::max(err, std::fabs(ei) / sc);
        }
        if (!std::isfinite(err)) err = 1e10;
        if (err <= 1.0) {
            tau += h;
            y = yn;
            k1 = k7;
            if (!std::isfinite(opt.max_sample_dtau) || tau - last_sample >= opt.max_sample_dtau || tau >= tau_max) {
                tr.samples.push_back({tau, y[0], y[1], w_eval(spec, y[0], y[1])});
                last_sample = tau;
            }
        }
        const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= factor;
    }
    if (tr.samples.back().tau != tau) tr.samples.push_back({tau, y[0], y[1], w_eval(spec, y[0], y[1])});
    classify(spec, tr, opt.classify);
    return tr;
}

struct FanResult {
    std::vector<PlanarTrajectory> trajectories;
    int circle_count = 0;
    int point_count = 0;
    int undetermined_count = 0;
};

/// Starts at (ρ₀, 2πk/n), k = 0..n-1.
inline FanResult fan_experiment(const PotentialSpec& spec, double rho0, int n, double tau_max,
                                const IntegrateOptions& opt = {}) {
    if (n < 1) throw ConfigError("fan_experiment: n must be >= 1");
    FanResult out;
    for (int k = 0; k < n; ++k) {
        auto tr = integrate_and_classify(spec, rho0, kTwoPi * k / n, tau_max, opt);
        switch (tr.classification) {
            case OmegaClass::circle: ++out.circle_count; break;
            case OmegaClass::point: ++out.point_count; break;
            case OmegaClass::undetermined: ++out.undetermined_count; break;
        }
        out.trajectories.push_back(std::move(tr));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trapped orbit. Along the orbit that winds onto ρM = 1 the phase
// ψ = 1/s - θ stays on a ridge where sin ψ ≈ cos ψ; forward in time this
// ridge repels super-exponentially, so no forward integration from a generic
// start can follow it. Backward in time the ridge attracts. The orbit is
// therefore built by integrating the orbit equation dρ/dθ = ρ̇/θ̇ backward
// in θ with implicit Euler (one bracketed scalar solve per step), starting
// on the ridge close to the circle and stopping on ρ = ρ_target.

struct TrappedOrbitOptions {
    double s_end = 2e-4;     // closeness ρM - 1 at the inner end
    double dtheta = 0.01;    // implicit Euler step in θ
    double sample_dtheta = 0.05;
};

struct TrappedOrbit {
    PlanarTrajectory trajectory;  // forward in τ, starting on ρ = ρ_target
    double theta0 = 0.0;          // start angle reduced to [0, 2π)
    int steps = 0;
};

namespace detail {

// dρ/dθ along the rescaled flow.
inline double orbit_slope(const PotentialSpec& spec, double rho, double theta) {
    const auto v = flow_field(spec, rho, theta, true);
    return v[0] / v[1];
}

// dτ/dθ along the rescaled flow.
inline double orbit_time_rate(const PotentialSpec& spec, double rho, double theta) {
    return 1.0 / flow_field(spec, rho, theta, true)[1];
}

}  // namespace detail

inline TrappedOrbit construct_trapped_orbit(const PotentialSpec& spec, double rho_target,
                                            const TrappedOrbitOptions& opt = {}) {
    validate(spec);
    const double pi = std::numbers::pi;
    for (int k = 0; k < 64; ++k) {
        if (!(rho_target * spec.M(kTwoPi * k / 64.0) > 1.0)) {
            throw ConfigError("trapped orbit: target circle must lie outside ρM = 1");
        }
    }
    // Inner end on the ridge ψ = π/4: 1/s_end = θ_end + π/4.
    double theta = 1.0 / opt.s_end - 0.25 * pi;
    double s = opt.s_end;
    const auto rho_of = [&](double ss, double th) { return (1.0 + ss) / spec.M(th); };
    // ds/dθ along the orbit.
    const auto slope = [&](double ss, double th) {
        const double r = rho_of(ss, th);
        return spec.M(th) * detail::orbit_slope(spec, r, th) + r * spec.dM(th);
    };

    // Implicit Euler backward in θ on s = ρM - 1: s_new = s_old - Δθ · slope(s_new, θ_new).
    // The root lies near the ridge ψ = π/4 (mod 2π); the bracket grows around
    // it while θ̇ stays positive at both ends, where the slope is monotone.
    const auto solve_step = [&](double s_old, double theta_new, double dth) {
        const double center = 0.25 * pi + kTwoPi * std::round((1.0 / s_old - theta_new - 0.25 * pi) / kTwoPi);
        const auto s_of_psi = [&](double psi) { return 1.0 / (psi + theta_new); };
        const auto g = [&](double ss) { return ss - s_old + dth * slope(ss, theta_new); };
        const auto forward = [&](double ss) {
            return flow_field(spec, rho_of(ss, theta_new), theta_new, true)[1] > 0.0;
        };
        for (double w = 1e-10; w < 0.75 * pi; w *= 2.0) {
            const double lo = s_of_psi(center + w);  // larger ψ ⇒ smaller s
            const double hi = s_of_psi(center - w);
            if (!(lo < hi)) continue;
            if (!forward(lo) || !forward(hi)) break;
            const double g_lo = g(lo);
            const double g_hi = g(hi);
            if (g_lo < 0.0 && g_hi > 0.0) {
                return specfun::find_root(g, specfun::RootBracket{lo, hi, g_lo, g_hi}, 1e-17 + 1e-15 * hi);
            }
        }
        throw NumericalError("trapped orbit: implicit step lost its bracket");
    };

    std::vector<PlanarSample> rev;
    double tau = 0.0;  // accumulated backward; shifted at the end
    double rho = rho_of(s, theta);
    rev.push_back({tau, rho, theta, w_eval(spec, rho, theta)});
    double next_sample = theta - opt.sample_dtheta;
    int steps = 0;
    bool done = false;
    while (!done) {
        double dth = opt.dtheta;
        double s_new = solve_step(s, theta - dth, dth);
        if (rho_of(s_new, theta - dth) >= rho_target) {
            // Shorten the final step so it ends exactly on ρ = ρ_target.
            double a = 0.0, b = dth;
            for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
                const double mid = 0.5 * (a + b);
                const double sm = solve_step(s, theta - mid, mid);
                (rho_of(sm, theta - mid) < rho_target ? a : b) = mid;
            }
            dth = b;
            s_new = solve_step(s, theta - dth, dth);
            done = true;
        }
        const double theta_new = theta - dth;
        const double rho_new = done ? rho_target : rho_of(s_new, theta_new);
        tau -= 0.5 * dth *
               (detail::orbit_time_rate(spec, rho, theta) + detail::orbit_time_rate(spec, rho_new, theta_new));
        s = s_new;
        rho = rho_new;
        theta = theta_new;
        ++steps;
        if (theta <= next_sample || done) {
            rev.push_back({tau, rho, theta, w_eval(spec, rho, theta)});
            next_sample = theta - opt.sample_dtheta;
        }
    }

    TrappedOrbit out;
    out.steps = steps;
    const double tau0 = rev.back().tau;
    const double shift = kTwoPi * std::floor(rev.back().theta / kTwoPi);
    for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
        out.trajectory.samples.push_back({it->tau - tau0, it->rho, it->theta - shift, it->W});
    }
    out.theta0 = out.trajectory.samples.front().theta;
    classify(spec, out.trajectory);
    return out;
}

/// Prefix of a trajectory up to τ_max, reclassified.
inline PlanarTrajectory truncate(const PotentialSpec& spec, const PlanarTrajectory& tr, double tau_max) {
    PlanarTrajectory out;
    for (const auto& s : tr.samples) {
        if (s.tau > tau_max) break;
        out.samples.push_back(s);
    }
    if (out.samples.empty()) throw DataError("truncate: tau_max before the first sample");
    classify(spec, out);
    return out;
}

/// Start angle of the trapped orbit on ρ = ρ₀ located by forward shooting:
/// bisection in θ₀ on whether the trajectory dips inward (min (ρM - 1) below
/// 3/4 of its initial value) before escaping. [lo, hi] must separate the two
/// behaviours, as adjacent fan starts around the trapped orbit do.
inline double shoot_trapped_start(const PotentialSpec& spec, double rho0, double lo, double hi, double tol = 1e-12,
                                  double tau_max = 1e3) {
    IntegrateOptions opt;
    opt.rtol = 1e-12;
    opt.atol = 1e-14;
    const auto dips = [&](double th) {
        const auto tr = integrate_and_classify(spec, rho0, th, tau_max, opt);
        const double gap0 = rho0 * spec.M(th) - 1.0;
        double min_gap = gap0;
        for (const auto& s : tr.samples) min_gap = std::min(min_gap, s.rho * spec.M(s.theta) - 1.0);
        return min_gap < 0.75 * gap0;
    };
    const bool dips_lo = dips(lo);
    if (dips_lo == dips(hi)) throw BracketError("shoot_trapped_start: endpoints behave alike");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (dips(mid) == dips_lo ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace detail {

using Polyline = std::vector<std::array<double, 2>>;

inline double point_to_polylines(double x, double y, const std::vector<Polyline>& pieces) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& poly : pieces) {
        best = std::min(best, std::hypot(x - poly[0][0], y - poly[0][1]));
        for (std::size_t k = 0; k + 1 < poly.size(); ++k) {
            const double ax = poly[k][0], ay = poly[k][1];
            const double dx = poly[k + 1][0] - ax, dy = poly[k + 1][1] - ay;
            const double len2 = dx * dx + dy * dy;
            const double t = len2 > 0.0 ? std::clamp(((x - ax) * dx + (y - ay) * dy) / len2, 0.0, 1.0) : 0.0;
            best = std::min(best, std::hypot(x - ax - t * dx, y - ay - t * dy));
        }
    }
    return best;
}

// Pieces of the orbit inside rho_lo ≤ ρ ≤ rho_hi in Cartesian coordinates,
// clipped at the window boundary by linear interpolation in (ρ, θ).
inline std::vector<Polyline> clip_to_annulus(const PlanarTrajectory& tr, double rho_lo, double rho_hi) {
    std::vector<Polyline> pieces;
    Polyline cur;
    const auto cart = [](double r, double th) { return std::array<double, 2>{r * std::cos(th), r * std::sin(th)}; };
    const auto inside = [&](double r) { return r >= rho_lo && r <= rho_hi; };
    for (std::size_t k = 0; k < tr.samples.size(); ++k) {
        const auto& s = tr.samples[k];
        if (k > 0) {
            const auto& p = tr.samples[k - 1];
            for (double edge : {rho_lo, rho_hi}) {
                if ((p.rho - edge) * (s.rho - edge) < 0.0) {
                    const double w = (edge - p.rho) / (s.rho - p.rho);
                    cur.push_back(cart(edge, p.theta + w * (s.theta - p.theta)));
                    if (!inside(s.rho) && !cur.empty()) {
                        pieces.push_back(std::move(cur));
                        cur.clear();
                    }
                }
            }
        }
        if (inside(s.rho)) cur.push_back(cart(s.rho, s.theta));
    }
    if (!cur.empty()) pieces.push_back(std::move(cur));
    return pieces;
}

}  // namespace detail

/// Symmetric Hausdorff distance between the parts of two orbits inside
/// rho_lo ≤ ρ ≤ rho_hi, measured against the polylines through the samples.
inline double orbit_hausdorff(const PlanarTrajectory& a, const PlanarTrajectory& b, double rho_lo, double rho_hi) {
    const auto pa = detail::clip_to_annulus(a, rho_lo, rho_hi);
    const auto pb = detail::clip_to_annulus(b, rho_lo, rho_hi);
    if (pa.empty() || pb.empty()) throw DataError("orbit_hausdorff: an orbit has no samples in the window");
    double h = 0.0;
    for (const auto& poly : pa)
        for (const auto& p : poly) h = std::max(h, detail::point_to_polylines(p[0], p[1], pb));
    for (const auto& poly : pb)
        for (const auto& p : poly) h = std::max(h, detail::point_to_polylines(p[0], p[1], pa));
    return h;
}

// ---------------------------------------------------------------------------
// Spiral zero set.

struct SpiralCurve {
    int k = 0;
    std::vector<double> theta;
    std::vector<double> rho;
    std::vector<double> W;
};

/// ρ solving 1/(ρM(θ) - 1) = θ + kπ on θ ∈ [lo, hi].
inline SpiralCurve spiral_levels(const PotentialSpec& spec, int k, double theta_lo, double theta_hi,
                                 int samples = 1000) {
    validate(spec);
    const double pi = std::numbers::pi;
    if (!(theta_lo + k * pi > 0.0) || !(theta_hi >= theta_lo) || samples < 2) {
        throw ConfigError("spiral_levels: need θ + kπ > 0 on the range");
    }
    SpiralCurve c;
    c.k = k;
    for (int i = 0; i < samples; ++i) {
        const double th = theta_lo + (theta_hi - theta_lo) * i / (samples - 1);
        const double r = (1.0 + 1.0 / (th + k * pi)) / spec.M(th);
        c.theta.push_back(th);
        c.rho.push_back(r);
        c.W.push_back(w_eval(spec, r, th));
    }
    return c;
}

struct SpiralCheck {
    bool ordering = true;     // l₂(θ) > l₁(θ) > l₂(θ + 2π) > 1/M(θ)
    double max_abs_w = 0.0;   // over every sample of the three curves
};

inline SpiralCheck check_spiral_ordering(const PotentialSpec& spec, double theta_lo, double theta_hi,
                                         int samples = 1000) {
    const auto l2 = spiral_levels(spec, 0, theta_lo, theta_hi, samples);
    const auto l1 = spiral_levels(spec, 1, theta_lo, theta_hi, samples);
    const auto l2_next = spiral_levels(spec, 2, theta_lo, theta_hi, samples);  // l₂(θ + 2π) at θ
    SpiralCheck out;
    for (int i = 0; i < samples; ++i) {
        const double inner = 1.0 / spec.M(l2.theta[i]);
        if (!(l2.rho[i] > l1.rho[i] && l1.rho[i] > l2_next.rho[i] && l2_next.rho[i] > inner)) out.ordering = false;
        out.max_abs_w = std::max({out.max_abs_w, std::fabs(l2.W[i]), std::fabs(l1.W[i]), std::fabs(l2_next.W[i])});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Export.

/// Trajectory CSV with columns tau, rho, theta_total, W.
inline void write_trajectory_csv(const std::string& path, const PlanarTrajectory& tr) {
    io::CsvWriter csv(path, {"tau", "rho", "theta_total", "W"});
    for (const auto& s : tr.samples) csv.row({s.tau, s.rho, s.theta, s.W});
    csv.close();
}

inline nlohmann::json classification_json(const PlanarTrajectory& tr) {
    return {{"start", {{"rho", tr.start().rho}, {"theta", tr.start().theta}}},
            {"class", omega_class_name(tr.classification)},
            {"winding", tr.winding},
            {"final_rho", tr.end().rho},
            {"escaped", tr.escaped}};
}

}  // namespace robinwave::planar
