#pragma once

// Interior sources f₀(x, s) and boundary dampings g(s).

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "robinwave/error.hpp"
#include "robinwave/grid.hpp"
#include "robinwave/specfun.hpp"

namespace robinwave {

using ParamMap = std::map<std::string, double>;

struct Source {
    std::string tag;
    std::function<double(Point)> lambda;
    std::function<double(Point, double)> eval;
    std::function<double(Point, double)> d1;
    std::function<double(Point, double)> d2;
    /// Closed-form antiderivative ∫₀ˢ f₀; empty when only quadrature is available.
    std::function<double(Point, double)> antiderivative;
};

struct Damping {
    std::string tag;
    std::function<double(double)> eval;
    std::function<double(double)> d1;
    double m1 = 0.0;
    double m2 = 0.0;
};

namespace detail {

// e^{-1/s²} is flushed to zero once it would underflow; the function and all
// of its derivatives vanish at s = 0.
inline const double kFlatCutoff = 1.0 / -std::log(std::numeric_limits<double>::min());

inline double flat(double s) {
    const double s2 = s * s;
    return s2 < kFlatCutoff ? 0.0 : std::exp(-1.0 / s2);
}

inline double param(const ParamMap& params, const std::string& key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

inline double require_param(const ParamMap& params, const std::string& key, const std::string& who) {
    const auto it = params.find(key);
    if (it == params.end()) throw ConfigError(who + ": missing parameter '" + key + "'");
    return it->second;
}

}  // namespace detail

/// f̂(s) = s e^{-1/s²}, the odd perturbation in the example-exp source.
inline double flat_perturbation(double s) { return s * detail::flat(s); }

/// Catalog: "example-exp" (λs - s e^{-1/s²}, λ > 1), "chafee-cubic"
/// (-λs + s³), "linear" (λs). Parameter: "lambda".
inline Source make_source(const std::string& tag, const ParamMap& params) {
    Source src;
    src.tag = tag;
    if (tag == "example-exp") {
        const double lam = detail::require_param(params, "lambda", "example-exp");
        if (!(lam > 1.0)) {
            std::ostringstream msg;
            msg << "example-exp requires lambda > 1, got " << lam;
            throw ConfigError(msg.str());
        }
        src.lambda = [lam](Point) { return lam; };
        src.eval = [lam](Point, double s) { return lam * s - s * detail::flat(s); };
        src.d1 = [lam](Point, double s) {
            const double e = detail::flat(s);
            if (e == 0.0) return lam;
            return lam - e * (1.0 + 2.0 / (s * s));
        };
        src.d2 = [](Point, double s) {
            const double e = detail::flat(s);
            if (e == 0.0) return 0.0;
            const double s3 = s * s * s;
            return e * (2.0 / s3 - 4.0 / (s3 * s * s));
        };
        // ∫₀ˢ t e^{-1/t²} dt = ½ Γ(-1, 1/s²).
        src.antiderivative = [lam](Point, double s) {
            if (s == 0.0) return 0.0;
            return 0.5 * lam * s * s - 0.5 * specfun::upper_gamma_m1(1.0 / (s * s));
        };
    } else if (tag == "chafee-cubic") {
        const double lam = detail::require_param(params, "lambda", "chafee-cubic");
        src.lambda = [lam](Point) { return lam; };
        src.eval = [lam](Point, double s) { return -lam * s + s * s * s; };
        src.d1 = [lam](Point, double s) { return -lam + 3.0 * s * s; };
        src.d2 = [](Point, double s) { return 6.0 * s; };
        src.antiderivative = [lam](Point, double s) { return -0.5 * lam * s * s + 0.25 * s * s * s * s; };
    } else if (tag == "linear") {
        const double lam = detail::require_param(params, "lambda", "linear");
        src.lambda = [lam](Point) { return lam; };
        src.eval = [lam](Point, double s) { return lam * s; };
        src.d1 = [lam](Point, double) { return lam; };
        src.d2 = [](Point, double) { return 0.0; };
        src.antiderivative = [lam](Point, double s) { return 0.5 * lam * s * s; };
    } else {
        throw ConfigError("unknown source tag '" + tag + "'");
    }
    return src;
}

/// Source from user-supplied callables; F₀ falls back to quadrature.
inline Source make_custom_source(std::function<double(Point, double)> f, std::function<double(Point, double)> df,
                                 std::function<double(Point, double)> d2f) {
    Source src;
    src.tag = "custom";
    src.lambda = [df](Point x) { return df(x, 0.0); };
    src.eval = std::move(f);
    src.d1 = std::move(df);
    src.d2 = std::move(d2f);
    return src;
}

namespace detail {

template <typename F>
double adaptive_simpson(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                        int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth <= 0) throw NumericalError("adaptive Simpson quadrature did not converge");
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// ∫_a^b f by adaptive Simpson with absolute tolerance `tol`.
template <typename F>
double integrate_simpson(F&& f, double a, double b, double tol = 1e-10, int max_depth = 50) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// F₀(x, s) = ∫₀ˢ f₀(x, t) dt.
inline double F0_eval(const Source& src, Point x, double s) {
    if (!std::isfinite(s)) throw DomainError("F0_eval: non-finite s");
    if (s == 0.0) return 0.0;
    if (src.antiderivative) return src.antiderivative(x, s);
    auto f = [&](double t) { return src.eval(x, t); };
    return integrate_simpson(f, 0.0, s, 1e-10);
}

namespace detail {

inline void verify_damping(const Damping& d) {
    std::ostringstream why;
    if (!(d.m1 > 0.0) || d.m2 < d.m1) {
        why << "damping '" << d.tag << "': bounds must satisfy 0 < m1 <= m2 (got " << d.m1 << ", " << d.m2 << ")";
        throw ConfigError(why.str());
    }
    if (std::fabs(d.eval(0.0)) > 1e-14) {
        why << "damping '" << d.tag << "': g(0) = " << d.eval(0.0) << " != 0";
        throw ConfigError(why.str());
    }
    constexpr int samples = 2001;
    double prev = d.eval(-10.0);
    for (int k = 0; k < samples; ++k) {
        const double s = -10.0 + 20.0 * k / (samples - 1);
        const double slope = d.d1(s);
        if (slope < d.m1 * (1.0 - 1e-12) || slope > d.m2 * (1.0 + 1e-12)) {
            why << "damping '" << d.tag << "': g'(" << s << ") = " << slope << " outside [" << d.m1 << ", " << d.m2
                << "]";
            throw ConfigError(why.str());
        }
        const double gs = d.eval(s);
        if (k > 0 && !(gs > prev)) {
            why << "damping '" << d.tag << "': g not increasing near s = " << s;
            throw ConfigError(why.str());
        }
        prev = gs;
    }
}

}  // namespace detail

/// Catalog: "linear" (g = k s, param "gain", default 1) and
/// "soft-saturating" (g = s + α tanh s, param "alpha", default ½).
inline Damping make_damping(const std::string& tag, const ParamMap& params = {}) {
    Damping d;
    d.tag = tag;
    if (tag == "linear") {
        const double k = detail::param(params, "gain", 1.0);
        d.eval = [k](double s) { return k * s; };
        d.d1 = [k](double) { return k; };
        d.m1 = k;
        d.m2 = k;
    } else if (tag == "soft-saturating") {
        const double alpha = detail::param(params, "alpha", 0.5);
        if (alpha < 0.0) throw ConfigError("soft-saturating damping requires alpha >= 0");
        d.eval = [alpha](double s) { return s + alpha * std::tanh(s); };
        d.d1 = [alpha](double s) {
            const double sech = 1.0 / std::cosh(s);
            return 1.0 + alpha * sech * sech;
        };
        d.m1 = 1.0;
        d.m2 = 1.0 + alpha;
    } else {
        throw ConfigError("unknown damping tag '" + tag + "'");
    }
    detail::verify_damping(d);
    return d;
}

inline Damping make_custom_damping(std::function<double(double)> g, std::function<double(double)> dg, double m1,
                                   double m2) {
    Damping d{"custom", std::move(g), std::move(dg), m1, m2};
    detail::verify_damping(d);
    return d;
}

/// Damping without the (A3) validation, for conservative-limit experiments.
inline Damping make_unchecked_damping(std::function<double(double)> g, std::function<double(double)> dg) {
    return Damping{"custom-unchecked", std::move(g), std::move(dg), 0.0, 0.0};
}

struct AssumptionEntry {
    std::string name;
    bool pass = false;
    double value = 0.0;  // A1: C estimate; A2: liminf estimate; A3: sampled m1
    double extra = 0.0;  // A2: threshold -μ₀; A3: sampled m2
    std::string detail;
};

struct AssumptionReport {
    AssumptionEntry a1;
    AssumptionEntry a2;
    AssumptionEntry a3;
    [[nodiscard]] bool all_pass() const { return a1.pass && a2.pass && a3.pass; }
};

/// Sampled checks of the growth and monotonicity hypotheses at a
/// representative point x (sources in the catalog are x-independent).
inline AssumptionReport check_assumptions(const Source& src, const Damping& damp, double s_lo, double s_hi, double mu0,
                                          Point x = {}) {
    if (!(s_lo < s_hi) || !std::isfinite(s_lo) || !std::isfinite(s_hi)) {
        throw ConfigError("check_assumptions: s_range must be finite and ordered");
    }
    if (!(mu0 > 0.0)) throw ConfigError("check_assumptions: mu0 must be positive");
    AssumptionReport rep;

    // (A1): f₀(x,0) = 0 and |f₀''| ≤ C(1 + |s|). The tail samples detect
    // superlinear growth of f₀'' that a bounded window would hide.
    {
        constexpr int samples = 4001;
        double c_range = 0.0;
        for (int k = 0; k < samples; ++k) {
            const double s = s_lo + (s_hi - s_lo) * k / (samples - 1);
            c_range = std::max(c_range, std::fabs(src.d2(x, s)) / (1.0 + std::fabs(s)));
        }
        const auto tail = [&](double mag) {
            return std::max(std::fabs(src.d2(x, mag)), std::fabs(src.d2(x, -mag))) / (1.0 + mag);
        };
        const double c_100 = tail(1e2);
        const double c_1000 = tail(1e3);
        const double f_zero = src.eval(x, 0.0);
        rep.a1.name = "A1";
        rep.a1.value = std::max({c_range, c_100, c_1000});
        const bool bounded = std::isfinite(c_1000) && c_1000 <= 1.5 * std::max({c_100, c_range}) + 1e-12;
        rep.a1.pass = std::fabs(f_zero) <= 1e-14 && bounded;
        std::ostringstream d;
        d << "f0(0)=" << f_zero << ", C(window)=" << c_range << ", C(1e2)=" << c_100 << ", C(1e3)=" << c_1000;
        rep.a1.detail = d.str();
    }

    // (A2): liminf_{|s|→∞} f₀/s ≥ -c with c < μ₀.
    {
        double liminf = std::numeric_limits<double>::infinity();
        for (double e = 2.0; e <= 3.0 + 1e-12; e += 0.25) {
            const double s = std::pow(10.0, e);
            liminf = std::min({liminf, src.eval(x, s) / s, src.eval(x, -s) / -s});
        }
        rep.a2.name = "A2";
        rep.a2.value = liminf;
        rep.a2.extra = -mu0;
        rep.a2.pass = liminf > -mu0;
        std::ostringstream d;
        d << "liminf f0/s ~ " << liminf << " vs -mu0 = " << -mu0;
        rep.a2.detail = d.str();
    }

    // (A3): g(0) = 0, increasing, 0 < m1 ≤ g' ≤ m2.
    {
        constexpr int samples = 2001;
        double m1 = std::numeric_limits<double>::infinity();
        double m2 = -std::numeric_limits<double>::infinity();
        bool increasing = true;
        double prev = damp.eval(-10.0);
        for (int k = 0; k < samples; ++k) {
            const double s = -10.0 + 20.0 * k / (samples - 1);
            const double slope = damp.d1(s);
            m1 = std::min(m1, slope);
            m2 = std::max(m2, slope);
            const double gs = damp.eval(s);
            if (k > 0 && !(gs > prev)) increasing = false;
            prev = gs;
        }
        rep.a3.name = "A3";
        rep.a3.value = m1;
        rep.a3.extra = m2;
        rep.a3.pass = std::fabs(damp.eval(0.0)) <= 1e-14 && increasing && m1 > 0.0 && std::isfinite(m2);
        std::ostringstream d;
        d << "g(0)=" << damp.eval(0.0) << ", sampled m1=" << m1 << ", m2=" << m2;
        rep.a3.detail = d.str();
    }
    return rep;
}

}  // namespace robinwave
