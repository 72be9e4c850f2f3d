#pragma once

// Independent shooting oracles for two-point Robin problems on [0, L].
// Built on Boost.Odeint and Boost.Math root finding so they share no code
// with the library under test.

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <vector>

namespace oracle {

/// Roots μ² of (1 - μ²) sin(μL) + 2μ cos(μL) = 0, i.e. eigenvalues of -u'' = μ²u
/// with -u'(0) + u(0) = 0 and u'(L) + u(L) = 0, ascending.
inline std::vector<double> robin_interval_eigenvalues(double length, int count) {
    const auto f = [length](double mu) {
        return (1.0 - mu * mu) * std::sin(mu * length) + 2.0 * mu * std::cos(mu * length);
    };
    std::vector<double> out;
    const double step = 1e-3 / length;
    double lo = step;
    double f_lo = f(lo);
    while (static_cast<int>(out.size()) < count) {
        const double hi = lo + step;
        const double f_hi = f(hi);
        if (f_lo == 0.0 || f_lo * f_hi < 0.0) {
            boost::math::tools::eps_tolerance<double> tol(52);
            std::uintmax_t iters = 200;
            const auto r = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, iters);
            const double mu = 0.5 * (r.first + r.second);
            out.push_back(mu * mu);
        }
        lo = hi;
        f_lo = f_hi;
    }
    return out;
}

using State = std::array<double, 2>;

/// Shoots -u'' + f(u) = 0 from u(0) = a, u'(0) = a (left Robin law) and
/// returns the right Robin defect u'(L) + u(L); `profile` receives samples.
template <typename Source>
double robin_shoot(Source f, double a, double length, std::vector<double>* profile = nullptr, int samples = 0) {
    namespace ode = boost::numeric::odeint;
    State y{a, a};
    const auto rhs = [&f](const State& s, State& d, double) {
        d[0] = s[1];
        d[1] = f(s[0]);
    };
    auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
    if (profile) {
        profile->assign(1, a);
        for (int k = 1; k < samples; ++k) {
            const double x0 = length * (k - 1) / (samples - 1);
            const double x1 = length * k / (samples - 1);
            ode::integrate_adaptive(stepper, rhs, y, x0, x1, 1e-4);
            profile->push_back(y[0]);
        }
    } else {
        ode::integrate_adaptive(stepper, rhs, y, 0.0, length, 1e-4);
    }
    return y[1] + y[0];
}

/// Initial values a > 0 of the nontrivial solutions of -u'' - λu + u³ = 0 with
/// Robin conditions. The maximum principle bounds |u| ≤ √λ.
inline std::vector<double> chafee_positive_shots(double lambda, double length = 1.0) {
    const auto f = [lambda](double u) { return -lambda * u + u * u * u; };
    const double top = std::sqrt(lambda);
    std::vector<double> roots;
    constexpr int scan = 4000;
    double lo = 1e-6 * top;
    double d_lo = robin_shoot(f, lo, length);
    for (int k = 1; k <= scan; ++k) {
        const double hi = top * k / scan;
        const double d_hi = robin_shoot(f, hi, length);
        if (d_lo * d_hi < 0.0) {
            boost::math::tools::eps_tolerance<double> tol(45);
            std::uintmax_t iters = 200;
            const auto r = boost::math::tools::toms748_solve([&](double a) { return robin_shoot(f, a, length); },
                                                             lo, hi, d_lo, d_hi, tol, iters);
            roots.push_back(0.5 * (r.first + r.second));
        }
        lo = hi;
        d_lo = d_hi;
    }
    return roots;
}

/// Number of solutions (including 0 and the ± pairs) of the Chafee-Infante
/// Robin problem on [0, L].
inline int chafee_solution_count(double lambda, double length = 1.0) {
    return 1 + 2 * static_cast<int>(chafee_positive_shots(lambda, length).size());
}

}  // namespace oracle
