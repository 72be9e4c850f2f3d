#pragma once

// Bessel J0/J1, the exponential integral E1 and the upper incomplete gamma
// function at order -1, plus a bracketing root finder.

#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <sstream>

#include "robinwave/error.hpp"

namespace robinwave::specfun {

struct RootBracket {
    double lo;
    double hi;
    double f_lo;
    double f_hi;
};

namespace detail {

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        std::ostringstream msg;
        msg << what << ": non-finite argument " << x;
        throw DomainError(msg.str());
    }
}

// Σ (-1)^k (x/2)^(2k+order) / (k! (k+order)!) with Neumaier summation,
// stopped once the term falls below 1e-17 of the partial sum.
inline double bessel_series(int order, double x) {
    const long double q = static_cast<long double>(x) * x / 4.0L;
    long double term = order == 0 ? 1.0L : static_cast<long double>(x) / 2.0L;
    long double sum = term;
    long double comp = 0.0L;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (static_cast<long double>(k) * (k + order));
        const long double t = sum + term;
        if (std::fabs(sum) >= std::fabs(term)) {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        if (std::fabs(term) < 1e-17L * std::fabs(sum + comp)) break;
    }
    return static_cast<double>(sum + comp);
}

// Miller backward recurrence normalised with J0 + 2 Σ J_{2k} = 1. Stable for
// every x > 0; used where the alternating power series loses digits.
inline void bessel_miller(double x, double& j0, double& j1) {
    const long double ax = x;
    int start = static_cast<int>(ax + 30.0L + 12.0L * std::cbrt(ax));
    if (start % 2 != 0) ++start;
    long double next = 0.0L;  // J_{k+1}
    long double cur = 1e-30L;  // J_k
    long double norm = 0.0L;
    long double r0 = 0.0L;
    long double r1 = 0.0L;
    for (int k = start; k > 0; --k) {
        const long double prev = (2.0L * k / ax) * cur - next;  // J_{k-1}
        next = cur;
        cur = prev;
        if (std::fabs(cur) > 1e200L) {
            cur *= 1e-200L;
            next *= 1e-200L;
            norm *= 1e-200L;
            r1 *= 1e-200L;
        }
        const int order = k - 1;
        if (order == 1) r1 = cur;
        if (order > 0 && order % 2 == 0) norm += 2.0L * cur;
    }
    r0 = cur;
    norm += r0;
    j0 = static_cast<double>(r0 / norm);
    j1 = static_cast<double>(r1 / norm);
}

inline constexpr double kSeriesLimit = 8.0;

}  // namespace detail

/// Bessel function of the first kind, order 0.
inline double bessel_j0(double x) {
    detail::require_finite(x, "bessel_j0");
    const double ax = std::fabs(x);
    if (ax <= detail::kSeriesLimit) return detail::bessel_series(0, ax);
    double j0 = 0.0;
    double j1 = 0.0;
    detail::bessel_miller(ax, j0, j1);
    return j0;
}

/// Bessel function of the first kind, order 1 (odd in x).
inline double bessel_j1(double x) {
    detail::require_finite(x, "bessel_j1");
    const double ax = std::fabs(x);
    double value = 0.0;
    if (ax <= detail::kSeriesLimit) {
        value = detail::bessel_series(1, ax);
    } else {
        double j0 = 0.0;
        detail::bessel_miller(ax, j0, value);
    }
    return x < 0.0 ? -value : value;
}

/// J1'(x) = J0(x) - J1(x)/x, with the limit 1/2 at the origin.
inline double bessel_j1_prime(double x) {
    if (x == 0.0) return 0.5;
    return bessel_j0(x) - bessel_j1(x) / x;
}

/// Bisection on a sign-changing bracket. Terminates when the bracket width
/// drops to `tol` (or f vanishes exactly) and returns the bracket midpoint.
template <typename F>
    requires std::invocable<F&, double>
double find_root(F&& f, RootBracket bracket, double tol) {
    if (!(tol > 0.0)) throw ConfigError("find_root: tol must be positive");
    if (!(bracket.lo < bracket.hi) || !(bracket.f_lo * bracket.f_hi < 0.0)) {
        std::ostringstream msg;
        msg << "find_root: invalid bracket [" << bracket.lo << ", " << bracket.hi
            << "] with f values " << bracket.f_lo << ", " << bracket.f_hi;
        throw BracketError(msg.str());
    }
    double lo = bracket.lo;
    double hi = bracket.hi;
    double f_lo = bracket.f_lo;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
        const double f_mid = f(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Convenience overload that evaluates f at the bracket ends.
template <typename F>
    requires std::invocable<F&, double>
double find_root(F&& f, double lo, double hi, double tol) {
    return find_root(f, RootBracket{lo, hi, f(lo), f(hi)}, tol);
}

/// Exponential integral E1(x) = ∫_x^∞ e^{-t}/t dt for x > 0.
inline double exp_integral_e1(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        std::ostringstream msg;
        msg << "exp_integral_e1: argument must be positive and finite, got " << x;
        throw DomainError(msg.str());
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (x <= 1.0) {
        double sum = 0.0;
        double term = 1.0;
        for (int k = 1; k < 100; ++k) {
            term *= -x / k;
            const double add = -term / k;
            sum += add;
            if (std::fabs(add) < eps * std::fabs(sum)) break;
        }
        return -std::numbers::egamma - std::log(x) + sum;
    }
    // Modified Lentz evaluation of the continued fraction.
    constexpr double tiny = 1e-300;
    double b = x + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const double del = c * d;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h * std::exp(-x);
    }
    throw NumericalError("exp_integral_e1: continued fraction did not converge");
}

/// Upper incomplete gamma Γ(-1, x) = e^{-x}/x - E1(x), x > 0.
inline double upper_gamma_m1(double x) {
    if (!(x > 0.0)) {
        std::ostringstream msg;
        msg << "upper_gamma_m1: argument must be positive, got " << x;
        throw DomainError(msg.str());
    }
    if (x > 745.0) return 0.0;
    return std::exp(-x) / x - exp_integral_e1(x);
}

}  // namespace robinwave::specfun
