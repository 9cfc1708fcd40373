#pragma once

#include <cmath>
#include <stdexcept>

#include "cnls/common.hpp"

namespace cnls {

/// Euler Beta via lgamma.
inline double beta_fn(double a, double b) {
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

/// Closed form of the 3D radial integral of W^m for W = (1+r^2/3)^{-1/2}:
///   int_{R^3} W^m dx = 2 pi 3^{3/2} B(3/2, (m-3)/2),  m > 3.
inline double W_power_integral(double m) {
    if (m <= 3.0) throw std::invalid_argument("W_power_integral: integral diverges for m <= 3");
    return 2.0 * pi * std::pow(3.0, 1.5) * beta_fn(1.5, 0.5 * (m - 3.0));
}

namespace detail {

// Lower incomplete gamma series, valid for a > 0, x not large.
inline double gamma_lower_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::pow(x, a) * std::exp(-x) * sum;
}

// Continued fraction for the upper incomplete gamma (modified Lentz), x >= ~1.
inline double gamma_upper_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x)) * h;
}

} // namespace detail

namespace detail {

// E1(x) = Gamma(0, x) by series, for 0 < x < ~2.
inline double e1_series(double x) {
    const double euler_gamma = 0.57721566490153286060651209;
    double sum = 0.0, term = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= -x / double(k);
        const double add = -term / double(k);
        sum += add;
        if (std::abs(add) < 1e-18 * std::max(1.0, std::abs(sum))) break;
    }
    return -euler_gamma - std::log(x) + sum;
}

} // namespace detail

/// Upper incomplete gamma Gamma(a, x) for real a (any sign) and x > 0.
/// x >= 1.5 uses the continued fraction directly at a; smaller x uses the
/// lower-gamma series after shifting a into (1, 2] and walking back down by
///   Gamma(a-1, x) = (Gamma(a, x) - x^{a-1} e^{-x}) / (a - 1),
/// with the non-positive-integer column anchored at Gamma(0, x) = E1(x).
inline double gamma_upper(double a, double x) {
    if (!(x > 0.0)) throw std::invalid_argument("gamma_upper: requires x > 0");
    if (x >= 1.5) return detail::gamma_upper_cf(a, x);

    const double nearest = std::round(a);
    const bool integer_a = std::abs(a - nearest) < 1e-12;
    if (integer_a && nearest <= 0.0) {
        double g = detail::e1_series(x);
        double ai = 0.0;
        const int steps = int(-nearest);
        for (int i = 0; i < steps; ++i) {
            ai -= 1.0;
            g = (g - std::pow(x, ai) * std::exp(-x)) / ai;
        }
        return g;
    }

    int k = 0;
    double a0 = a;
    while (a0 <= 1.0) {
        a0 += 1.0;
        ++k;
    }
    while (a0 > 2.0) {
        a0 -= 1.0;
        --k;
    }
    double g = std::exp(std::lgamma(a0)) - detail::gamma_lower_series(a0, x);
    if (k > 0) {
        double ai = a0;
        for (int i = 0; i < k; ++i) {
            ai -= 1.0;
            g = (g - std::pow(x, ai) * std::exp(-x)) / ai;
        }
    } else if (k < 0) {
        double ai = a0;
        for (int i = 0; i < -k; ++i) {
            g = ai * g + std::pow(x, ai) * std::exp(-x);
            ai += 1.0;
        }
    }
    return g;
}

/// exp_moment(j, alpha, D) = int_0^D t^j e^{-alpha t} dt for j >= 0, alpha >= 0.
/// Stable in both the alpha*D << 1 and alpha*D >> 1 regimes.
inline double exp_moment(int j, double alpha, double D) {
    if (D < 0.0) throw std::invalid_argument("exp_moment: D < 0");
    if (D == 0.0) return 0.0;
    const double z = alpha * D;
    if (z < 0.5) {
        // series: D^{j+1} sum_k (-z)^k / (k! (j+k+1))
        double term = 1.0;
        double sum = 1.0 / double(j + 1);
        for (int k = 1; k < 40; ++k) {
            term *= -z / double(k);
            const double add = term / double(j + k + 1);
            sum += add;
            if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        }
        return std::pow(D, j + 1) * sum;
    }
    // recursion M_j = (j M_{j-1} - D^j e^{-z}) / alpha
    const double e = std::exp(-z);
    double M = (1.0 - e) / alpha;
    double Dp = 1.0;
    for (int i = 1; i <= j; ++i) {
        Dp *= D;
        M = (double(i) * M - Dp * e) / alpha;
    }
    return M;
}

} // namespace cnls
