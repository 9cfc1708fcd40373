#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cnls {

inline constexpr double pi = 3.14159265358979323846264338327950288;

/// Thrown when a grid or solver size request is below the supported minimum.
struct sizing_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an iteration leaves its contraction bracket or ball.
struct no_convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a required structural assumption fails (e.g. <LW, f(W)> >= 0).
struct assumption_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a banded factorization hits a zero pivot.
struct factorization_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
    if (n < 2 || lo <= 0.0 || hi <= 0.0) throw std::invalid_argument("logspace: need n>=2 and positive bounds");
    std::vector<double> out(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
    return out;
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: bad sample");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Least-squares intercept companion of fit_slope.
inline double fit_intercept(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    return (sy - fit_slope(x, y) * sx) / double(x.size());
}

/// Slope of log|y| vs log x, skipping samples at or below `floor`.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double floor = 0.0) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(y[i]) > floor) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(std::abs(y[i])));
        }
    }
    return fit_slope(lx, ly);
}

} // namespace cnls
