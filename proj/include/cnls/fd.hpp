#pragma once

#include <vector>

#include "cnls/field.hpp"

namespace cnls {

/// Fornberg finite-difference weights: derivatives 0..m at x0 from nodes x.
/// Returns W[k][j] = weight of sample j for the k-th derivative.
inline std::vector<std::vector<double>> fornberg_weights(double x0, const std::vector<double>& x, int m) {
    const int n = int(x.size());
    std::vector<std::vector<double>> W(m + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0, c4 = x[0] - x0;
    W[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) W[k][i] = c1 * (k * W[k - 1][i - 1] - c5 * W[k][i - 1]) / c2;
                W[0][i] = -c1 * c5 * W[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) W[k][j] = ((c4)*W[k][j] - k * W[k - 1][j]) / c3;
            W[0][j] = c4 * W[0][j] / c3;
        }
        c1 = c2;
    }
    return W;
}

namespace detail {

// 4th-order central stencils on unit-spaced samples.
inline constexpr double c1_4[5] = {1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0};
inline constexpr double c2_4[5] = {-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0};

/// Per-grid stencil table for first/second xi-derivatives of the extended
/// sample vector (v_0 at xi = 0 prepended, value supplied by caller).
struct XiStencils {
    // rows 0..n-1 over extended samples 0..n; near-axis rows take 8 points so
    // the 1/r division at the first nodes does not cost an order
    struct Row {
        int start;
        int len;
        double d1[8];
        double d2[8];
    };
    std::vector<Row> rows;
    double h;

    explicit XiStencils(const RadialGrid& g) : h(g.h()) {
        const int n = int(g.size());
        rows.resize(n);
        for (int i = 0; i < n; ++i) {
            Row& R = rows[i];
            const int ext = i + 1; // index of node i in the extended samples
            if (ext >= 13 && ext <= n - 2) {
                R.start = ext - 2;
                R.len = 5;
                for (int k = 0; k < 5; ++k) {
                    R.d1[k] = c1_4[k] / h;
                    R.d2[k] = c2_4[k] / (h * h);
                }
            } else {
                const int len = (ext < 13) ? 8 : 6;
                const int start = std::max(0, std::min(ext - 3, n + 1 - len));
                R.start = start;
                R.len = len;
                std::vector<double> xloc(len);
                for (int k = 0; k < len; ++k) xloc[k] = double(start + k - ext); // in units of h
                auto W = fornberg_weights(0.0, xloc, 2);
                for (int k = 0; k < len; ++k) {
                    R.d1[k] = W[1][k] / h;
                    R.d2[k] = W[2][k] / (h * h);
                }
            }
        }
    }
};

inline const XiStencils& xi_stencils(const RadialGrid& g) {
    // stencil tables depend only on (n, h); cache a handful of them
    thread_local std::vector<std::pair<std::pair<std::size_t, double>, std::shared_ptr<XiStencils>>> cache;
    const std::pair<std::size_t, double> key{g.size(), g.h()};
    for (auto& e : cache)
        if (e.first == key) return *e.second;
    cache.emplace_back(key, std::make_shared<XiStencils>(g));
    if (cache.size() > 32) cache.erase(cache.begin());
    return *cache.back().second;
}

/// xi-derivatives of the extended vector ext[0..n] (ext[0] is the xi=0 sample).
inline void xi_derivatives(const RadialGrid& g, const std::vector<double>& ext, std::vector<double>& d1,
                           std::vector<double>& d2) {
    const auto& st = xi_stencils(g);
    const int n = int(g.size());
    d1.assign(n, 0.0);
    d2.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto& R = st.rows[i];
        double a = 0.0, b = 0.0;
        for (int k = 0; k < R.len; ++k) {
            const double s = ext[R.start + k];
            a += R.d1[k] * s;
            b += R.d2[k] * s;
        }
        d1[i] = a;
        d2[i] = b;
    }
}

} // namespace detail

/// Radial Laplacian (d^2/dr^2 + (2/r) d/dr) f, evaluated through v = r f as
/// Delta f = v''(r)/r, with 4th-order mapped finite differences. The v(0) = 0
/// sample regularizes the axis; the outer rows use one-sided stencils (the
/// field's decay class matters only for boundary-value solves, not here).
inline RealField apply_laplacian(const RealField& f) {
    const RadialGrid& g = *f.grid;
    const std::size_t n = g.size();
    std::vector<double> ext(n + 1);
    ext[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) ext[i + 1] = g.node(i) * f.v[i];
    std::vector<double> d1, d2;
    detail::xi_derivatives(g, ext, d1, d2);
    RealField out(f.grid);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = g.sigma(i), sp = g.dsigma(i);
        const double vrr = (d2[i] - (sp / s) * d1[i]) / (s * s);
        out.v[i] = vrr / g.node(i);
    }
    return out;
}

/// d/dr of a radial field (4th-order mapped stencils; assumes f'(0) = 0 when
/// extended through the axis, which holds for every smooth radial function).
inline RealField radial_derivative(const RealField& f) {
    const RadialGrid& g = *f.grid;
    const std::size_t n = g.size();
    // differentiate v = r f, then f' = (v' - f)/r: avoids the 1/r sample at the axis
    std::vector<double> ext(n + 1);
    ext[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) ext[i + 1] = g.node(i) * f.v[i];
    std::vector<double> d1, d2;
    detail::xi_derivatives(g, ext, d1, d2);
    RealField out(f.grid);
    for (std::size_t i = 0; i < n; ++i) {
        const double vr = d1[i] / g.sigma(i);
        out.v[i] = (vr - f.v[i]) / g.node(i);
    }
    out.tail = f.tail.derivative();
    return out;
}

/// Dirichlet seminorm ||grad f||_{L^2(R^3)}.
inline double h1_seminorm(const RealField& f) {
    RealField df = radial_derivative(f);
    for (auto& x : df.v) x *= x;
    df.tail = f.tail.derivative() * f.tail.derivative();
    return std::sqrt(quad(df));
}

/// Sup norm over interior nodes (skipping `skip` nodes at each end).
inline double interior_sup(const RealField& f, std::size_t skip = 2) {
    double m = 0.0;
    for (std::size_t i = skip; i + skip < f.size(); ++i) m = std::max(m, std::abs(f.v[i]));
    return m;
}

} // namespace cnls
