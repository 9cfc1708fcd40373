#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "cnls/common.hpp"

namespace cnls {

/// Node-mapping law r(xi) on xi in (0, xi_max].
///
/// - algebraic:  r = A xi / (1 - xi). Resolves the W core and 1/r far field.
/// - blended:    dr/dxi is a smooth harmonic blend of the algebraic slope and
///               a constant B, so the outer region becomes uniform in r. Used
///               for solitary-wave grids that must resolve an exp(-lambda r)
///               tail with lambda r_max >> 1; B is solved from r_max.
/// - uniform:    r = r_max xi. Used by the time propagator.
struct StretchSpec {
    enum class Kind { algebraic, blended, uniform };
    Kind kind = Kind::algebraic;
    double A = 10.0;     // core scale of the algebraic law
    double B = 0.0;      // far slope of the blended law (0 = solve from r_max)
    double xi_c = 0.72;  // blend center
    double delta = 0.05; // blend width

    static StretchSpec algebraic(double A = 10.0) { return {Kind::algebraic, A, 0.0, 0.0, 0.0}; }
    static StretchSpec blended(double A = 10.0, double xi_c = 0.72, double delta = 0.05) {
        return {Kind::blended, A, 0.0, xi_c, delta};
    }
    static StretchSpec uniform() { return {Kind::uniform, 0.0, 0.0, 0.0, 0.0}; }

    std::string name() const {
        switch (kind) {
            case Kind::algebraic: return "algebraic";
            case Kind::blended: return "blended";
            default: return "uniform";
        }
    }
};

namespace detail {

/// Boundary weights of the 6th-order Gregory quadrature rule.
inline constexpr std::array<double, 5> gregory6 = {95.0 / 288.0, 317.0 / 240.0, 23.0 / 30.0, 793.0 / 720.0,
                                                   157.0 / 160.0};

struct MapEval {
    double sigma;  // dr/dxi
    double dsigma; // d2r/dxi2
};

inline MapEval eval_map_slope(const StretchSpec& s, double xi, double r_max) {
    switch (s.kind) {
        case StretchSpec::Kind::algebraic: {
            const double u = 1.0 - xi;
            return {s.A / (u * u), 2.0 * s.A / (u * u * u)};
        }
        case StretchSpec::Kind::uniform: return {r_max, 0.0};
        case StretchSpec::Kind::blended: {
            const double u = 1.0 - xi;
            const double t = std::tanh((xi - s.xi_c) / s.delta);
            const double w = 0.5 * (1.0 - t);                      // 1 in the core, 0 far out
            const double wp = -0.5 * (1.0 - t * t) / s.delta;      // dw/dxi
            const double den = w * s.B * u * u + (1.0 - w) * s.A;  // harmonic blend denominator
            const double dden = wp * s.B * u * u - 2.0 * w * s.B * u - wp * s.A;
            const double AB = s.A * s.B;
            return {AB / den, -AB * dden / (den * den)};
        }
    }
    return {0.0, 0.0};
}

// 4-point Gauss-Legendre nodes/weights on [-1, 1].
inline constexpr std::array<double, 4> gl4_x = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                                0.8611363115940526};
inline constexpr std::array<double, 4> gl4_w = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                0.3478548451374538};

inline double integrate_slope(const StretchSpec& s, double a, double b, double r_max) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += gl4_w[k] * eval_map_slope(s, mid + half * gl4_x[k], r_max).sigma;
    return acc * half;
}

} // namespace detail

/// Nonuniform radial mesh with quadrature weights approximating
/// int_0^infty g(r) 4 pi r^2 dr, plus the mapping metadata needed for
/// finite differences on the mapped coordinate.
class RadialGrid {
  public:
    RadialGrid(std::size_t n, double r_max, StretchSpec stretch) : n_(n), stretch_(stretch) {
        if (n < 16) throw sizing_error("make_grid: n must be >= 16");
        if (r_max < 50.0) throw sizing_error("make_grid: r_max must be >= 50");

        switch (stretch.kind) {
            case StretchSpec::Kind::algebraic: xi_max_ = r_max / (stretch.A + r_max); break;
            case StretchSpec::Kind::uniform: xi_max_ = 1.0; break;
            case StretchSpec::Kind::blended: {
                xi_max_ = 1.0;
                if (stretch_.B <= 0.0) stretch_.B = solve_far_slope(stretch_, r_max);
                break;
            }
        }
        h_ = xi_max_ / double(n);

        r_.resize(n);
        sigma_.resize(n);
        dsigma_.resize(n);
        if (stretch_.kind == StretchSpec::Kind::blended) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += detail::integrate_slope(stretch_, double(i) * h_, double(i + 1) * h_, r_max);
                r_[i] = acc;
            }
        } else if (stretch_.kind == StretchSpec::Kind::algebraic) {
            for (std::size_t i = 0; i < n; ++i) {
                const double xi = double(i + 1) * h_;
                r_[i] = stretch_.A * xi / (1.0 - xi);
            }
            r_[n - 1] = r_max; // guard against round-off at the endpoint
        } else {
            for (std::size_t i = 0; i < n; ++i) r_[i] = r_max * double(i + 1) * h_;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto m = detail::eval_map_slope(stretch_, double(i + 1) * h_, r_max);
            sigma_[i] = m.sigma;
            dsigma_[i] = m.dsigma;
        }
        r_max_ = r_[n - 1];

        build_weights();
    }

    std::size_t size() const { return n_; }
    double r_max() const { return r_max_; }
    double h() const { return h_; }
    double xi_max() const { return xi_max_; }
    const StretchSpec& stretch() const { return stretch_; }

    const std::vector<double>& nodes() const { return r_; }
    const std::vector<double>& weights() const { return w_; }
    double node(std::size_t i) const { return r_[i]; }
    double weight(std::size_t i) const { return w_[i]; }
    /// dr/dxi and d2r/dxi2 at node i.
    double sigma(std::size_t i) const { return sigma_[i]; }
    double dsigma(std::size_t i) const { return dsigma_[i]; }

    bool same_as(const RadialGrid& o) const { return this == &o; }

  private:
    static double solve_far_slope(const StretchSpec& s, double r_max) {
        auto length = [&](double B) {
            StretchSpec t = s;
            t.B = B;
            double acc = 0.0;
            const int cells = 512;
            for (int i = 0; i < cells; ++i)
                acc += detail::integrate_slope(t, double(i) / cells, double(i + 1) / cells, r_max);
            return acc;
        };
        double lo = 1e-3 * r_max, hi = 4.0 * r_max;
        while (length(hi) < r_max) hi *= 2.0;
        while (length(lo) > r_max) lo *= 0.5;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (length(mid) < r_max ? lo : hi) = mid;
            if (hi - lo < 1e-13 * hi) break;
        }
        return 0.5 * (lo + hi);
    }

    void build_weights() {
        // Gregory-corrected trapezoid on the uniform xi samples xi_0..xi_n,
        // where the xi_0 sample of any mapped integrand 4 pi r^2 sigma g is
        // identically zero (r(0) = 0), so only nodes 1..n carry weight.
        // Uniform grids (the time propagator's) use the plain rule instead:
        // it is the exact invariant of the Crank-Nicolson step.
        w_.resize(n_);
        const bool plain = stretch_.kind == StretchSpec::Kind::uniform;
        auto greg = [&](std::size_t k) -> double { // k = index from 0 over samples 0..n
            if (plain) return 1.0;
            double c = 1.0;
            if (k < detail::gregory6.size()) c = detail::gregory6[k];
            const std::size_t from_right = n_ - k;
            if (from_right < detail::gregory6.size()) c = detail::gregory6[from_right];
            return c;
        };
        for (std::size_t i = 0; i < n_; ++i) {
            const double c = greg(i + 1);
            w_[i] = 4.0 * pi * r_[i] * r_[i] * sigma_[i] * h_ * c;
        }
    }

    std::size_t n_;
    StretchSpec stretch_;
    double xi_max_ = 1.0;
    double h_ = 0.0;
    double r_max_ = 0.0;
    std::vector<double> r_, w_, sigma_, dsigma_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(std::size_t n, double r_max, StretchSpec stretch = StretchSpec::algebraic()) {
    return std::make_shared<RadialGrid>(n, r_max, stretch);
}

} // namespace cnls
