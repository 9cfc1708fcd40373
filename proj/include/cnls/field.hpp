#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "cnls/grid.hpp"
#include "cnls/tail.hpp"

namespace cnls {

/// Sampled real radial function. `tail` is the optional analytic far-field
/// model beyond r_max used for truncated-integral corrections; an empty tail
/// means corrections are negligible (exponential-class or compact data).
struct RealField {
    GridPtr grid;
    std::vector<double> v;
    TailExpr tail;

    RealField() = default;
    explicit RealField(GridPtr g, double fill = 0.0) : grid(std::move(g)), v(grid->size(), fill) {}
    RealField(GridPtr g, std::vector<double> vals, TailExpr t = {})
        : grid(std::move(g)), v(std::move(vals)), tail(std::move(t)) {}

    std::size_t size() const { return v.size(); }
    double operator[](std::size_t i) const { return v[i]; }
    double& operator[](std::size_t i) { return v[i]; }
};

struct ComplexField {
    GridPtr grid;
    std::vector<std::complex<double>> v;

    ComplexField() = default;
    explicit ComplexField(GridPtr g) : grid(std::move(g)), v(grid->size(), {0.0, 0.0}) {}

    std::size_t size() const { return v.size(); }
};

inline RealField sample(GridPtr g, const std::function<double(double)>& f, TailExpr tail = {}) {
    RealField out(g);
    for (std::size_t i = 0; i < g->size(); ++i) out.v[i] = f(g->node(i));
    out.tail = std::move(tail);
    return out;
}

inline void check_same_grid(const RealField& a, const RealField& b) {
    if (!a.grid || !b.grid || !a.grid->same_as(*b.grid)) throw std::invalid_argument("fields live on different grids");
}

/// Sum_i w_i f(r_i) + analytic tail correction: approximates int_{R^3} f.
inline double quad(const RealField& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f.grid->weight(i) * f.v[i];
    if (!f.tail.empty()) s += tail_integral_3d(f.tail, f.grid->r_max());
    return s;
}

/// L^2(R^3) pairing by quadrature; the tail correction uses the product of
/// the two far-field models when both are present.
inline double inner(const RealField& f, const RealField& g) {
    check_same_grid(f, g);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += (f.v[i] * g.v[i]) * f.grid->weight(i);
    if (!f.tail.empty() && !g.tail.empty()) s += tail_integral_3d(f.tail * g.tail, f.grid->r_max());
    return s;
}

namespace detail {

/// |expr|^p for real p >= 1, assuming a single dominant term at radius R:
/// |f|^p = |lead|^p (1 + rest/lead)^p expanded to second order.
inline TailExpr tail_abs_pow(const TailExpr& t, double p, double R) {
    if (t.empty()) return {};
    const auto& terms = t.terms();
    std::size_t lead = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const double m = std::abs(terms[i].coef) * std::pow(R, -terms[i].power) * std::exp(-terms[i].rate * R);
        if (m > best) {
            best = m;
            lead = i;
        }
    }
    const TailTerm L = terms[lead];
    TailExpr lead_pow = TailExpr::single(std::pow(std::abs(L.coef), p), p * L.power, p * L.rate);
    std::vector<TailTerm> rest_over_lead;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i == lead) continue;
        rest_over_lead.push_back(TailTerm{terms[i].coef / L.coef, terms[i].power - L.power, terms[i].rate - L.rate});
    }
    TailExpr x{rest_over_lead};
    TailExpr corr = TailExpr::single(1.0, 0.0) + x * p + (x * x) * (0.5 * p * (p - 1.0));
    return (lead_pow * corr).pruned(R);
}

} // namespace detail

/// (int |f|^p)^{1/p}; p = infinity returns max_i |f(r_i)|.
inline double lp_norm(const RealField& f, double p) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double x : f.v) m = std::max(m, std::abs(x));
        return m;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f.grid->weight(i) * std::pow(std::abs(f.v[i]), p);
    if (!f.tail.empty()) s += tail_integral_3d(detail::tail_abs_pow(f.tail, p, f.grid->r_max()), f.grid->r_max());
    return std::pow(s, 1.0 / p);
}

inline double lp_norm(const ComplexField& f, double p) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (auto x : f.v) m = std::max(m, std::abs(x));
        return m;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f.grid->weight(i) * std::pow(std::abs(f.v[i]), p);
    return std::pow(s, 1.0 / p);
}

// small pointwise helpers used throughout the solvers

inline RealField operator+(const RealField& a, const RealField& b) {
    check_same_grid(a, b);
    RealField out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out.v[i] = a.v[i] + b.v[i];
    out.tail = a.tail + b.tail;
    return out;
}

inline RealField operator-(const RealField& a, const RealField& b) {
    check_same_grid(a, b);
    RealField out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out.v[i] = a.v[i] - b.v[i];
    out.tail = a.tail + b.tail * (-1.0);
    return out;
}

inline RealField operator*(const RealField& a, double s) {
    RealField out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out.v[i] = a.v[i] * s;
    out.tail = a.tail * s;
    return out;
}

inline double sup_diff(const RealField& a, const RealField& b) {
    check_same_grid(a, b);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

} // namespace cnls
