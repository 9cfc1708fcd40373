#pragma once

#include "cnls/construct.hpp"

namespace cnls {

/// 4-point Lagrange interpolation of a radial field at radius rho; uses the
/// far-field model beyond r_max and smooth extrapolation through the axis.
inline double interp_radial(const RealField& f, double rho) {
    const RadialGrid& g = *f.grid;
    const std::size_t n = g.size();
    if (rho >= g.node(n - 1)) return f.tail.empty() ? f.v[n - 1] * g.node(n - 1) / rho : f.tail.eval(rho);
    // bracketing node: nodes are sorted
    std::size_t hi = std::lower_bound(g.nodes().begin(), g.nodes().end(), rho) - g.nodes().begin();
    std::size_t s0 = (hi < 2) ? 0 : hi - 2;
    s0 = std::min(s0, n - 4);
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        double lk = 1.0;
        for (int m = 0; m < 4; ++m) {
            if (m == k) continue;
            lk *= (rho - g.node(s0 + m)) / (g.node(s0 + k) - g.node(s0 + m));
        }
        acc += lk * f.v[s0 + k];
    }
    return acc;
}

/// All conserved/variational quantities of a state at parameters (eps, omega).
struct FunctionalReport {
    double mass = 0.0;    // (1/2) int |u|^2
    double energy = 0.0;  // int { |grad u|^2/2 - |u|^6/6 - eps F(u) }
    double action = 0.0;  // energy + omega * mass
    double K = 0.0;       // Pohozaev functional K_eps
    double K0 = 0.0;      // Pohozaev functional K^(0)_{eps, omega}
    double I = 0.0;       // S - 2/(3(p-1)) K (pure powers)
    double pohozaev_residual_K = 0.0;  // |K| / max term scale
    double pohozaev_residual_K0 = 0.0; // |K0| / max term scale
    double eps = 0.0, omega = 0.0, p = 0.0;
};

namespace detail {

struct CoreIntegrals {
    double grad2 = 0.0; // int |grad u|^2
    double l6 = 0.0;    // int u^6
    double l2 = 0.0;    // int u^2
    double intF = 0.0;  // int F(u)
    double int_uf = 0.0;
};

inline FunctionalReport assemble_report(const CoreIntegrals& c, double eps, double omega, const Nonlinearity& nl) {
    FunctionalReport r;
    r.eps = eps;
    r.omega = omega;
    r.p = nl.pure ? nl.p : 0.0;
    r.mass = 0.5 * c.l2;
    r.energy = 0.5 * c.grad2 - c.l6 / 6.0 - eps * c.intF;
    r.action = r.energy + omega * r.mass;
    r.K = c.grad2 - c.l6 + eps * (3.0 * c.intF - 1.5 * c.int_uf);
    r.K0 = eps * (3.0 * c.intF - 0.5 * c.int_uf) - omega * c.l2;
    if (nl.pure) r.I = r.action - 2.0 / (3.0 * (nl.p - 1.0)) * r.K;
    const double kscale =
        std::max({std::abs(c.grad2), std::abs(c.l6), std::abs(eps * (3.0 * c.intF - 1.5 * c.int_uf))});
    const double k0scale = std::max(std::abs(eps * (3.0 * c.intF - 0.5 * c.int_uf)), std::abs(omega * c.l2));
    r.pohozaev_residual_K = kscale > 0 ? std::abs(r.K) / kscale : 0.0;
    r.pohozaev_residual_K0 = k0scale > 0 ? std::abs(r.K0) / k0scale : 0.0;
    return r;
}

} // namespace detail

/// Generic-field evaluation; gradients are numerical, far fields from the
/// tail models. For constructed waves prefer evaluate(const SolitaryWave&),
/// which differentiates the W part in closed form.
inline FunctionalReport evaluate(const RealField& u, double eps, double omega, const Nonlinearity& nl) {
    detail::CoreIntegrals c;
    const GridPtr& g = u.grid;
    const double g2 = h1_seminorm(u);
    c.grad2 = g2 * g2;
    RealField u6(g), u2(g), Fu(g), uf(g);
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double q = u.v[i];
        u6.v[i] = std::pow(q, 6);
        u2.v[i] = q * q;
        Fu.v[i] = nl.F(q);
        uf.v[i] = q * nl.f(q);
    }
    const double R = g->r_max();
    if (!u.tail.empty()) {
        u6.tail = detail::tail_abs_pow(u.tail, 6.0, R);
        u2.tail = detail::tail_abs_pow(u.tail, 2.0, R);
        if (nl.pure) {
            Fu.tail = detail::tail_abs_pow(u.tail, nl.p + 1.0, R) * (nl.sign / (nl.p + 1.0));
            uf.tail = detail::tail_abs_pow(u.tail, nl.p + 1.0, R) * nl.sign;
        }
    }
    c.l6 = quad(u6);
    c.l2 = quad(u2);
    c.intF = quad(Fu);
    c.int_uf = quad(uf);
    return detail::assemble_report(c, eps, omega, nl);
}

/// Scale-invariant integrals of a constructed wave, with the W part of the
/// gradient handled in closed form. Memoize per wave for ray scans.
struct WaveIntegrals {
    double grad2, l6, lp1, l2;
};

inline WaveIntegrals wave_integrals(const SolitaryWave& w) {
    const GridPtr& g = w.grid;
    const double R = g->r_max();
    // grad^2 = int W'^2 + 2 int W' eta' + int eta'^2
    RealField Wp = sample(
        g, [](double r) { return -(r / 3.0) * std::pow(1.0 + r * r / 3.0, -1.5); }, W_pow_tail(1.0).derivative());
    RealField Wp2(g);
    for (std::size_t i = 0; i < g->size(); ++i) Wp2.v[i] = Wp.v[i] * Wp.v[i];
    Wp2.tail = Wp.tail * Wp.tail;
    RealField etap = radial_derivative(w.eta);
    const double cross = inner(Wp, etap);
    const double etah1 = h1_seminorm(w.eta);
    WaveIntegrals I;
    I.grad2 = quad(Wp2) + 2.0 * cross + etah1 * etah1;

    RealField q6(g), qp(g), q2(g);
    const double p = w.nl.pure ? w.nl.p : 4.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double q = w.Q.v[i];
        q6.v[i] = std::pow(q, 6);
        qp.v[i] = std::pow(std::abs(q), p + 1.0);
        q2.v[i] = q * q;
    }
    if (!w.Q.tail.empty()) {
        q6.tail = detail::tail_abs_pow(w.Q.tail, 6.0, R);
        qp.tail = detail::tail_abs_pow(w.Q.tail, p + 1.0, R);
        q2.tail = detail::tail_abs_pow(w.Q.tail, 2.0, R);
    }
    I.l6 = quad(q6);
    I.lp1 = quad(qp);
    I.l2 = quad(q2);
    return I;
}

inline FunctionalReport evaluate(const SolitaryWave& w) {
    if (!w.nl.pure) {
        return evaluate(w.Q, w.eps, w.omega, w.nl); // generic path for custom f
    }
    const WaveIntegrals I = wave_integrals(w);
    detail::CoreIntegrals c;
    c.grad2 = I.grad2;
    c.l6 = I.l6;
    c.l2 = I.l2;
    c.intF = w.nl.sign * I.lp1 / (w.nl.p + 1.0);
    c.int_uf = w.nl.sign * I.lp1;
    return detail::assemble_report(c, w.eps, w.omega, w.nl);
}

/// Action and K along the ray a Q from the cached integrals.
inline double action_along_ray(const SolitaryWave& w, const WaveIntegrals& I, double a) {
    const double p = w.nl.p;
    return 0.5 * a * a * I.grad2 - std::pow(a, 6) / 6.0 * I.l6 -
           w.eps * w.nl.sign * std::pow(std::abs(a), p + 1.0) / (p + 1.0) * I.lp1 + 0.5 * w.omega * a * a * I.l2;
}

inline double K_along_ray(const SolitaryWave& w, const WaveIntegrals& I, double a) {
    const double p = w.nl.p;
    return a * a * I.grad2 - std::pow(a, 6) * I.l6 -
           1.5 * (p - 1.0) / (p + 1.0) * w.eps * w.nl.sign * std::pow(std::abs(a), p + 1.0) * I.lp1;
}

/// L^2-preserving scaling (T_mu u)(x) = mu^{3/2} u(mu x), resampled on the
/// same grid by interpolation; the far-field model transforms exactly.
inline RealField scale_T(double mu, const RealField& u) {
    if (!(mu > 0.0)) throw std::invalid_argument("scale_T: mu must be positive");
    if (mu < 0.01 || mu > 100.0) throw std::invalid_argument("scale_T: mu aliases the grid resolution");
    const GridPtr& g = u.grid;
    RealField out(g);
    const double pref = std::pow(mu, 1.5);
    for (std::size_t i = 0; i < g->size(); ++i) out.v[i] = pref * interp_radial(u, mu * g->node(i));
    std::vector<TailTerm> t;
    for (const auto& term : u.tail.terms())
        t.push_back(TailTerm{pref * term.coef * std::pow(mu, -term.power), term.power, term.rate * mu});
    out.tail = TailExpr{t};
    return out;
}

/// L^6 / H^1-dot preserving scaling (S_mu u)(x) = mu^{1/2} u(mu x).
inline RealField scale_S(double mu, const RealField& u) {
    if (!(mu > 0.0)) throw std::invalid_argument("scale_S: mu must be positive");
    if (mu < 0.01 || mu > 100.0) throw std::invalid_argument("scale_S: mu aliases the grid resolution");
    const GridPtr& g = u.grid;
    RealField out(g);
    const double pref = std::sqrt(mu);
    for (std::size_t i = 0; i < g->size(); ++i) out.v[i] = pref * interp_radial(u, mu * g->node(i));
    std::vector<TailTerm> t;
    for (const auto& term : u.tail.terms())
        t.push_back(TailTerm{pref * term.coef * std::pow(mu, -term.power), term.power, term.rate * mu});
    out.tail = TailExpr{t};
    return out;
}

struct ActionGap {
    double gap;       // S_{eps, omega(eps)}(Q) - (1/3) int W^6
    double predicted; // -((p-3)/(2(p+1))) eps int W^{p+1}
    SolitaryWave wave;
};

/// Leading-order action gap below the unperturbed level (pure power 3<p<5).
inline ActionGap action_gap(double eps, const Nonlinearity& nl, const ConstructConfig& cfg = {}) {
    if (!nl.pure || nl.p <= 3.0 || nl.p >= 5.0)
        throw std::invalid_argument("action_gap: requires pure power 3 < p < 5");
    ActionGap out{0.0, 0.0, construct_Q(eps, nl, cfg)};
    const FunctionalReport rep = evaluate(out.wave);
    ProfileSet ps(out.wave.grid);
    out.gap = rep.action - ps.int_W6() / 3.0;
    out.predicted = -(nl.p - 3.0) / (2.0 * (nl.p + 1.0)) * eps * ps.int_W_pow(nl.p + 1.0);
    return out;
}

/// Rescaled wave Q^mu = mu^{1/2} Q_{eps_hat}(mu x) at parameters
/// (eps, mu^2 omega(eps_hat)), realized on its own grid.
inline SolitaryWave scaled_family(double eps, double eps_hat, const SolitaryWave& base,
                                  const ConstructConfig& cfg = {}) {
    if (!base.nl.pure) throw std::invalid_argument("scaled_family: requires a pure power");
    const double p = base.nl.p;
    const double mu = std::pow(eps / eps_hat, 2.0 / (5.0 - p));
    if (mu < 0.01 || mu > 100.0) throw std::invalid_argument("scaled_family: mu outside grid-resolvable range");
    SolitaryWave w;
    w.eps = eps;
    w.lambda = mu * base.lambda;
    w.omega = mu * mu * base.omega;
    w.nl = base.nl;
    w.grid = construction_grid(w.lambda, cfg);
    w.Q = RealField(w.grid);
    const double pref = std::sqrt(mu);
    for (std::size_t i = 0; i < w.grid->size(); ++i) w.Q.v[i] = pref * interp_radial(base.Q, mu * w.grid->node(i));
    std::vector<TailTerm> t;
    for (const auto& term : base.Q.tail.terms())
        t.push_back(TailTerm{pref * term.coef * std::pow(mu, -term.power), term.power, term.rate * mu});
    w.Q.tail = TailExpr{t}.pruned(w.grid->r_max());
    w.eta = RealField(w.grid);
    for (std::size_t i = 0; i < w.grid->size(); ++i) w.eta.v[i] = w.Q.v[i] - W_val(w.grid->node(i));
    w.eta.tail = (w.Q.tail + W_pow_tail(1.0) * (-1.0)).pruned(w.grid->r_max());
    w.diag.pde_residual = pde_residual(w);
    return w;
}

} // namespace cnls
