#pragma once

#include <cstdio>

#include "cnls/resolvent.hpp"

namespace cnls {

struct ConstructConfig {
    double ball_radius = 10.0;  // R of the contraction ball ||eta||_inf <= R eps
    double tol_lambda = 4e-12;  // relative, inner frequency fixed point
    double tol_eta = 1e-12;     // relative to eps, inner correction update
    double tol_outer = 1e-11;   // relative, joint (lambda, eta) convergence
    int max_inner = 200;
    int max_outer = 120;
    std::size_t grid_n = 0;        // 0 = auto
    double grid_rmax = 0.0;        // 0 = auto (lambda_rmax_factor / lambda)
    double lambda_rmax_factor = 13.0;
    double far_resolution = 0.025; // target lambda * dr in the far zone
};

struct WaveDiagnostics {
    int outer_iterations = 0;
    int lambda_iterations = 0;
    double orth_residual = 0.0;       // |<R0 Vpsi, F>| at the solution
    double projection_coef = 0.0;     // last projected Vpsi component of F
    double pde_residual = 0.0;        // sup interior |-Delta Q - Q^5 - eps f(Q) + omega Q|
    double solve_residual = 0.0;      // banded system residual of the last eta solve
};

/// A constructed solitary wave Q = W + eta at parameters (eps, omega(eps)).
struct SolitaryWave {
    double eps = 0.0;
    double lambda = 0.0;
    double omega = 0.0;
    Nonlinearity nl;
    GridPtr grid;
    RealField eta;
    RealField Q;
    WaveDiagnostics diag;
};

/// N(eta) = (W+eta)^5 - W^5 - 5 W^4 eta + eps (f(W+eta) - f(W)), evaluated in
/// the cancellation-free polynomial form of the quintic part.
inline RealField nonlinear_N(const RealField& eta, double eps, const Nonlinearity& nl) {
    RealField out(eta.grid);
    const std::size_t n = eta.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double w = W_val(eta.grid->node(i));
        const double e = eta.v[i];
        const double quintic = e * e * (10.0 * w * w * w + 10.0 * w * w * e + 5.0 * w * e * e + e * e * e);
        out.v[i] = quintic + eps * (nl.f(w + e) - nl.f(w));
    }
    // fitted power tail from the last nodes (the contribution of N beyond
    // r_max to any pairing is O(eps) relative to the eps^2 pairing itself)
    const double gN = out.v[n - 1], gM = out.v[n - 2];
    if (std::abs(gN) > 1e-280 && std::abs(gM) > std::abs(gN)) {
        const double rN = eta.grid->node(n - 1), rM = eta.grid->node(n - 2);
        double m = std::log(std::abs(gM) / std::abs(gN)) / std::log(rN / rM);
        if (m > 1.5 && m < 12.0) out.tail = TailExpr::single(gN * std::pow(rN, m), m);
    }
    return out;
}

/// F(eps, lambda, eta) = -lambda^2 W + eps f(W) + N(eta), with W analytic.
inline RealField rhs_F(double eps, double lambda, const RealField& eta, const Nonlinearity& nl) {
    RealField out = nonlinear_N(eta, eps, nl);
    const GridPtr& g = eta.grid;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double r = g->node(i);
        out.v[i] += -lambda * lambda * W_val(r) + eps * nl.f(W_val(r));
    }
    TailExpr fw = nl.pure ? W_pow_tail(nl.p) * nl.sign : TailExpr{};
    out.tail = out.tail + W_pow_tail(1.0) * (-lambda * lambda) + fw * eps;
    return out;
}

namespace detail {

struct LambdaSolve {
    double lambda;
    int iterations;
};

/// Fixed point of H(lambda) = [eps <R0 Vpsi, f(W)> + <R0 Vpsi, N(eta)>] /
/// (lambda <R0 Vpsi, W>) inside [eps l1/2, 3 eps l1/2].
inline LambdaSolve solve_lambda_impl(double eps, const RealField& eta, const Nonlinearity& nl, double lambda1,
                                     const ConstructConfig& cfg) {
    const GridPtr& g = eta.grid;
    RealField fw = nl.fW_field(g);
    RealField N = nonlinear_N(eta, eps, nl);
    RealField W = W_field(g);
    const double lo = 0.5 * eps * lambda1, hi = 1.5 * eps * lambda1;
    double lam = eps * lambda1;
    double prev_diff = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= cfg.max_inner; ++it) {
        const RealField& A = R0_Vpsi(lam, g);
        const double denom = lam * inner(A, W);
        const double num = eps * inner(A, fw) + inner(A, N);
        const double next = num / denom;
        if (!(next >= lo && next <= hi))
            throw no_convergence_error("solve_lambda: iterate left [eps l1/2, 3 eps l1/2] at eps = " +
                                       std::to_string(eps));
        const double diff = std::abs(next - lam);
        lam = next;
        if (diff <= cfg.tol_lambda * lam) return {lam, it};
        // pairing round-off floor: the map contracts until the increments churn
        if (it > 4 && diff >= prev_diff && prev_diff <= 1e-9 * lam) return {lam, it};
        prev_diff = diff;
    }
    throw no_convergence_error("solve_lambda: no convergence within max_inner iterations");
}

} // namespace detail

/// Solve the scalar orthogonality equation for lambda at fixed eta.
inline double solve_lambda(double eps, const RealField& eta, const Nonlinearity& nl, const ConstructConfig& cfg = {}) {
    const auto o = omega1(nl, eta.grid); // validates the sign assumption
    return detail::solve_lambda_impl(eps, eta, nl, o.lambda1, cfg).lambda;
}

/// One application of the correction map G: assemble F(eps, lambda, eta_prev),
/// project out the residual Vpsi component, invert (H + lambda^2).
inline RealField solve_eta(double eps, double lambda, const RealField& eta_prev, const Nonlinearity& nl,
                           const ConstructConfig& cfg, const ResolventWorkspace& ws, WaveDiagnostics* diag = nullptr) {
    const GridPtr& g = eta_prev.grid;
    RealField F = rhs_F(eps, lambda, eta_prev, nl);
    RealField vpsi = Vpsi_field(g);
    const double c = orth_pairing(lambda, F) / orth_pairing(lambda, vpsi);
    for (std::size_t i = 0; i < g->size(); ++i) F.v[i] -= c * vpsi.v[i];
    F.tail = F.tail + Vpsi_tail() * (-c);
    RealField out = ws.solve(F);
    if (diag) {
        diag->projection_coef = c;
        diag->solve_residual = ws.last_residual();
    }
    const double sup = lp_norm(out, std::numeric_limits<double>::infinity());
    if (sup > cfg.ball_radius * eps)
        throw no_convergence_error("solve_eta: ||eta||_inf = " + std::to_string(sup) + " left the R eps ball");
    return out;
}

/// Grid sized for a construction at decay rate lambda: blended stretching,
/// r_max ~ 13/lambda so the Robin closure and far-field models are exact to
/// e^{-13}, far spacing resolving exp(-lambda r).
inline GridPtr construction_grid(double lambda_est, const ConstructConfig& cfg = {}) {
    const double rmax = cfg.grid_rmax > 0.0 ? cfg.grid_rmax
                                            : std::max(300.0, cfg.lambda_rmax_factor / lambda_est);
    std::size_t n = cfg.grid_n ? cfg.grid_n : 4096;
    for (;;) {
        auto g = make_grid(n, rmax, StretchSpec::blended());
        const double dr_far = g->node(g->size() - 1) - g->node(g->size() - 2);
        if (cfg.grid_n || lambda_est * dr_far <= cfg.far_resolution || n >= 65536) return g;
        n *= 2;
    }
}

/// Discrete stationary residual -Delta Q - Q^5 - eps f(Q) + omega Q over
/// interior nodes, with the W part of the Laplacian handled analytically.
inline double pde_residual(const SolitaryWave& w) {
    RealField lap_eta = apply_laplacian(w.eta);
    RealField res(w.grid);
    for (std::size_t i = 0; i < w.grid->size(); ++i) {
        const double r = w.grid->node(i);
        const double Wv = W_val(r), q = w.Q.v[i];
        res.v[i] = -lap_eta.v[i] + std::pow(Wv, 5) - std::pow(q, 5) - w.eps * w.nl.f(q) + w.omega * q;
    }
    return interior_sup(res, 2);
}

namespace detail {

struct StageResult {
    bool converged = false;
    double lambda = 0.0;
    int outers = 0;
    int lambda_iters = 0;
};

/// Damped alternation of the two levels at fixed eps on a fixed grid.
/// theta = 1 is the paper's plain iteration; theta < 1 keeps the same fixed
/// point while taming the correction map near the fold of the branch.
inline StageResult alternate_stage(double eps, RealField& eta, const Nonlinearity& nl, const Omega1& o,
                                   const ConstructConfig& cfg, double theta, int max_outer,
                                   WaveDiagnostics* diag = nullptr) {
    const GridPtr& g = eta.grid;
    StageResult st;
    double gd_prev = std::numeric_limits<double>::infinity();
    int stall = 0, growth = 0;
    for (int outer = 1; outer <= max_outer; ++outer) {
        LambdaSolve ls;
        try {
            ls = solve_lambda_impl(eps, eta, nl, o.lambda1, cfg);
        } catch (const no_convergence_error&) {
            return st; // bracket exit: stage failed
        }
        st.lambda = ls.lambda;
        st.lambda_iters += ls.iterations;
        st.outers = outer;
        ResolventWorkspace ws = ResolventWorkspace::for_H(g, ls.lambda);
        RealField Geta;
        try {
            Geta = solve_eta(eps, ls.lambda, eta, nl, cfg, ws, diag);
        } catch (const no_convergence_error&) {
            return st; // ball exit: stage failed
        }
        const double gd = sup_diff(Geta, eta); // undamped fixed-point residual
        for (std::size_t i = 0; i < g->size(); ++i) eta.v[i] = (1.0 - theta) * eta.v[i] + theta * Geta.v[i];
        eta.tail = Geta.tail;
        if (gd <= std::max(3e-12, cfg.tol_outer * eps)) {
            st.converged = true;
            return st;
        }
        // noise-floor stall: residual deep but no longer decreasing
        if (gd >= gd_prev) {
            if (gd < 1e-9) ++stall;
            ++growth;
        } else {
            stall = 0;
            growth = 0;
        }
        if (stall >= 3) {
            st.converged = true;
            return st;
        }
        if (growth >= 8) return st; // repelling: stage failed
        gd_prev = gd;
    }
    return st;
}

} // namespace detail

/// The two-level construction: alternate the scalar lambda solve and the eta
/// contraction until the joint fixed point converges. The plain alternation
/// contracts for small eps; nearer the branch fold it is warm-started by
/// continuation in eps and damped, which preserves the fixed point.
inline SolitaryWave construct_Q(double eps, const Nonlinearity& nl, const ConstructConfig& cfg = {}) {
    if (!(eps > 0.0)) throw std::invalid_argument("construct_Q: eps must be positive");
    // lambda scale estimate on a coarse scratch grid
    const auto o_est = omega1(nl, make_grid(512, 200.0, StretchSpec::algebraic()));
    GridPtr g = construction_grid(o_est.lambda1 * eps, cfg);
    const auto o = omega1(nl, g);

    SolitaryWave w;
    w.eps = eps;
    w.nl = nl;
    w.grid = g;
    w.eta = RealField(g);

    auto st = detail::alternate_stage(eps, w.eta, nl, o, cfg, 1.0, cfg.max_outer, &w.diag);
    w.diag.outer_iterations = st.outers;
    w.diag.lambda_iterations = st.lambda_iters;
    if (!st.converged) {
        // continuation ladder with damping, all on the target grid
        w.eta = RealField(g);
        w.diag = WaveDiagnostics{};
        const int rungs = 6;
        for (int k = 1; k <= rungs; ++k) {
            const double ek = eps * (0.25 + 0.75 * double(k - 1) / double(rungs - 1));
            const int budget = (k == rungs) ? 8 * cfg.max_outer : 5 * cfg.max_outer;
            st = detail::alternate_stage(ek, w.eta, nl, o, cfg, 0.5, budget, &w.diag);
            w.diag.outer_iterations += st.outers;
            w.diag.lambda_iterations += st.lambda_iters;
            if (!st.converged)
                throw no_convergence_error(
                    "construct_Q: no convergence at eps = " + std::to_string(ek) +
                    (k == rungs ? "" : " (continuation rung)") +
                    "; eps exceeds the empirical eps0 of this nonlinearity/grid (branch fold)");
        }
    }

    const double lam = st.lambda;
    w.lambda = lam;
    w.omega = lam * lam;
    w.Q = RealField(g);
    for (std::size_t i = 0; i < g->size(); ++i) w.Q.v[i] = W_val(g->node(i)) + w.eta.v[i];
    w.Q.tail = (W_pow_tail(1.0) + w.eta.tail).pruned(g->r_max());
    w.diag.orth_residual = std::abs(orth_pairing(lam, rhs_F(eps, lam, w.eta, nl)));
    w.diag.pde_residual = pde_residual(w);
    return w;
}

/// Largest eps at which construct_Q succeeds, by bisection (the spec-level
/// notion of the empirical eps0 for a given nonlinearity and grid policy).
inline double empirical_eps0(const Nonlinearity& nl, const ConstructConfig& cfg = {}, double lo = 0.01,
                             double hi = 0.08, int bisections = 7) {
    auto works = [&](double e) {
        try {
            construct_Q(e, nl, cfg);
            return true;
        } catch (const no_convergence_error&) {
            return false;
        }
    };
    if (!works(lo)) throw no_convergence_error("empirical_eps0: lower probe failed");
    while (works(hi)) {
        lo = hi;
        hi *= 1.6;
        if (hi > 10.0) return lo;
    }
    for (int i = 0; i < bisections; ++i) {
        const double mid = 0.5 * (lo + hi);
        (works(mid) ? lo : hi) = mid;
    }
    return lo;
}

/// Independent Newton iteration on the discretized stationary equation at
/// fixed omega, in the eta-decomposition Q = W + eta with Robin far field.
inline SolitaryWave newton_oracle(double eps, double omega, const RealField& Q_init, const Nonlinearity& nl,
                                  const ConstructConfig& cfg = {}, int max_steps = 12) {
    const GridPtr& g = Q_init.grid;
    const std::size_t n = g->size();
    const double lam = std::sqrt(omega);

    RealField eta(g);
    for (std::size_t i = 0; i < n; ++i) eta.v[i] = Q_init.v[i] - W_val(g->node(i));

    auto residual_field = [&](const RealField& et) {
        RealField lap = apply_laplacian(et);
        RealField res(g);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = g->node(i), Wv = W_val(r);
            const double q = Wv + et.v[i];
            res.v[i] = -lap.v[i] + std::pow(Wv, 5) - std::pow(q, 5) - eps * nl.f(q) + omega * q;
        }
        return res;
    };

    SolitaryWave w;
    w.eps = eps;
    w.lambda = lam;
    w.omega = omega;
    w.nl = nl;
    w.grid = g;

    // round-off floor of the residual evaluation: the stencil sums amplify
    // machine noise on eta by ~ 1/(h sigma)^2
    const double eta0_sup = lp_norm(eta, std::numeric_limits<double>::infinity());
    const double res_target = std::max(1e-11, 3e-10 * eta0_sup);
    double res_sup = interior_sup(residual_field(eta), 2);
    int steps = 0;
    while (res_sup > res_target && steps < max_steps) {
        if (!(lam > 0.0)) throw no_convergence_error("newton_oracle: omega = 0 outside the solver domain");
        // Jacobian diag: -5(W+eta)^4 ... as -d/dQ [Q^5 + eps f(Q) - omega Q]
        std::vector<double> diag(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double q = W_val(g->node(i)) + eta.v[i];
            diag[i] = -5.0 * std::pow(q, 4) - eps * nl.fprime(q) + omega;
        }
        ResolventWorkspace J(g, std::move(diag), lam);

        // right-hand side: minus the residual, written as a source for delta;
        // the Robin row absorbs both the -omega W slow tail and the current
        // boundary mismatch
        RealField rhs = residual_field(eta);
        for (auto& x : rhs.v) x = -x;
        // Newton correction for the boundary row: b = v' + lam v - s1/lam
        const auto& st = detail::xi_stencils(*g);
        const auto& R = st.rows[n - 1];
        double vp = 0.0;
        for (int k = 0; k < R.len; ++k) {
            const int e = R.start + k;
            vp += R.d1[k] * (e == 0 ? 0.0 : g->node(e - 1) * eta.v[e - 1]);
        }
        vp /= g->sigma(n - 1);
        const double s1 = -std::sqrt(3.0) * omega; // 1/r coefficient of -omega W
        const double b = vp + lam * g->node(n - 1) * eta.v[n - 1] - s1 / lam;
        RealField delta = J.solve(rhs, -b);
        w.diag.solve_residual = J.last_residual();
        double dsup = lp_norm(delta, std::numeric_limits<double>::infinity());
        if (!std::isfinite(dsup) || dsup > 1.0)
            throw no_convergence_error("newton_oracle: step left the basin (|delta| = " + std::to_string(dsup) + ")");
        for (std::size_t i = 0; i < n; ++i) eta.v[i] += delta.v[i];
        res_sup = interior_sup(residual_field(eta), 2);
        ++steps;
    }
    if (res_sup > res_target) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", res_sup);
        throw no_convergence_error(std::string("newton_oracle: residual stalled at ") + buf);
    }

    // far-field model of the converged eta, from the source structure
    if (lam > 0.0) {
        ResolventWorkspace wsH = ResolventWorkspace::for_H(g, lam);
        eta.tail = wsH.solution_far_model(rhs_F(eps, lam, eta, nl).tail, g->node(n - 1) * eta.v[n - 1]);
    }
    w.eta = std::move(eta);
    w.Q = RealField(g);
    for (std::size_t i = 0; i < n; ++i) w.Q.v[i] = W_val(g->node(i)) + w.eta.v[i];
    if (!w.eta.tail.empty()) w.Q.tail = (W_pow_tail(1.0) + w.eta.tail).pruned(g->r_max());
    w.diag.outer_iterations = steps;
    w.diag.pde_residual = res_sup;
    return w;
}

struct MonotonicityReport {
    struct PairCheck {
        double eps1, eps2;
        double ratio; // |(l2 - l1) - l1coef (e2 - e1)| / |e2 - e1|
        bool skipped;
    };
    std::vector<PairCheck> pairs;
    bool ratios_decreasing = false;
    std::vector<double> omega_scaled; // Omega_eps(eps_hat) over the eps_hat grid
    bool omega_strictly_decreasing = false;
};

/// Lemma-level monotonicity checks: the increment law of lambda(eps) and the
/// strict decrease of Omega_eps(eps_hat) = (eps/eps_hat)^{4/(5-p)} omega(eps_hat).
inline MonotonicityReport lambda_monotonicity_check(const std::vector<std::pair<double, double>>& eps_pairs,
                                                    const Nonlinearity& nl, const ConstructConfig& cfg = {},
                                                    const std::vector<double>& eps_hat_grid = {}) {
    if (!nl.pure || nl.p <= 3.0 || nl.p >= 5.0)
        throw std::invalid_argument("lambda_monotonicity_check: requires pure power 3 < p < 5");
    MonotonicityReport rep;
    const auto o = omega1(nl, make_grid(512, 200.0, StretchSpec::algebraic()));
    for (const auto& [e1, e2] : eps_pairs) {
        if (e1 == e2) {
            rep.pairs.push_back({e1, e2, 0.0, true});
            continue;
        }
        // pin the pair to one shared grid so discretization bias cancels
        ConstructConfig c2 = cfg;
        GridPtr shared = construction_grid(o.lambda1 * std::min(e1, e2), cfg);
        c2.grid_rmax = shared->r_max();
        c2.grid_n = shared->size();
        auto w1 = construct_Q(e1, nl, c2);
        auto w2 = construct_Q(e2, nl, c2);
        const double ratio = std::abs((w2.lambda - w1.lambda) - o.lambda1 * (e2 - e1)) / std::abs(e2 - e1);
        rep.pairs.push_back({e1, e2, ratio, false});
    }
    rep.ratios_decreasing = true;
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& pc : rep.pairs) {
        if (pc.skipped) continue;
        if (pc.ratio >= prev) rep.ratios_decreasing = false;
        prev = pc.ratio;
    }

    if (!eps_hat_grid.empty()) {
        const double eps_ref = eps_hat_grid.front();
        const double alpha = 4.0 / (5.0 - nl.p);
        for (double eh : eps_hat_grid) {
            auto wh = construct_Q(eh, nl, cfg);
            rep.omega_scaled.push_back(std::pow(eps_ref / eh, alpha) * wh.omega);
        }
        rep.omega_strictly_decreasing = true;
        for (std::size_t i = 1; i < rep.omega_scaled.size(); ++i)
            if (rep.omega_scaled[i] >= rep.omega_scaled[i - 1]) rep.omega_strictly_decreasing = false;
    }
    return rep;
}

} // namespace cnls
