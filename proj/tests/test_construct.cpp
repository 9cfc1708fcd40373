#include <doctest.h>

#include <random>

#include "cnls/construct.hpp"
#include "oracles.hpp"

using namespace cnls;

TEST_CASE("nonlinear_N: cancellation and binomial expansion") {
    auto g = make_grid(256, 120.0, StretchSpec::algebraic());
    auto nl = Nonlinearity::pure_power(4.0);
    SUBCASE("eta = 0 gives the zero field exactly") {
        RealField N = nonlinear_N(RealField(g), 0.05, nl);
        for (double x : N.v) CHECK(x == 0.0);
    }
    SUBCASE("eta = delta W at eps = 0: exact quintic binomial") {
        const double d = 1e-6;
        RealField eta(g);
        for (std::size_t i = 0; i < g->size(); ++i) eta.v[i] = d * W_val(g->node(i));
        RealField N = nonlinear_N(eta, 0.0, nl);
        for (std::size_t i = 0; i < g->size(); ++i) {
            const double w5 = std::pow(W_val(g->node(i)), 5);
            const double ref = w5 * (10 * d * d + 10 * d * d * d + 5 * d * d * d * d + d * d * d * d * d);
            CHECK(N.v[i] == doctest::Approx(ref).epsilon(1e-10));
        }
        // quadratic dominance
        CHECK(lp_norm(N, std::numeric_limits<double>::infinity()) ==
              doctest::Approx(10.0 * d * d).epsilon(1e-5));
    }
    SUBCASE("pointwise bound of the paper on random fields") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> U(-0.1, 0.1);
        const double eps = 0.03;
        for (int trial = 0; trial < 20; ++trial) {
            RealField eta(g);
            for (auto& x : eta.v) x = U(rng);
            RealField N = nonlinear_N(eta, eps, nl);
            for (std::size_t i = 0; i < g->size(); ++i) {
                const double w = W_val(g->node(i)), e = std::abs(eta.v[i]);
                const double bound = w * w * w * e * e + std::pow(e, 5) +
                                     eps * e * 2.0 * std::pow(std::max(w, e), 3.0) + 2.0 * eps * std::pow(e, 4.0);
                CHECK(std::abs(N.v[i]) <= 30.0 * bound + 1e-14);
            }
        }
    }
}

TEST_CASE("rhs_F assembly") {
    auto g = make_grid(256, 120.0, StretchSpec::algebraic());
    auto nl = Nonlinearity::pure_power(4.0);
    SUBCASE("eta = 0, eps = 0: pure -lambda^2 W") {
        RealField F = rhs_F(0.0, 0.1, RealField(g), nl);
        for (std::size_t i = 0; i < g->size(); ++i)
            CHECK(F.v[i] == doctest::Approx(-0.01 * W_val(g->node(i))).epsilon(1e-14));
    }
    SUBCASE("eta = 0: -lambda^2 W + eps W^4") {
        const double eps = 0.05, lam = std::sqrt(3.0) / 15.0 * eps;
        RealField F = rhs_F(eps, lam, RealField(g), nl);
        for (std::size_t i = 0; i < g->size(); ++i) {
            const double w = W_val(g->node(i));
            CHECK(F.v[i] == doctest::Approx(-lam * lam * w + eps * w * w * w * w).epsilon(1e-13));
        }
    }
}

TEST_CASE("solve_lambda: leading order, rejection, Lipschitz scaling") {
    ConstructConfig cfg;
    auto g = construction_grid(std::sqrt(3.0) / 15.0 * 0.01, cfg);
    const double l1 = std::sqrt(3.0) / 15.0;
    SUBCASE("eta = 0, p = 4, eps = 0.01") {
        const double lam = solve_lambda(0.01, RealField(g), Nonlinearity::pure_power(4.0), cfg);
        CHECK(lam == doctest::Approx(0.01 * l1).epsilon(0.10));
        CHECK(lam / (0.01 * l1) > 0.5);
        CHECK(lam / (0.01 * l1) < 1.5);
    }
    SUBCASE("p = 5 rejected") { CHECK_THROWS_AS(Nonlinearity::pure_power(5.0), assumption_error); }
    SUBCASE("lambda is Lipschitz in eta with an eps-small constant") {
        auto nl = Nonlinearity::pure_power(4.0);
        auto sensitivity = [&](double eps) {
            RealField eta(g);
            for (std::size_t i = 0; i < g->size(); ++i) eta.v[i] = 0.5 * eps * std::exp(-0.3 * g->node(i));
            RealField eta2 = eta;
            const double bump = 1e-5 * eps;
            for (std::size_t i = 0; i < g->size(); ++i) eta2.v[i] += bump * std::exp(-0.2 * g->node(i));
            const double la = solve_lambda(eps, eta, nl, cfg);
            const double lb = solve_lambda(eps, eta2, nl, cfg);
            return std::abs(la - lb) / sup_diff(eta, eta2);
        };
        const double s_small = sensitivity(0.002), s_big = sensitivity(0.02);
        CHECK(s_small < s_big); // constant shrinks with eps (~ eps^{delta_1})
        CHECK(s_big < 1.0);
    }
}

TEST_CASE("construct_Q at p = 4") {
    auto nl = Nonlinearity::pure_power(4.0);
    SUBCASE("eps = 0.01: invariants and the Newton oracle") {
        auto w = construct_Q(0.01, nl);
        // omega = omega1 eps^2 (1 + o(1))
        CHECK(w.omega / (0.01 * 0.01) == doctest::Approx(1.0 / 75.0).epsilon(0.10));
        // ||eta||_inf <= R eps
        CHECK(lp_norm(w.eta, std::numeric_limits<double>::infinity()) <= 10.0 * 0.01);
        // positivity of the profile
        for (double q : w.Q.v) CHECK(q > 0.0);
        // stationary residual
        CHECK(w.diag.pde_residual < 1e-9);
        CHECK(w.diag.orth_residual < 1e-10);
        // the G fixed point is genuinely reached
        ResolventWorkspace ws = ResolventWorkspace::for_H(w.grid, w.lambda);
        ConstructConfig cfg;
        WaveDiagnostics d;
        RealField G = solve_eta(0.01, w.lambda, w.eta, nl, cfg, ws, &d);
        CHECK(sup_diff(G, w.eta) < 1e-10);

        // oracle equivalence: same discrete equation, agreement to 1e-8
        auto wn = newton_oracle(0.01, w.omega, w.Q, nl);
        CHECK(wn.diag.outer_iterations <= 5);
        CHECK(sup_diff(wn.Q, w.Q) < 1e-8);
    }
    SUBCASE("eps = 0 limit of the oracle: W itself is exact") {
        ConstructConfig cfg;
        auto g = construction_grid(std::sqrt(3.0) / 15.0 * 0.01, cfg);
        auto wn = newton_oracle(0.0, 0.0, W_field(g), nl);
        CHECK(wn.diag.outer_iterations == 0);
        CHECK(lp_norm(wn.eta, std::numeric_limits<double>::infinity()) == 0.0);
    }
    SUBCASE("eps beyond the branch fold is refused") {
        CHECK_THROWS_AS(construct_Q(0.05, nl), no_convergence_error);
    }
}

TEST_CASE("scaling of the correction: eta norm rates") {
    auto nl = Nonlinearity::pure_power(4.0);
    auto w1 = construct_Q(0.004, nl);
    auto w2 = construct_Q(0.016, nl);
    for (double r : {4.0, 6.0, 12.0}) {
        const double n1 = lp_norm(w1.eta, r) * std::pow(0.004, -(1.0 - 3.0 / r));
        const double n2 = lp_norm(w2.eta, r) * std::pow(0.016, -(1.0 - 3.0 / r));
        CAPTURE(r);
        CHECK(std::max(n1, n2) / std::min(n1, n2) < 1.6);
    }
    const double h1 = h1_seminorm(w1.eta) / std::sqrt(0.004);
    const double h2 = h1_seminorm(w2.eta) / std::sqrt(0.016);
    CHECK(std::max(h1, h2) / std::min(h1, h2) < 1.6);
}

TEST_CASE("lambda increment law and scaled frequency monotonicity") {
    auto nl = Nonlinearity::pure_power(4.0);
    ConstructConfig cfg;
    auto rep = lambda_monotonicity_check({{0.02, 0.021}, {0.01, 0.0105}, {0.01, 0.01}}, nl, cfg,
                                         {0.004, 0.008, 0.016, 0.024});
    REQUIRE(rep.pairs.size() == 3);
    CHECK(rep.pairs[2].skipped);
    CHECK(rep.pairs[0].ratio > rep.pairs[1].ratio); // shrinking pairs -> smaller deviation
    CHECK(rep.ratios_decreasing);
    REQUIRE(rep.omega_scaled.size() == 4);
    CHECK(rep.omega_strictly_decreasing);
}
