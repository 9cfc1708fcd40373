#include <doctest.h>

#include <random>

#include "cnls/functionals.hpp"
#include "oracles.hpp"

using namespace cnls;

namespace {
const Nonlinearity nl4 = Nonlinearity::pure_power(4.0);
}

TEST_CASE("evaluate: zero field and the W anchor") {
    auto g = make_grid(512, 200.0, StretchSpec::algebraic());
    SUBCASE("zeros") {
        FunctionalReport r = evaluate(RealField(g), 0.05, 1e-3, nl4);
        CHECK(r.mass == 0.0);
        CHECK(r.energy == 0.0);
        CHECK(r.action == 0.0);
        CHECK(r.K == 0.0);
        CHECK(r.K0 == 0.0);
    }
    SUBCASE("u = W at eps = omega = 0") {
        // W is not square integrable; mass is infinite by the tail model,
        // but K0 and the action only involve the finite pieces here
        RealField W = W_field(g);
        const double g2 = h1_seminorm(W);
        const double i6 = quad(W_pow_field(g, 6.0));
        CHECK(g2 * g2 == doctest::Approx(i6).epsilon(1e-8));
        // K0(W) = int|grad W|^2 - int W^6 ~ 0; action E0(W) = (1/3) int W^6
        const double action0 = 0.5 * g2 * g2 - i6 / 6.0;
        CHECK(action0 == doctest::Approx(i6 / 3.0).epsilon(1e-8));
        CHECK(action0 == doctest::Approx(4.2736640).epsilon(1e-5)); // (1/3) 3 sqrt3 pi^2/4
    }
}

TEST_CASE("two-form consistency: I equals its positive expansion") {
    auto g = make_grid(512, 200.0, StretchSpec::algebraic());
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N(0.0, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        RealField u(g);
        const double a = N(rng), b = 0.2 + 0.1 * trial;
        for (std::size_t i = 0; i < g->size(); ++i) {
            const double r = g->node(i);
            u.v[i] = a * std::exp(-b * r * r) + 0.3 * N(rng) * std::exp(-r);
        }
        const double eps = 0.07, omega = 0.3;
        FunctionalReport rep = evaluate(u, eps, omega, nl4);
        const double p = 4.0;
        // I = ((p-7/3)/(2(p-1))) grad2 + ((5-p)/(6(p-1))) l6 + (omega/2) l2
        const double g2 = h1_seminorm(u);
        RealField u6(g), u2(g);
        for (std::size_t i = 0; i < g->size(); ++i) {
            u6.v[i] = std::pow(u.v[i], 6);
            u2.v[i] = u.v[i] * u.v[i];
        }
        const double expanded = (p - 7.0 / 3.0) / (2.0 * (p - 1.0)) * g2 * g2 +
                                (5.0 - p) / (6.0 * (p - 1.0)) * quad(u6) + 0.5 * omega * quad(u2);
        CHECK(rep.I == doctest::Approx(expanded).epsilon(1e-12));
    }
}

TEST_CASE("scaling operators") {
    auto g = make_grid(1024, 400.0, StretchSpec::algebraic());
    SUBCASE("mu = 1 is the identity") {
        RealField u = sample(g, [](double r) { return std::exp(-0.5 * r * r); });
        RealField t = scale_T(1.0, u);
        CHECK(sup_diff(t, u) < 1e-12);
    }
    SUBCASE("S_mu preserves L6 and H1-dot on W") {
        RealField W = W_field(g);
        const double l6 = lp_norm(W, 6.0);
        for (double mu : {0.5, 2.0}) {
            RealField s = scale_S(mu, W);
            CHECK(lp_norm(s, 6.0) == doctest::Approx(l6).epsilon(1e-6));
            CHECK(h1_seminorm(s) == doctest::Approx(h1_seminorm(W)).epsilon(1e-6));
        }
    }
    SUBCASE("T_mu preserves L2 on a Gaussian") {
        RealField u = sample(g, [](double r) { return std::exp(-r * r); });
        for (double mu : {0.5, 2.0}) CHECK(lp_norm(scale_T(mu, u), 2.0) == doctest::Approx(lp_norm(u, 2.0)).epsilon(1e-8));
    }
    SUBCASE("extreme mu is rejected") {
        RealField u = sample(g, [](double r) { return std::exp(-r * r); });
        CHECK_THROWS(scale_T(1e-3, u));
        CHECK_THROWS(scale_S(1e4, u));
    }
}

TEST_CASE("K is the scaling derivative of the action") {
    auto g = make_grid(1024, 400.0, StretchSpec::algebraic());
    RealField u = sample(g, [](double r) { return 0.8 * std::exp(-0.3 * r * r); });
    const double eps = 0.05, omega = 2e-3;
    const double h = 1e-4;
    const double Sp = evaluate(scale_T(1.0 + h, u), eps, omega, nl4).action;
    const double Sm = evaluate(scale_T(1.0 - h, u), eps, omega, nl4).action;
    const double dS = (Sp - Sm) / (2.0 * h);
    const double K = evaluate(u, eps, omega, nl4).K;
    CHECK(dS == doctest::Approx(K).epsilon(1e-6));
}

TEST_CASE("Pohozaev residuals of a constructed wave") {
    auto w = construct_Q(0.02, nl4);
    FunctionalReport rep = evaluate(w);
    CHECK(rep.pohozaev_residual_K <= 1e-8);
    CHECK(rep.pohozaev_residual_K0 <= 1e-8);
    // ray test: a = 1 maximizes the action among sampled dilations of Q
    const WaveIntegrals I = wave_integrals(w);
    const double S1 = action_along_ray(w, I, 1.0);
    CHECK(S1 == doctest::Approx(rep.action).epsilon(1e-10));
    for (double a : {0.1, 0.4, 0.7, 0.9, 1.1, 1.4, 2.0}) {
        CAPTURE(a);
        CHECK(action_along_ray(w, I, a) < S1);
    }
    // K changes sign across a = 1
    CHECK(K_along_ray(w, I, 0.7) > 0.0);
    CHECK(K_along_ray(w, I, 1.3) < 0.0);
}

TEST_CASE("action gap against the leading-order prediction") {
    auto gap = action_gap(0.004, nl4);
    CHECK(gap.gap < 0.0);
    CHECK(gap.predicted < 0.0);
    CHECK(gap.gap / gap.predicted == doctest::Approx(1.0).epsilon(0.10));
    // predicted = -(1/10) eps int W^5
    CHECK(gap.predicted == doctest::Approx(-0.1 * 0.004 * oracle::W_power_closed(5.0)).epsilon(1e-6));
}

TEST_CASE("scaled family solves the rescaled equation") {
    auto base = construct_Q(0.01, nl4);
    SUBCASE("identity at eps = eps_hat") {
        auto same = scaled_family(0.01, 0.01, base);
        CHECK(same.omega == doctest::Approx(base.omega).epsilon(1e-12));
        CHECK(std::abs(interp_radial(same.Q, 1.0) - interp_radial(base.Q, 1.0)) < 1e-9);
    }
    SUBCASE("mu = 4 family member at eps = 0.02") {
        auto fam = scaled_family(0.02, 0.01, base);
        CHECK(fam.omega == doctest::Approx(16.0 * base.omega).epsilon(1e-12));
        CHECK(fam.diag.pde_residual < 5e-6); // interpolation tolerance
    }
    SUBCASE("family frequency grows without bound as eps_hat -> 0") {
        double prev = 0.0;
        for (double eh : {0.01, 0.008, 0.006, 0.004}) {
            auto b = construct_Q(eh, nl4);
            auto fam = scaled_family(0.02, eh, b);
            CHECK(fam.omega > prev);
            prev = fam.omega;
        }
    }
}
