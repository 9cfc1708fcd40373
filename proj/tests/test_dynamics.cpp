#include <doctest.h>

#include "cnls/dynamics.hpp"

using namespace cnls;

namespace {
const Nonlinearity nl4 = Nonlinearity::pure_power(4.0);
}

TEST_CASE("zero data stays zero") {
    StepConfig sc;
    auto g = make_grid(2000, 60.0, StretchSpec::uniform());
    EvolutionState st;
    st.u = ComplexField(g);
    st.dt = 1e-3;
    init_trackers(st, sc, 0.0);
    for (int i = 0; i < 100; ++i) step(st, sc);
    CHECK(lp_norm(st.u, std::numeric_limits<double>::infinity()) == 0.0);
}

TEST_CASE("free evolution matches the closed-form Gaussian") {
    StepConfig sc;
    sc.nonlinear = false;
    auto g = make_grid(20000, 60.0, StretchSpec::uniform());
    EvolutionState st;
    st.u = ComplexField(g);
    for (std::size_t i = 0; i < g->size(); ++i) st.u.v[i] = std::exp(-g->node(i) * g->node(i));
    st.dt = 2.5e-4;
    init_trackers(st, sc, 0.0);
    while (st.t < 1.0 - 1e-12) step(st, sc);
    record_sample(st, sc, 0.0);
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double r = g->node(i);
        const cplx den(1.0, 4.0 * st.t);
        err = std::max(err, std::abs(st.u.v[i] - std::pow(den, -1.5) * std::exp(-r * r / den)));
    }
    CHECK(err < 1e-6);
    CHECK(st.mass_drift < 1e-10); // Crank-Nicolson conserves the discrete mass exactly
}

TEST_CASE("virial tracker basics") {
    auto g = make_grid(4000, 60.0, StretchSpec::uniform());
    ComplexField u(g);
    SUBCASE("real field gives zero momentum") {
        for (std::size_t i = 0; i < g->size(); ++i) u.v[i] = std::exp(-0.2 * g->node(i) * g->node(i));
        CHECK(std::abs(track_virial(u)) < 1e-12);
    }
    SUBCASE("global phase leaves it zero") {
        const cplx phase = std::polar(1.0, 1.234);
        for (std::size_t i = 0; i < g->size(); ++i) u.v[i] = phase * std::exp(-0.2 * g->node(i) * g->node(i));
        CHECK(std::abs(track_virial(u)) < 1e-12);
    }
    SUBCASE("outgoing wave gives positive momentum") {
        for (std::size_t i = 0; i < g->size(); ++i) {
            const double r = g->node(i);
            u.v[i] = std::exp(-0.2 * (r - 5.0) * (r - 5.0)) * std::polar(1.0, 2.0 * r);
        }
        CHECK(track_virial(u) > 0.0);
    }
}

TEST_CASE("virial identity: d/dt momentum = 2 K") {
    StepConfig sc;
    sc.eps = 0.03;
    sc.nl = nl4;
    auto g = make_grid(12000, 60.0, StretchSpec::uniform());
    EvolutionState st;
    st.u = ComplexField(g);
    for (std::size_t i = 0; i < g->size(); ++i) st.u.v[i] = 0.9 * std::exp(-0.25 * g->node(i) * g->node(i));
    st.dt = 2.5e-4;
    init_trackers(st, sc, 0.0);
    double maxrel = 0.0;
    for (int s = 0; s < 6; ++s) {
        const double t_target = st.t + 0.05;
        while (st.t < t_target - 1e-12) step(st, sc);
        const double h = st.dt;
        const double M0 = track_virial(st.u);
        step(st, sc);
        const double Kmid = evaluate(st.u, sc.eps, 0.0, nl4).K;
        step(st, sc);
        const double M2 = track_virial(st.u);
        maxrel = std::max(maxrel, std::abs((M2 - M0) / (2.0 * h) - 2.0 * Kmid) / std::abs(2.0 * Kmid));
    }
    CHECK(maxrel < 1e-3);
}

TEST_CASE("step rejects a dt above the stability budget") {
    StepConfig sc;
    sc.dt_max = 1e-3;
    auto g = make_grid(2000, 60.0, StretchSpec::uniform());
    EvolutionState st;
    st.u = ComplexField(g);
    for (std::size_t i = 0; i < g->size(); ++i) st.u.v[i] = 3.0 * std::exp(-g->node(i) * g->node(i));
    st.dt = 1e-3; // amplitude scale ~ 3^4: budget ~ 6e-4
    CHECK_THROWS_AS(step(st, sc), std::invalid_argument);
}

TEST_CASE("dichotomy sweep on a feasible wave") {
    // compact-in-time smoke: small domain, a = 1 refusal plus one blowup
    auto w = construct_Q(0.03, nl4);
    ClassifyConfig cc;
    cc.r_max = 60.0;
    cc.dr = 0.01;
    cc.t_end = 8.0;
    cc.step.absorber = true;
    auto rows = dichotomy_sweep({1.0, 1.5}, w, cc);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].verdict.verdict == DichotomyVerdict::Kind::hypothesis_not_met);
    CHECK(rows[1].K < 0.0);
    CHECK(rows[1].S < rows[0].S);
    CHECK(rows[1].verdict.verdict == DichotomyVerdict::Kind::blowup_like);
    CHECK(rows[1].verdict.supgrad_growth_factor >= 1e3);
    CHECK(rows[1].verdict.dt_halving_confirmed);
    CHECK(rows[1].verdict.refinement_confirmed);
}

TEST_CASE("scattering data disperses with K staying positive") {
    // Gaussian data (no slow tail): the clean below-threshold scatter signature
    auto w = construct_Q(0.03, nl4);
    const WaveIntegrals I = wave_integrals(w);
    const double m = action_along_ray(w, I, 1.0);
    ClassifyConfig cc;
    cc.r_max = 60.0;
    cc.dr = 0.01;
    cc.t_end = 30.0;
    cc.step.absorber = true;
    cc.step.eps = w.eps;
    cc.step.nl = nl4;
    auto g = make_grid(std::size_t(cc.r_max / cc.dr), cc.r_max, StretchSpec::uniform());
    ComplexField u0(g);
    for (std::size_t i = 0; i < g->size(); ++i) u0.v[i] = 0.35 * std::exp(-0.25 * g->node(i) * g->node(i));
    auto v = classify(u0, w.eps, w.omega, nl4, m, cc);
    CHECK(v.S_u0 < m);
    CHECK(v.K_u0 > 0.0);
    CHECK(v.verdict == DichotomyVerdict::Kind::scatter_like);
    CHECK(v.l6_decay_factor >= 10.0);
}

TEST_CASE("soliton coherence over a short window") {
    auto w = construct_Q(0.03, nl4);
    auto res = soliton_coherence(w, 2.0, 1e-3, 120.0, 0.01);
    CHECK(res.max_amplitude_deviation < 5e-4);
    CHECK(res.mass_drift < 1e-8);
}
