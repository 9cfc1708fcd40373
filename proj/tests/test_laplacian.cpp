#include <doctest.h>

#include "cnls/fd.hpp"
#include "cnls/profiles.hpp"
#include "oracles.hpp"

using namespace cnls;

TEST_CASE("laplacian of a constant vanishes") {
    auto g = make_grid(512, 200.0, StretchSpec::algebraic());
    RealField f(g, 3.7);
    RealField lap = apply_laplacian(f);
    CHECK(interior_sup(lap, 0) < 1e-7);
}

TEST_CASE("laplacian of a Gaussian matches the symbolic oracle") {
    auto g = make_grid(512, 200.0, StretchSpec::algebraic());
    RealField f = sample(g, [](double r) { return std::exp(-r * r); });
    RealField lap = apply_laplacian(f);
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double r = g->node(i);
        const double ref = (4.0 * r * r - 6.0) * std::exp(-r * r); // d^2/dr^2 + (2/r) d/dr of e^{-r^2}
        err = std::max(err, std::abs(lap.v[i] - ref));
    }
    CHECK(err < 1e-6);
}

TEST_CASE("Delta W = -W^5 within grid tolerance") {
    auto g = make_grid(512, 200.0, StretchSpec::algebraic());
    RealField lap = apply_laplacian(W_field(g));
    double err = 0.0;
    for (std::size_t i = 2; i + 2 < g->size(); ++i) {
        const double ref = -std::pow(W_val(g->node(i)), 5.0);
        err = std::max(err, std::abs(lap.v[i] - ref));
    }
    CHECK(err < 1e-6);
}

TEST_CASE("H W = -4 W^5: substitution anchor") {
    auto g = make_grid(512, 200.0, StretchSpec::algebraic());
    RealField W = W_field(g);
    RealField lap = apply_laplacian(W);
    double m = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) m = std::max(m, std::abs(-lap.v[i] + V_val(g->node(i)) * W.v[i]));
    CHECK(m == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("resonance residual shrinks at the scheme order") {
    auto g1 = make_grid(512, 200.0, StretchSpec::algebraic());
    auto g2 = make_grid(1024, 200.0, StretchSpec::algebraic());
    const double r1 = resonance_residual(g1);
    const double r2 = resonance_residual(g2);
    CHECK(r1 <= 1e-6);
    CHECK(r2 < r1);
    const double slope = std::log2(r1 / r2);
    CHECK(slope > 0.8 * 4.0); // within 20% of the nominal 4th order
    CHECK(slope < 1.3 * 4.0);
}

TEST_CASE("radial derivative and H1 seminorm") {
    auto g = make_grid(512, 200.0, StretchSpec::algebraic());
    RealField f = sample(g, [](double r) { return std::exp(-r * r); });
    RealField df = radial_derivative(f);
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double r = g->node(i);
        err = std::max(err, std::abs(df.v[i] + 2.0 * r * std::exp(-r * r)));
    }
    CHECK(err < 5e-6);

    // Pohozaev at eps = omega = 0: int |grad W|^2 = int W^6
    const double gradW = h1_seminorm(W_field(g));
    CHECK(gradW * gradW == doctest::Approx(oracle::W_power_closed(6.0)).epsilon(1e-8));
}
