#include <doctest.h>

#include "cnls/special.hpp"
#include "cnls/tail.hpp"
#include "oracles.hpp"

using namespace cnls;

TEST_CASE("upper incomplete gamma vs quadrature oracle") {
    // covers the (a, x) ranges used by tail corrections: a in [-6, 2], x in [0.02, 40]
    for (double a : {-5.5, -3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.7, 2.0}) {
        for (double x : {0.02, 0.2, 0.9, 1.5, 3.0, 13.0, 26.0, 40.0}) {
            const double got = gamma_upper(a, x);
            // oracle: int_x^inf t^{a-1} e^{-t} dt, substituting t = x + s/(1-s)
            const double ref = oracle::integrate(
                [&](double s) {
                    const double t = x + s / (1.0 - s);
                    return std::pow(t, a - 1.0) * std::exp(-t) / ((1.0 - s) * (1.0 - s));
                },
                0.0, 1.0 - 1e-10, 1e-13);
            CAPTURE(a);
            CAPTURE(x);
            CHECK(got == doctest::Approx(ref).epsilon(1e-8));
        }
    }
}

TEST_CASE("gamma_upper special values") {
    CHECK(gamma_upper(1.0, 2.5) == doctest::Approx(std::exp(-2.5)).epsilon(1e-14));
    // Gamma(2, x) = (x+1) e^{-x}
    CHECK(gamma_upper(2.0, 0.7) == doctest::Approx(1.7 * std::exp(-0.7)).epsilon(1e-13));
}

TEST_CASE("exp moments vs oracle") {
    for (double alpha : {0.0, 1e-6, 0.01, 0.3, 2.0, 40.0}) {
        for (double D : {1e-4, 0.1, 1.0, 7.0}) {
            for (int j : {0, 1, 2, 3}) {
                const double got = exp_moment(j, alpha, D);
                const double ref =
                    oracle::integrate([&](double t) { return std::pow(t, j) * std::exp(-alpha * t); }, 0.0, D, 1e-14);
                CAPTURE(alpha);
                CAPTURE(D);
                CAPTURE(j);
                CHECK(got == doctest::Approx(ref).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("W power closed form sanity") {
    // int W^6 = 3 sqrt(3) pi^2 / 4, int W^5 = 4 sqrt(3) pi, int W^4 = 3 sqrt(3) pi^2
    CHECK(W_power_integral(6.0) == doctest::Approx(3.0 * std::sqrt(3.0) * pi * pi / 4.0).epsilon(1e-13));
    CHECK(W_power_integral(5.0) == doctest::Approx(4.0 * std::sqrt(3.0) * pi).epsilon(1e-13));
    CHECK(W_power_integral(4.0) == doctest::Approx(3.0 * std::sqrt(3.0) * pi * pi).epsilon(1e-13));
    CHECK_THROWS(W_power_integral(3.0));
}

TEST_CASE("tail integral of power/exponential terms") {
    const double R = 200.0;
    // pure power: int_R 4 pi r^2 c r^-6 dr
    TailExpr t = TailExpr::single(27.0, 6.0);
    const double ref = 4.0 * pi * 27.0 / (3.0 * R * R * R);
    CHECK(tail_integral_3d(t, R) == doctest::Approx(ref).epsilon(1e-13));

    // exponential: int_R 4 pi r^2 c e^{-mu r}/r^2 dr = 4 pi c e^{-mu R}/mu
    const double mu = 0.013;
    TailExpr e = TailExpr::single(2.0, 2.0, mu);
    CHECK(tail_integral_3d(e, R) == doctest::Approx(4.0 * pi * 2.0 * std::exp(-mu * R) / mu).epsilon(1e-11));

    // divergent power flagged
    CHECK(std::isinf(tail_integral_3d(TailExpr::single(1.0, 2.0), R)));
}

TEST_CASE("tail algebra: product and derivative") {
    TailExpr a = TailExpr::single(2.0, 1.0, 0.0) + TailExpr::single(-1.0, 3.0, 0.0);
    TailExpr b = TailExpr::single(0.5, 2.0, 0.1);
    TailExpr ab = a * b;
    const double r = 37.0;
    CHECK(ab.eval(r) == doctest::Approx(a.eval(r) * b.eval(r)).epsilon(1e-14));
    TailExpr da = a.derivative();
    const double h = 1e-5;
    CHECK(da.eval(r) == doctest::Approx((a.eval(r + h) - a.eval(r - h)) / (2 * h)).epsilon(1e-8));
}
