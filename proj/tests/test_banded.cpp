#include <doctest.h>

#include <random>

#include "cnls/banded.hpp"

using namespace cnls;

TEST_CASE("banded LU solves random systems") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 60, kl = 5, ku = 4;
        std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
        BandedMatrix A(n, kl, ku);
        for (int i = 0; i < n; ++i)
            for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + ku); ++j) {
                const double v = U(rng) + (i == j ? 3.0 : 0.0);
                dense[i][j] = v;
                A.at(i, j) = v;
            }
        std::vector<double> x_true(n), b(n, 0.0);
        for (int i = 0; i < n; ++i) x_true[i] = U(rng);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) b[i] += dense[i][j] * x_true[j];
        A.factor();
        auto x = A.solve(b);
        for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(x_true[i]).epsilon(1e-10));
    }
}

TEST_CASE("banded LU pivots when needed") {
    BandedMatrix A(4, 2, 2);
    // first pivot is zero without row exchange
    A.at(0, 0) = 0.0;
    A.at(0, 1) = 2.0;
    A.at(1, 0) = 1.0;
    A.at(1, 1) = 1.0;
    A.at(2, 2) = 1.0;
    A.at(3, 3) = 1.0;
    A.factor();
    auto x = A.solve({2.0, 3.0, 1.0, 1.0});
    // system: 2 x1 = 2 -> x1 = 1; x0 + x1 = 3 -> x0 = 2
    CHECK(x[0] == doctest::Approx(2.0));
    CHECK(x[1] == doctest::Approx(1.0));
}
