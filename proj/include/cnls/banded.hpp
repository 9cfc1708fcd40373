#pragma once

#include <cmath>
#include <vector>

#include "cnls/common.hpp"

namespace cnls {

/// General banded matrix with kl subdiagonals and ku superdiagonals, stored
/// LAPACK-style with kl extra superdiagonals for partial-pivoting fill.
class BandedMatrix {
  public:
    BandedMatrix(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), rows_(2 * kl + ku + 1), ab_(std::size_t(rows_) * n, 0.0) {}

    int size() const { return n_; }

    double& at(int i, int j) { return ab_[idx(i, j)]; }
    double get(int i, int j) const {
        if (j - i > ku_ + kl_ || i - j > kl_) return 0.0;
        return ab_[idx(i, j)];
    }

    /// In-place LU with partial pivoting.
    void factor() {
        ipiv_.assign(n_, 0);
        int ju = 0;
        for (int j = 0; j < n_; ++j) {
            const int km = std::min(kl_, n_ - 1 - j);
            int t_best = 0;
            double best = std::abs(ab_[idx(j, j)]);
            for (int t = 1; t <= km; ++t) {
                const double v = std::abs(ab_[idx(j + t, j)]);
                if (v > best) {
                    best = v;
                    t_best = t;
                }
            }
            ipiv_[j] = j + t_best;
            ju = std::max(ju, std::min(j + ku_ + t_best, n_ - 1));
            if (t_best != 0)
                for (int c = j; c <= ju; ++c) std::swap(ab_[idx(j, c)], ab_[idx(j + t_best, c)]);
            const double piv = ab_[idx(j, j)];
            if (piv == 0.0 || !std::isfinite(piv))
                throw factorization_error("banded LU: zero or non-finite pivot at column " + std::to_string(j));
            for (int t = 1; t <= km; ++t) {
                const double m = ab_[idx(j + t, j)] / piv;
                ab_[idx(j + t, j)] = m;
                if (m != 0.0)
                    for (int c = j + 1; c <= ju; ++c) ab_[idx(j + t, c)] -= m * ab_[idx(j, c)];
            }
        }
        factored_ = true;
    }

    /// Solve A x = b using the stored factorization.
    std::vector<double> solve(std::vector<double> b) const {
        if (!factored_) throw std::logic_error("banded solve before factor()");
        for (int j = 0; j < n_; ++j) {
            if (ipiv_[j] != j) std::swap(b[j], b[ipiv_[j]]);
            const int km = std::min(kl_, n_ - 1 - j);
            for (int t = 1; t <= km; ++t) b[j + t] -= ab_[idx(j + t, j)] * b[j];
        }
        for (int j = n_ - 1; j >= 0; --j) {
            const int hi = std::min(n_ - 1, j + ku_ + kl_);
            double s = b[j];
            for (int c = j + 1; c <= hi; ++c) s -= ab_[idx(j, c)] * b[c];
            b[j] = s / ab_[idx(j, j)];
        }
        return b;
    }

  private:
    std::size_t idx(int i, int j) const { return std::size_t(kl_ + ku_ + i - j) * n_ + j; }

    int n_, kl_, ku_, rows_;
    std::vector<double> ab_;
    std::vector<int> ipiv_;
    bool factored_ = false;
};

} // namespace cnls
