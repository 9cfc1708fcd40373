#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cnls/common.hpp"
#include "cnls/special.hpp"

namespace cnls {

/// One asymptotic term  coef * r^{-power} * exp(-rate*r).
struct TailTerm {
    double coef = 0.0;
    double power = 0.0;
    double rate = 0.0;
};

/// Far-field model of a radial function beyond the grid: a short sum of
/// power/exponential terms. Used for analytic corrections of truncated
/// integrals and of the Yukawa convolution. An empty expression means
/// "decays fast enough to ignore" (e.g. Gaussian-class fields).
class TailExpr {
  public:
    TailExpr() = default;
    explicit TailExpr(std::vector<TailTerm> t) : terms_(std::move(t)) { compress(); }

    static TailExpr none() { return TailExpr{}; }

    static TailExpr single(double coef, double power, double rate = 0.0) {
        return TailExpr{{TailTerm{coef, power, rate}}};
    }

    const std::vector<TailTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    double eval(double r) const {
        double s = 0.0;
        for (const auto& t : terms_) s += t.coef * std::pow(r, -t.power) * std::exp(-t.rate * r);
        return s;
    }

    TailExpr operator+(const TailExpr& o) const {
        std::vector<TailTerm> t = terms_;
        t.insert(t.end(), o.terms_.begin(), o.terms_.end());
        return TailExpr{std::move(t)};
    }

    TailExpr operator*(const TailExpr& o) const {
        std::vector<TailTerm> t;
        t.reserve(terms_.size() * o.terms_.size());
        for (const auto& a : terms_)
            for (const auto& b : o.terms_) t.push_back(TailTerm{a.coef * b.coef, a.power + b.power, a.rate + b.rate});
        return TailExpr{std::move(t)};
    }

    TailExpr operator*(double s) const {
        std::vector<TailTerm> t = terms_;
        for (auto& x : t) x.coef *= s;
        return TailExpr{std::move(t)};
    }

    TailExpr pow_int(int n) const {
        if (n == 0) return single(1.0, 0.0);
        TailExpr acc = *this;
        for (int i = 1; i < n; ++i) acc = acc * (*this);
        return acc;
    }

    /// d/dr of the expression (still a TailExpr).
    TailExpr derivative() const {
        std::vector<TailTerm> t;
        t.reserve(2 * terms_.size());
        for (const auto& a : terms_) {
            if (a.power != 0.0) t.push_back(TailTerm{-a.coef * a.power, a.power + 1.0, a.rate});
            if (a.rate != 0.0) t.push_back(TailTerm{-a.coef * a.rate, a.power, a.rate});
        }
        return TailExpr{std::move(t)};
    }

    /// Drop terms negligible at radius R relative to the largest one.
    TailExpr pruned(double R, double rel = 1e-18) const {
        double big = 0.0;
        for (const auto& t : terms_) big = std::max(big, std::abs(t.coef * std::pow(R, -t.power) * std::exp(-t.rate * R)));
        std::vector<TailTerm> keep;
        for (const auto& t : terms_)
            if (std::abs(t.coef * std::pow(R, -t.power) * std::exp(-t.rate * R)) > rel * big) keep.push_back(t);
        return TailExpr{std::move(keep)};
    }

  private:
    void compress() {
        std::sort(terms_.begin(), terms_.end(), [](const TailTerm& a, const TailTerm& b) {
            if (a.rate != b.rate) return a.rate < b.rate;
            return a.power < b.power;
        });
        std::vector<TailTerm> out;
        for (const auto& t : terms_) {
            if (t.coef == 0.0) continue;
            if (!out.empty() && out.back().rate == t.rate && out.back().power == t.power)
                out.back().coef += t.coef;
            else
                out.push_back(t);
        }
        out.erase(std::remove_if(out.begin(), out.end(), [](const TailTerm& t) { return t.coef == 0.0; }), out.end());
        terms_ = std::move(out);
    }

    std::vector<TailTerm> terms_;
};

/// Generalized binomial tail of (1 + c/r^2)^{e} * amp * r^{-m0}:
///   amp * r^{-m0} * sum_k binom(e, k) c^k r^{-2k}.
inline TailExpr binomial_tail(double amp, double m0, double c, double e, int nterms) {
    std::vector<TailTerm> t;
    double bk = 1.0; // binom(e, k) * c^k
    for (int k = 0; k < nterms; ++k) {
        t.push_back(TailTerm{amp * bk, m0 + 2.0 * k, 0.0});
        bk *= (e - k) / double(k + 1) * c;
    }
    return TailExpr{std::move(t)};
}

/// int_R^infty 4 pi r^2 expr(r) dr. Power-only terms require power > 3;
/// exponential terms use the upper incomplete gamma. Returns +inf when a
/// power-only term would diverge.
inline double tail_integral_3d(const TailExpr& expr, double R) {
    double s = 0.0;
    for (const auto& t : expr.terms()) {
        if (t.rate == 0.0) {
            if (t.power <= 3.0) return std::numeric_limits<double>::infinity();
            s += 4.0 * pi * t.coef * std::pow(R, 3.0 - t.power) / (t.power - 3.0);
        } else {
            // 4 pi c int_R r^{2-m} e^{-rate r} dr = 4 pi c rate^{m-3} Gamma(3-m, rate R)
            s += 4.0 * pi * t.coef * std::pow(t.rate, t.power - 3.0) * gamma_upper(3.0 - t.power, t.rate * R);
        }
    }
    return s;
}

/// int_R^infty s * expr(s) * e^{-lam (s - R)} ds  (used by the Yukawa
/// convolution suffix). All exponents are kept <= 0 for stability.
inline double tail_suffix_weighted(const TailExpr& expr, double R, double lam) {
    double s = 0.0;
    for (const auto& t : expr.terms()) {
        const double rate = t.rate + lam;
        if (rate <= 0.0) throw std::invalid_argument("tail_suffix_weighted: nonpositive total rate");
        // c e^{lam R} int_R s^{1-m} e^{-rate s} ds = c e^{lam R} rate^{m-2} Gamma(2-m, rate R)
        // evaluate as c rate^{m-2} [ e^{lam R} Gamma(2-m, rate R) ]; the product stays bounded
        const double g = gamma_upper(2.0 - t.power, rate * R);
        s += t.coef * std::pow(rate, t.power - 2.0) * std::exp(lam * R + std::log(g < 0 ? -g : g)) * (g < 0 ? -1.0 : 1.0);
    }
    return s;
}

} // namespace cnls
