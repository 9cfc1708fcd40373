#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>

#include "cnls/fd.hpp"
#include "cnls/field.hpp"
#include "cnls/special.hpp"

namespace cnls {

// Closed-form static objects of the unperturbed quintic problem:
//   W    = (1 + r^2/3)^{-1/2}         (Delta W + W^5 = 0)
//   LW   = W^3 - W/2                  (H LW = 0, H = -Delta - 5 W^4)
//   psi  = LW / sqrt(3 pi)
//   V    = -5 W^4

inline double W_val(double r) { return 1.0 / std::sqrt(1.0 + r * r / 3.0); }
inline double LambdaW_val(double r) {
    const double w = W_val(r);
    return w * w * w - 0.5 * w;
}
inline double psi_val(double r) { return LambdaW_val(r) / std::sqrt(3.0 * pi); }
inline double V_val(double r) {
    const double w = W_val(r);
    return -5.0 * w * w * w * w;
}

/// Far-field series of W^p: 3^{p/2} r^{-p} (1 + 3/r^2)^{-p/2}.
inline TailExpr W_pow_tail(double p, int nterms = 5) {
    return binomial_tail(std::pow(3.0, 0.5 * p), p, 3.0, -0.5 * p, nterms);
}

inline TailExpr LambdaW_tail(int nterms = 5) { return W_pow_tail(3.0, nterms) + W_pow_tail(1.0, nterms) * (-0.5); }
inline TailExpr psi_tail(int nterms = 5) { return LambdaW_tail(nterms) * (1.0 / std::sqrt(3.0 * pi)); }
inline TailExpr V_tail(int nterms = 5) { return W_pow_tail(4.0, nterms) * (-5.0); }
inline TailExpr Vpsi_tail(int nterms = 6) {
    return (W_pow_tail(7.0, nterms) + W_pow_tail(5.0, nterms) * (-0.5)) * (-5.0 / std::sqrt(3.0 * pi));
}

inline RealField W_field(const GridPtr& g) { return sample(g, W_val, W_pow_tail(1.0)); }
inline RealField W_pow_field(const GridPtr& g, double p) {
    return sample(
        g, [p](double r) { return std::pow(W_val(r), p); }, W_pow_tail(p));
}
inline RealField LambdaW_field(const GridPtr& g) { return sample(g, LambdaW_val, LambdaW_tail()); }
inline RealField psi_field(const GridPtr& g) { return sample(g, psi_val, psi_tail()); }
inline RealField V_field(const GridPtr& g) { return sample(g, V_val, V_tail()); }
inline RealField Vpsi_field(const GridPtr& g) {
    return sample(g, [](double r) { return V_val(r) * psi_val(r); }, Vpsi_tail());
}

/// Perturbing nonlinearity f. Pure powers f(q) = sign |q|^{p-1} q are the
/// primary case; custom nonlinearities supply evaluator triples and growth
/// exponents (Assumption 1 is the caller's contract, checked numerically
/// through the <LW, f(W)> pairing).
struct Nonlinearity {
    bool pure = true;
    double p = 4.0;
    double sign = 1.0;

    std::function<double(double)> f_fn, fp_fn, F_fn;
    double p1 = 0.0, p2 = 0.0;

    static Nonlinearity pure_power(double p, double sign = 1.0) {
        if (!(p > 2.0) || p == 5.0) {
            if (p == 5.0) throw assumption_error("pure power p = 5 is the critical exponent itself");
            throw std::invalid_argument("pure power requires p > 2");
        }
        Nonlinearity n;
        n.pure = true;
        n.p = p;
        n.sign = sign;
        n.p1 = n.p2 = p;
        return n;
    }

    /// `fW_tail` is the optional far-field model of f(W(r)); without it,
    /// pairings against slowly decaying profiles carry an O(1/r_max)
    /// truncation error.
    static Nonlinearity custom(std::function<double(double)> f, std::function<double(double)> fp,
                               std::function<double(double)> F, double p1, double p2, TailExpr fW_tail = {}) {
        Nonlinearity n;
        n.pure = false;
        n.f_fn = std::move(f);
        n.fp_fn = std::move(fp);
        n.F_fn = std::move(F);
        n.p1 = p1;
        n.p2 = p2;
        n.fw_tail_ = std::move(fW_tail);
        return n;
    }

    double f(double q) const {
        if (pure) return sign * std::pow(std::abs(q), p - 1.0) * q;
        return f_fn(q);
    }
    double fprime(double q) const {
        if (pure) return sign * p * std::pow(std::abs(q), p - 1.0);
        return fp_fn(q);
    }
    double F(double q) const {
        if (pure) return sign * std::pow(std::abs(q), p + 1.0) / (p + 1.0);
        return F_fn(q);
    }

    /// f(W) sampled with its far-field model.
    RealField fW_field(const GridPtr& g) const {
        RealField out = sample(g, [this](double r) { return f(W_val(r)); });
        out.tail = pure ? W_pow_tail(p) * sign : fw_tail_;
        return out;
    }

  private:
    TailExpr fw_tail_;
};

/// <LW, f(W)> by quadrature. For pure powers this must reproduce the closed
/// form (1/2 - 3/(p+1)) int W^{p+1}.
inline double pairing_LambdaW_fW(const Nonlinearity& nl, const GridPtr& g) {
    return inner(LambdaW_field(g), nl.fW_field(g));
}

struct Omega1 {
    double lambda1; // -<LW, f(W)> / (6 pi)
    double omega1;  // lambda1^2
};

inline Omega1 omega1(const Nonlinearity& nl, const GridPtr& g) {
    const double pair = pairing_LambdaW_fW(nl, g);
    if (!(pair < 0.0))
        throw assumption_error("<LambdaW, f(W)> = " + std::to_string(pair) + " >= 0: construction assumption fails");
    const double l1 = -pair / (6.0 * pi);
    return {l1, l1 * l1};
}

/// || (-Delta - 5 W^4) LW ||_inf over interior nodes; the exact value is 0.
inline double resonance_residual(const GridPtr& g) {
    RealField lw = LambdaW_field(g);
    RealField lap = apply_laplacian(lw);
    RealField res(g);
    for (std::size_t i = 0; i < g->size(); ++i) res.v[i] = -lap.v[i] + V_val(g->node(i)) * lw.v[i];
    return interior_sup(res, 2);
}

/// Memoized per-(grid, p) integrals reused across construction iterations.
class ProfileSet {
  public:
    explicit ProfileSet(GridPtr g) : grid_(std::move(g)) {}

    const GridPtr& grid() const { return grid_; }

    double int_W6() { return int_W_pow(6.0); }

    double int_W_pow(double m) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = wpow_.find(m);
        if (it != wpow_.end()) return it->second;
        const double val = quad(W_pow_field(grid_, m));
        wpow_[m] = val;
        return val;
    }

    double int_Vpsi() {
        std::lock_guard<std::mutex> lock(mu_);
        if (!vpsi_) vpsi_ = quad(Vpsi_field(grid_));
        return *vpsi_;
    }

    double pairing(const Nonlinearity& nl) { return pairing_LambdaW_fW(nl, grid_); }

  private:
    GridPtr grid_;
    std::mutex mu_;
    std::map<double, double> wpow_;
    std::optional<double> vpsi_;
};

} // namespace cnls
