#pragma once

#include <optional>

#include "cnls/banded.hpp"
#include "cnls/fd.hpp"
#include "cnls/profiles.hpp"

namespace cnls {

namespace detail {

/// Per-grid geometry of the Yukawa convolution: each cell [r_{j-1}, r_j]
/// (extended node 0 at r = 0) carries a cubic interpolation of g(s) = s f(s)
/// through four neighbouring samples, expressed in the scaled local
/// coordinate u = (s - a)/D.
struct ConvCells {
    struct Cell {
        int node[4];      // extended sample indices (0 = axis, value 0)
        double poly[4][4]; // poly[j][k]: u^j coefficient of the k-th Lagrange basis
        double D;          // cell width
        double a;          // left endpoint radius
    };
    std::vector<Cell> cells;

    explicit ConvCells(const RadialGrid& g) {
        const int n = int(g.size());
        cells.resize(n);
        auto rext = [&](int e) { return e == 0 ? 0.0 : g.node(e - 1); };
        for (int j = 1; j <= n; ++j) {
            Cell& c = cells[j - 1];
            // never use the axis sample: s f(s) need not vanish there for
            // 1/r-class sources (the first cell extrapolates instead)
            int s0 = std::max(1, std::min(j - 2, n - 3));
            for (int k = 0; k < 4; ++k) c.node[k] = s0 + k;
            c.a = rext(j - 1);
            c.D = rext(j) - c.a;
            // Lagrange basis through u_k = (r_k - a)/D, expanded in powers of u
            double u[4];
            for (int k = 0; k < 4; ++k) u[k] = (rext(c.node[k]) - c.a) / c.D;
            for (int k = 0; k < 4; ++k) {
                // numerator polynomial prod_{m != k} (u - u_m) / (u_k - u_m)
                double num[4] = {1.0, 0.0, 0.0, 0.0};
                int deg = 0;
                double den = 1.0;
                for (int m = 0; m < 4; ++m) {
                    if (m == k) continue;
                    den *= (u[k] - u[m]);
                    for (int d = deg; d >= 0; --d) {
                        num[d + 1] += num[d];          // u * num
                        num[d] *= -u[m];               // -u_m * num
                    }
                    ++deg;
                }
                for (int j2 = 0; j2 < 4; ++j2) c.poly[j2][k] = num[j2] / den;
            }
        }
    }
};

inline const ConvCells& conv_cells(const RadialGrid& g) {
    thread_local std::vector<std::pair<std::pair<std::size_t, double>, std::shared_ptr<ConvCells>>> cache;
    const std::pair<std::size_t, double> key{g.size(), g.r_max()};
    for (auto& e : cache)
        if (e.first == key) return *e.second;
    cache.emplace_back(key, std::make_shared<ConvCells>(g));
    if (cache.size() > 16) cache.erase(cache.begin());
    return *cache.back().second;
}

} // namespace detail

/// Free-resolvent application u = R_0(-lambda^2) f on radial functions,
/// through the 1D reduction
///   u(r) = (1/(2 lambda r)) [ int_0^r g (e^{-l(r-s)} - e^{-l(r+s)}) ds
///                           + (1 - e^{-2 l r}) int_r^inf g e^{-l(s-r)} ds ],
/// g(s) = s f(s). Each cell integrates the exponential kernel against a local
/// cubic exactly (product integration), accumulated by stable prefix/suffix
/// recursions with all exponents <= 0. The integral beyond r_max uses the
/// field's far-field model. The returned field carries a matched Yukawa tail.
inline RealField apply_R0(double lambda, const RealField& f) {
    if (!(lambda > 0.0)) throw std::invalid_argument("apply_R0: lambda must be positive");
    const RadialGrid& g = *f.grid;
    const int n = int(g.size());
    const auto& geo = detail::conv_cells(g);

    std::vector<double> gx(n + 1);
    gx[0] = 0.0;
    for (int i = 0; i < n; ++i) gx[i + 1] = g.node(i) * f.v[i];

    // cell integrals against the three exponential weights
    std::vector<double> cP(n), cS(n), cN(n), efac(n);
    for (int j = 0; j < n; ++j) {
        const auto& c = geo.cells[j];
        const double z = lambda * c.D;
        efac[j] = std::exp(-z);
        // scaled moments m_j = int_0^D (t/D)^j e^{-lambda t} dt and the
        // reversed ones mb_j = int_0^D (t/D)^j e^{-lambda (D - t)} dt
        double m[4], mb[4];
        for (int q = 0; q < 4; ++q) m[q] = exp_moment(q, lambda, c.D) / std::pow(c.D, q);
        // reversed: substitute t -> D - t
        for (int q = 0; q < 4; ++q) {
            double acc = 0.0;
            for (int k = 0; k <= q; ++k) {
                double binom = 1.0;
                for (int b = 0; b < k; ++b) binom *= double(q - b) / double(b + 1);
                acc += binom * std::pow(-1.0, k) * m[k];
            }
            mb[q] = acc;
        }
        double P = 0.0, S = 0.0;
        double d[4] = {0, 0, 0, 0};
        for (int k = 0; k < 4; ++k) {
            const double gv = gx[c.node[k]];
            for (int q = 0; q < 4; ++q) d[q] += c.poly[q][k] * gv;
        }
        for (int q = 0; q < 4; ++q) {
            P += d[q] * mb[q]; // weight e^{-lambda (b - s)}
            S += d[q] * m[q];  // weight e^{-lambda (s - a)}
        }
        cP[j] = P;
        cS[j] = S;
        // N-cell: int_a^b g e^{-lambda (r_j + s)} ds = e^{-l (b + a)} * S-type with e^{-l t}
        const double b = c.a + c.D;
        cN[j] = std::exp(-lambda * (b + c.a)) * S;
    }

    // prefix P_i = int_0^{r_i} g e^{-l (r_i - s)}, N_i = int_0^{r_i} g e^{-l (r_i + s)}
    std::vector<double> P(n), N(n), S(n);
    P[0] = cP[0];
    N[0] = cN[0];
    for (int i = 1; i < n; ++i) {
        P[i] = P[i - 1] * efac[i] + cP[i];
        N[i] = N[i - 1] * efac[i] + cN[i];
    }
    // suffix S_i = int_{r_i}^inf g e^{-l (s - r_i)}
    double Stail = f.tail.empty() ? 0.0 : tail_suffix_weighted(f.tail.pruned(g.r_max()), g.r_max(), lambda);
    S[n - 1] = Stail;
    for (int i = n - 1; i >= 1; --i) S[i - 1] = S[i] * efac[i] + cS[i];

    RealField out(f.grid);
    for (int i = 0; i < n; ++i) {
        const double r = g.node(i);
        const double e2 = -std::expm1(-2.0 * lambda * r); // 1 - e^{-2 l r}
        out.v[i] = (P[i] - N[i] + e2 * S[i]) / (2.0 * lambda * r);
    }
    // matched Yukawa far model (dropped once the boundary value is already
    // exponentially negligible, where the coefficient would overflow anyway)
    if (lambda * g.node(n - 1) < 30.0) {
        const double q = out.v[n - 1] * g.node(n - 1) * std::exp(lambda * g.node(n - 1));
        out.tail = TailExpr::single(q, 1.0, lambda);
    }
    return out;
}

namespace detail {

struct R0VpsiCache {
    double lambda = -1.0;
    std::size_t n = 0;
    double rmax = 0.0;
    RealField field;
};

} // namespace detail

/// R_0(-lambda^2) V psi on the given grid (cached: the construction pairs
/// many fields against it at a fixed lambda).
inline const RealField& R0_Vpsi(double lambda, const GridPtr& g) {
    thread_local detail::R0VpsiCache cache;
    if (cache.lambda != lambda || cache.n != g->size() || cache.rmax != g->r_max()) {
        cache.field = apply_R0(lambda, Vpsi_field(g));
        cache.lambda = lambda;
        cache.n = g->size();
        cache.rmax = g->r_max();
    }
    return cache.field;
}

/// <R_0(-lambda^2) V psi, F>: the orthogonality pairing of the reduction.
inline double orth_pairing(double lambda, const RealField& F) {
    return inner(R0_Vpsi(lambda, F.grid), F);
}

/// lambda <R_0(-lambda^2) V psi, W> -> 2 sqrt(3 pi) as lambda -> 0.
inline double resolvent_limit_pairing(double lambda, const GridPtr& g) {
    return lambda * inner(R0_Vpsi(lambda, g), W_field(g));
}

/// Factorized discrete (-Delta + diag) acting on v = r eta, with v(0) = 0 and
/// the Robin law v' + robin_rate v = rhs at r_max (exact for Yukawa-class far
/// fields; the inhomogeneity absorbs a 1/r source tail). For (H + lambda^2),
/// diag_i = V(r_i) + lambda^2 and robin_rate = lambda.
class ResolventWorkspace {
  public:
    ResolventWorkspace(GridPtr grid, std::vector<double> diag, double robin_rate)
        : grid_(std::move(grid)), diag_(std::move(diag)), robin_(robin_rate), A_(int(grid_->size()), kband, kband) {
        build();
        Afac_ = A_;
        Afac_->factor();
    }

    /// Convenience: workspace for (H + lambda^2) = -Delta - 5W^4 + lambda^2.
    static ResolventWorkspace for_H(GridPtr grid, double lambda) {
        if (!(lambda > 0.0)) throw std::invalid_argument("ResolventWorkspace: lambda must be positive");
        std::vector<double> d(grid->size());
        for (std::size_t i = 0; i < grid->size(); ++i) d[i] = V_val(grid->node(i)) + lambda * lambda;
        return ResolventWorkspace(std::move(grid), std::move(d), lambda);
    }

    const GridPtr& grid() const { return grid_; }
    double robin_rate() const { return robin_; }

    /// Solve (-Delta + diag) eta = F. The Robin inhomogeneity defaults to the
    /// 1/r component of F's far-field model (s1/lambda); the result carries
    /// the implied far field (slow particular part plus matched exponential).
    RealField solve(const RealField& F, std::optional<double> robin_rhs = {}) const {
        const std::size_t n = grid_->size();
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = grid_->node(i) * F.v[i];
        rhs[n - 1] = robin_rhs ? *robin_rhs : slow_coefficient(F.tail) / robin_;
        std::vector<double> v = Afac_->solve(rhs);
        refine(v, rhs);

        RealField out(grid_);
        for (std::size_t i = 0; i < n; ++i) out.v[i] = v[i] / grid_->node(i);
        out.tail = far_model(F.tail, v[n - 1]);
        last_residual_ = system_residual(v, rhs);
        return out;
    }

    /// Far-field model implied by a source tail and the boundary value v(r_max).
    TailExpr solution_far_model(const TailExpr& src, double v_last) const { return far_model(src, v_last); }

    /// Relative sup-norm residual of the last banded solve.
    double last_residual() const { return last_residual_; }

  private:
    static constexpr int kband = 7;

    static double slow_coefficient(const TailExpr& t) {
        for (const auto& term : t.terms())
            if (term.rate == 0.0 && term.power == 1.0) return term.coef;
        return 0.0;
    }

    /// Far model of the solution: particular responses (s_m / lambda^2) r^{-m}
    /// for each slow power source term, the (s1/lambda^2)(1 - e^{-l r})/r
    /// structure for the 1/r term, and a matched homogeneous Yukawa part.
    TailExpr far_model(const TailExpr& src, double v_last) const {
        const double l2 = robin_ * robin_;
        std::vector<TailTerm> terms;
        for (const auto& t : src.terms()) {
            if (t.rate != 0.0) continue;
            terms.push_back(TailTerm{t.coef / l2, t.power, 0.0});
            if (t.power == 1.0) terms.push_back(TailTerm{-t.coef / l2, 1.0, robin_}); // the (1 - e^{-lr}) pairing
        }
        TailExpr part{terms};
        const double rN = grid_->node(grid_->size() - 1);
        if (robin_ * rN >= 30.0) return part.pruned(rN);
        const double beta = (v_last - rN * part.eval(rN)) * std::exp(robin_ * rN);
        return (part + TailExpr::single(beta, 1.0, robin_)).pruned(rN);
    }

    /// One step of iterative refinement in working precision.
    void refine(std::vector<double>& v, const std::vector<double>& rhs) const {
        const int n = int(grid_->size());
        std::vector<double> res(n);
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = std::max(0, i - kband); j <= std::min(n - 1, i + kband); ++j) acc += A_.get(i, j) * v[j];
            res[i] = rhs[i] - acc;
        }
        std::vector<double> corr = Afac_->solve(res);
        for (int i = 0; i < n; ++i) v[i] += corr[i];
    }

    double system_residual(const std::vector<double>& v, const std::vector<double>& rhs) const {
        const int n = int(grid_->size());
        double rmax = 0.0, bmax = 0.0;
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = std::max(0, i - kband); j <= std::min(n - 1, i + kband); ++j) acc += A_.get(i, j) * v[j];
            rmax = std::max(rmax, std::abs(acc - rhs[i]));
            bmax = std::max(bmax, std::abs(rhs[i]));
        }
        return bmax > 0 ? rmax / bmax : rmax;
    }

    void build() {
        const RadialGrid& g = *grid_;
        const int n = int(g.size());
        const auto& st = detail::xi_stencils(g);
        for (int i = 0; i < n; ++i) {
            if (i == n - 1) {
                // Robin row: v'(r_max) + robin v(r_max) = rhs
                const auto& R = st.rows[i];
                const double s = g.sigma(i);
                for (int k = 0; k < R.len; ++k) {
                    const int col = R.start + k - 1; // extended sample -> unknown index
                    if (col < 0) continue;
                    A_.at(i, col) += R.d1[k] / s;
                }
                A_.at(i, i) += robin_;
                continue;
            }
            const auto& R = st.rows[i];
            const double s = g.sigma(i), sp = g.dsigma(i);
            for (int k = 0; k < R.len; ++k) {
                const int col = R.start + k - 1;
                if (col < 0) continue; // v(0) = 0 sample
                const double w = -(R.d2[k] - (sp / s) * R.d1[k]) / (s * s);
                A_.at(i, col) += w;
            }
            A_.at(i, i) += diag_[i];
        }
    }

    GridPtr grid_;
    std::vector<double> diag_;
    double robin_;
    BandedMatrix A_;
    std::optional<BandedMatrix> Afac_;
    mutable double last_residual_ = 0.0;
};

/// eta = (H + lambda^2)^{-1} F with regularity at the axis and Robin decay at
/// r_max. Throws factorization_error if lambda collides with a spurious
/// discrete eigenvalue (caller perturbs the grid).
inline RealField solve_full(double lambda, const RealField& F) {
    auto ws = ResolventWorkspace::for_H(F.grid, lambda);
    return ws.solve(F);
}

struct ProbePoint {
    double lambda;
    double amplification;
};

/// Amplification of (1 + R_0(-lambda^2) V)^{-1} on data h = R_0 f, i.e.
/// ||(H+lambda^2)^{-1} f~ ||_inf / ||h~||_inf. With `orthogonalize` set, the
/// data is first projected against V psi (P of the reduction), which by the
/// resolvent expansion flattens the 1/lambda growth.
inline std::vector<ProbePoint> singularity_probe(const std::vector<double>& lambdas, const RealField& f,
                                                 bool orthogonalize) {
    const GridPtr& g = f.grid;
    RealField vpsi = Vpsi_field(g);
    RealField psi = psi_field(g);
    const double vpsi_psi = inner(vpsi, psi); // int V psi^2
    std::vector<ProbePoint> out;
    for (double lam : lambdas) {
        if (!(lam > 0.0) || lam > 0.3) throw std::invalid_argument("singularity_probe: lambda must lie in (0, 0.3]");
        RealField h = apply_R0(lam, f);
        RealField src = f;
        if (orthogonalize) {
            const double c = inner(vpsi, h) / vpsi_psi;
            for (std::size_t i = 0; i < h.size(); ++i) h.v[i] -= c * psi.v[i];
            h.tail = h.tail + psi_tail() * (-c);
            // (-Delta + lambda^2) psi = -V psi + lambda^2 psi
            for (std::size_t i = 0; i < src.size(); ++i) src.v[i] += c * vpsi.v[i] - c * lam * lam * psi.v[i];
            src.tail = src.tail + Vpsi_tail() * c + psi_tail() * (-c * lam * lam);
        }
        RealField sol = solve_full(lam, src);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < sol.size(); ++i) {
            num = std::max(num, std::abs(sol.v[i]));
            den = std::max(den, std::abs(h.v[i]));
        }
        out.push_back({lam, num / den});
    }
    return out;
}

} // namespace cnls
