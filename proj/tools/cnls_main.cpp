// cnls command-line laboratory: construct solitary waves of the perturbed
// energy-critical NLS, verify the closed-form identity suites, probe the
// resonant resolvent, and run the radial time propagator.

#include <CLI11.hpp>

#include <future>
#include <random>
#include <iostream>

#include "cnls/dynamics.hpp"
#include "cnls/io.hpp"

using namespace cnls;

namespace {

struct GlobalOpts {
    std::string config_file;
    std::string out_dir = "out";
    long seed = 12345;
    int workers = 1;
};

RunConfig resolve_config(const GlobalOpts& g, const std::map<std::string, std::string>& flag_values) {
    RunConfig cfg;
    if (!g.config_file.empty()) cfg = RunConfig::from_file(g.config_file);
    for (const auto& [k, v] : flag_values)
        if (!v.empty()) cfg.set(k, v); // flags win
    if (const char* root = std::getenv("CNLS_OUTPUT_ROOT")) cfg.set("output_root", root);
    if (const char* w = std::getenv("CNLS_WORKERS")) cfg.set("workers", w);
    cfg.set("seed", std::to_string(g.seed));
    return cfg;
}

std::filesystem::path output_dir(const RunConfig& cfg, const std::string& sub) {
    std::filesystem::path root = cfg.get("output_root", "out");
    return root / sub;
}

std::vector<double> parse_eps_spec(const std::string& spec) {
    // "0.01" or "1e-3:5e-2:log8"
    const auto c1 = spec.find(':');
    if (c1 == std::string::npos) return {std::stod(spec)};
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos) throw std::runtime_error("eps spec: expected lo:hi:logN");
    const double lo = std::stod(spec.substr(0, c1));
    const double hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    const std::string mode = spec.substr(c2 + 1);
    if (mode.rfind("log", 0) != 0) throw std::runtime_error("eps spec: only logN sweeps are supported");
    return logspace(lo, hi, std::stoul(mode.substr(3)));
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

struct CheckRow {
    std::string name;
    double computed, expected, error;
    bool pass;
};

void write_checks(RunManifest& man, const std::string& csv_name, const std::vector<CheckRow>& rows) {
    CsvWriter csv(man.dir() / csv_name);
    csv.header({"name", "computed", "expected", "error", "pass"});
    for (const auto& r : rows) {
        csv.raw_row({r.name, fmt17(r.computed), fmt17(r.expected), fmt17(r.error), r.pass ? "1" : "0"});
        man.check(r.name, r.pass);
    }
}

// ---------------------------------------------------------------- verify ---

std::vector<CheckRow> verify_profiles() {
    std::vector<CheckRow> rows;
    auto g = make_grid(512, 200.0, StretchSpec::algebraic());
    double id_sup = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double w = W_val(g->node(i));
        id_sup = std::max(id_sup, std::abs(LambdaW_val(g->node(i)) - (w * w * w - 0.5 * w)));
    }
    rows.push_back({"LambdaW_identity_sup", id_sup, 0.0, id_sup, id_sup <= 1e-12});
    const double res = resonance_residual(g);
    rows.push_back({"H_LambdaW_resonance_residual", res, 0.0, res, res <= 1e-6});
    const double vpsi = quad(Vpsi_field(g));
    const double vpsi_ref = std::sqrt(4.0 * pi);
    rows.push_back({"int_V_psi", vpsi, vpsi_ref, std::abs(vpsi - vpsi_ref), std::abs(vpsi - vpsi_ref) <= 1e-8});
    const double gw = h1_seminorm(W_field(g));
    const double w6 = quad(W_pow_field(g, 6.0));
    rows.push_back({"gradW2_equals_intW6", gw * gw, w6, std::abs(gw * gw - w6), std::abs(gw * gw - w6) <= 1e-8 * w6});
    for (double p : {2.5, 3.0, 4.0, 4.9, 6.0}) {
        const double got = pairing_LambdaW_fW(Nonlinearity::pure_power(p), g);
        const double ref = (0.5 - 3.0 / (p + 1.0)) * W_power_integral(p + 1.0);
        rows.push_back({"pairing_p" + std::to_string(p).substr(0, 3), got, ref, std::abs(got - ref),
                        std::abs(got - ref) <= 1e-8 * std::abs(ref)});
    }
    const auto o = omega1(Nonlinearity::pure_power(4.0), g);
    rows.push_back({"lambda1_p4", o.lambda1, std::sqrt(3.0) / 15.0, std::abs(o.lambda1 - std::sqrt(3.0) / 15.0),
                    std::abs(o.lambda1 - std::sqrt(3.0) / 15.0) <= 1e-8});
    return rows;
}

std::vector<CheckRow> verify_resolvent() {
    std::vector<CheckRow> rows;
    auto g = make_grid(4096, 13000.0, StretchSpec::blended());
    const double target = 2.0 * std::sqrt(3.0 * pi);
    const double lim = 2.0 * resolvent_limit_pairing(1e-4, g) - resolvent_limit_pairing(2e-4, g);
    rows.push_back({"inner2_limit", lim, target, std::abs(lim - target), std::abs(lim - target) <= 1e-4});
    std::vector<double> lams = logspace(1e-3, 1e-1, 9), dev;
    for (double l : lams) dev.push_back(std::abs(resolvent_limit_pairing(l, g) - target));
    const double slope = loglog_slope(lams, dev);
    rows.push_back({"inner2_rate", slope, 1.0, std::abs(slope - 1.0), std::abs(slope - 1.0) <= 0.2});
    // manufactured full solve
    const double lam = 1e-2;
    RealField F = sample(g, [lam](double r) {
        const double e = std::exp(-r);
        return (2.0 / r - 1.0) * e + (V_val(r) + lam * lam) * e;
    });
    auto ws = ResolventWorkspace::for_H(g, lam);
    RealField u = ws.solve(F);
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) err = std::max(err, std::abs(u.v[i] - std::exp(-g->node(i))));
    rows.push_back({"solve_full_manufactured", err, 0.0, err, err <= 1e-8});
    rows.push_back({"solve_full_residual", ws.last_residual(), 0.0, ws.last_residual(), ws.last_residual() <= 1e-10});
    RealField bump = sample(g, [](double r) { return std::exp(-0.25 * (r - 2.0) * (r - 2.0)); });
    std::vector<double> plam = logspace(1e-3, 3e-2, 7);
    auto plain = singularity_probe(plam, bump, false);
    auto orth = singularity_probe(plam, bump, true);
    std::vector<double> ap, ao;
    for (auto& x : plain) ap.push_back(x.amplification);
    for (auto& x : orth) ao.push_back(x.amplification);
    const double sp = loglog_slope(plam, ap), so = loglog_slope(plam, ao);
    rows.push_back({"probe_generic_rate", sp, -1.0, std::abs(sp + 1.0), std::abs(sp + 1.0) <= 0.15});
    rows.push_back({"probe_orth_rate", so, 0.0, std::abs(so), std::abs(so) <= 0.15});
    return rows;
}

std::vector<CheckRow> verify_functionals(long seed) {
    std::vector<CheckRow> rows;
    auto nl = Nonlinearity::pure_power(4.0);
    auto g = make_grid(1024, 400.0, StretchSpec::algebraic());
    // two-form identity on a seeded random field
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    RealField u(g);
    for (std::size_t i = 0; i < g->size(); ++i)
        u.v[i] = N(rng) * std::exp(-0.2 * g->node(i) * g->node(i)) + 0.2 * N(rng) * std::exp(-g->node(i));
    FunctionalReport rep = evaluate(u, 0.07, 0.3, nl);
    const double g2 = h1_seminorm(u);
    RealField u6(g), u2(g);
    for (std::size_t i = 0; i < g->size(); ++i) {
        u6.v[i] = std::pow(u.v[i], 6);
        u2.v[i] = u.v[i] * u.v[i];
    }
    const double expanded =
        (4.0 - 7.0 / 3.0) / 6.0 * g2 * g2 + (1.0 / 18.0) * quad(u6) + 0.15 * quad(u2);
    rows.push_back({"two_form_identity", rep.I, expanded, std::abs(rep.I - expanded),
                    std::abs(rep.I - expanded) <= 1e-12 * std::abs(expanded)});
    // scale invariances
    RealField W = W_field(g);
    const double l6W = lp_norm(W, 6.0);
    double worst = 0.0;
    for (double mu : {0.5, 2.0}) worst = std::max(worst, std::abs(lp_norm(scale_S(mu, W), 6.0) - l6W));
    rows.push_back({"S_mu_L6_invariance", worst, 0.0, worst, worst <= 1e-6});
    // K as scaling derivative
    RealField smooth = sample(g, [](double r) { return 0.8 * std::exp(-0.3 * r * r); });
    const double h = 1e-4;
    const double dS = (evaluate(scale_T(1.0 + h, smooth), 0.05, 2e-3, nl).action -
                       evaluate(scale_T(1.0 - h, smooth), 0.05, 2e-3, nl).action) /
                      (2.0 * h);
    const double K = evaluate(smooth, 0.05, 2e-3, nl).K;
    rows.push_back({"K_is_scaling_derivative", dS, K, std::abs(dS - K), std::abs(dS - K) <= 1e-6 * std::abs(K)});
    // Pohozaev of a constructed wave
    auto w = construct_Q(0.01, nl);
    FunctionalReport wr = evaluate(w);
    rows.push_back({"pohozaev_K", wr.pohozaev_residual_K, 0.0, wr.pohozaev_residual_K,
                    wr.pohozaev_residual_K <= 1e-8});
    rows.push_back({"pohozaev_K0", wr.pohozaev_residual_K0, 0.0, wr.pohozaev_residual_K0,
                    wr.pohozaev_residual_K0 <= 1e-8});
    return rows;
}

std::vector<CheckRow> verify_dynamics() {
    std::vector<CheckRow> rows;
    // free Gaussian against the closed form
    {
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
        rows.push_back({"free_gaussian_t1", err, 0.0, err, err <= 1e-6});
        rows.push_back({"free_gaussian_mass_drift", st.mass_drift, 0.0, st.mass_drift, st.mass_drift <= 1e-10});
    }
    // short nonlinear conservation + virial consistency
    {
        auto nl = Nonlinearity::pure_power(4.0);
        StepConfig sc;
        sc.eps = 0.03;
        sc.nl = nl;
        auto g = make_grid(12000, 60.0, StretchSpec::uniform());
        EvolutionState st;
        st.u = ComplexField(g);
        for (std::size_t i = 0; i < g->size(); ++i) st.u.v[i] = 0.9 * std::exp(-0.25 * g->node(i) * g->node(i));
        st.dt = 2.5e-4;
        init_trackers(st, sc, 0.0);
        double maxrel = 0.0;
        for (int s = 0; s < 5; ++s) {
            const double t_target = st.t + 0.04;
            while (st.t < t_target - 1e-12) step(st, sc);
            const double h = st.dt;
            const double M0 = track_virial(st.u);
            step(st, sc);
            const double Kmid = evaluate(st.u, sc.eps, 0.0, nl).K;
            step(st, sc);
            const double M2 = track_virial(st.u);
            maxrel = std::max(maxrel, std::abs((M2 - M0) / (2.0 * h) - 2.0 * Kmid) / std::abs(2.0 * Kmid));
        }
        record_sample(st, sc, 0.0);
        rows.push_back({"virial_identity", maxrel, 0.0, maxrel, maxrel <= 1e-3});
        rows.push_back({"nonlinear_mass_drift", st.mass_drift, 0.0, st.mass_drift, st.mass_drift <= 1e-8});
        rows.push_back(
            {"nonlinear_action_drift", st.action_drift, 0.0, st.action_drift, st.action_drift <= 1e-6});
    }
    return rows;
}

int cmd_verify(const RunConfig& cfg) {
    const std::string suite = cfg.get("suite", "all");
    RunManifest man(output_dir(cfg, "verify-" + suite), cfg);
    if (suite == "profiles" || suite == "all") write_checks(man, "profiles.csv", verify_profiles());
    if (suite == "resolvent" || suite == "all") write_checks(man, "resolvent.csv", verify_resolvent());
    if (suite == "functionals" || suite == "all")
        write_checks(man, "functionals.csv", verify_functionals(cfg.get_int("seed", 12345)));
    if (suite == "dynamics" || suite == "all") write_checks(man, "dynamics.csv", verify_dynamics());
    man.finish();
    if (!man.all_pass()) {
        std::cerr << "verify: FAILED check: " << man.first_failure() << "\n";
        return 1;
    }
    std::cout << "verify: all checks passed (" << man.dir().string() << ")\n";
    return 0;
}

// -------------------------------------------------------------- construct ---

int cmd_construct(const RunConfig& cfg) {
    const double p = cfg.get_num("p", 4.0);
    const double sign = cfg.get_num("sign", 1.0);
    auto nl = Nonlinearity::pure_power(p, sign);
    const auto eps_list = parse_eps_spec(cfg.get("eps", "0.01"));
    ConstructConfig cc;
    cc.grid_n = std::size_t(cfg.get_int("grid-n", 0));
    cc.grid_rmax = cfg.get_num("grid-rmax", 0.0);
    RunManifest man(output_dir(cfg, "construct"), cfg);

    CsvWriter table(man.dir() / "omega_of_eps.csv");
    table.header({"eps", "lambda", "omega", "omega_over_eps2", "eta_sup", "pde_residual", "orth_residual"});
    const int workers = std::max(1, int(cfg.get_int("workers", 1)));
    std::vector<std::future<std::pair<std::string, SolitaryWave>>> futs;
    auto run_one = [&](double eps) -> std::pair<std::string, SolitaryWave> {
        SolitaryWave w = construct_Q(eps, nl, cc);
        return {std::string{}, std::move(w)};
    };
    std::vector<SolitaryWave> waves;
    std::vector<std::pair<double, std::string>> failures;
    for (std::size_t k = 0; k < eps_list.size();) {
        futs.clear();
        const std::size_t batch = std::min<std::size_t>(workers, eps_list.size() - k);
        for (std::size_t j = 0; j < batch; ++j)
            futs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, run_one,
                                      eps_list[k + j]));
        for (std::size_t j = 0; j < batch; ++j) {
            try {
                waves.push_back(futs[j].get().second);
            } catch (const no_convergence_error& e) {
                failures.push_back({eps_list[k + j], e.what()});
            }
        }
        k += batch;
    }
    for (const auto& w : waves) {
        table.row({w.eps, w.lambda, w.omega, w.omega / (w.eps * w.eps),
                   lp_norm(w.eta, std::numeric_limits<double>::infinity()), w.diag.pde_residual,
                   w.diag.orth_residual});
        char tag[32];
        std::snprintf(tag, sizeof tag, "eps_%.6g", w.eps);
        write_field(man.dir() / (std::string(tag) + "_Q"), w.Q);
        write_field(man.dir() / (std::string(tag) + "_eta"), w.eta);
        json d{{"eps", w.eps},
               {"lambda", w.lambda},
               {"omega", w.omega},
               {"outer_iterations", w.diag.outer_iterations},
               {"lambda_iterations", w.diag.lambda_iterations},
               {"orth_residual", w.diag.orth_residual},
               {"pde_residual", w.diag.pde_residual},
               {"grid_n", w.grid->size()},
               {"grid_rmax", w.grid->r_max()}};
        std::ofstream(man.dir() / (std::string(tag) + "_diag.json")) << d.dump(2) << "\n";
        man.check(tag, w.diag.pde_residual < 1e-8);
    }
    for (const auto& [eps, what] : failures) {
        char tag[32];
        std::snprintf(tag, sizeof tag, "eps_%.6g", eps);
        man.check(tag, false, what);
        std::cerr << "construct: " << tag << " failed: " << what << "\n";
    }
    man.finish();
    return man.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------- probe ---

int cmd_probe(const RunConfig& cfg) {
    RunManifest man(output_dir(cfg, "resolvent-probe"), cfg);
    auto g = make_grid(std::size_t(cfg.get_int("grid-n", 4096)), cfg.get_num("grid-rmax", 13000.0),
                       StretchSpec::blended());
    RealField f = sample(*&g, [](double r) { return std::exp(-0.25 * (r - 2.0) * (r - 2.0)); });
    auto lams = logspace(cfg.get_num("lambda-min", 1e-3), cfg.get_num("lambda-max", 3e-2),
                         std::size_t(cfg.get_int("points", 7)));
    auto plain = singularity_probe(lams, f, false);
    auto orth = singularity_probe(lams, f, true);
    CsvWriter csv(man.dir() / "probe.csv");
    csv.header({"lambda", "amplification", "amplification_orthogonalized"});
    for (std::size_t i = 0; i < lams.size(); ++i) csv.row({lams[i], plain[i].amplification, orth[i].amplification});
    std::vector<double> ap, ao;
    for (auto& x : plain) ap.push_back(x.amplification);
    for (auto& x : orth) ao.push_back(x.amplification);
    man.check("generic_rate_minus_one", std::abs(loglog_slope(lams, ap) + 1.0) <= 0.15);
    man.check("orthogonalized_rate_zero", std::abs(loglog_slope(lams, ao)) <= 0.15);
    man.finish();
    return man.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------- evolve ---

int cmd_evolve(const RunConfig& cfg) {
    RunManifest man(output_dir(cfg, "evolve"), cfg);
    const double p = cfg.get_num("p", 4.0);
    const double eps = cfg.get_num("eps", 0.03);
    auto nl = Nonlinearity::pure_power(p);
    StepConfig sc;
    sc.eps = eps;
    sc.nl = nl;
    sc.absorber = cfg.get("absorb", "off") == "on";
    const double t_end = cfg.get_num("t-end", 1.0);
    const double dt = cfg.get_num("dt", 5e-4);
    const double r_max = cfg.get_num("r-max", 120.0);
    const double dr = cfg.get_num("dr", 0.01);

    const std::string init = cfg.get("init", "scale:0.5");
    auto g = make_grid(std::size_t(r_max / dr), r_max, StretchSpec::uniform());
    EvolutionState st;
    st.u = ComplexField(g);
    double omega = cfg.get_num("omega", 0.0);
    if (init.rfind("scale:", 0) == 0) {
        const double a = std::stod(init.substr(6));
        SolitaryWave w = construct_Q(eps, nl);
        omega = w.omega;
        sc.robin_rate = w.lambda;
        for (std::size_t i = 0; i < g->size(); ++i) st.u.v[i] = a * interp_radial(w.Q, g->node(i));
    } else {
        RealField f = read_field(init);
        for (std::size_t i = 0; i < g->size(); ++i) st.u.v[i] = interp_radial(f, g->node(i));
    }
    st.dt = dt;
    st.drift_budget = cfg.get_num("drift-budget", 1e-6);
    init_trackers(st, sc, omega);

    CsvWriter csv(man.dir() / "timeseries.csv");
    csv.header({"t", "mass", "energy", "K", "virial", "supgrad", "l6"});
    auto emit = [&](const ConservedSample& s) { csv.row({s.t, s.mass, s.energy, s.K, s.virial, s.supgrad, s.l6}); };
    emit(st.history.back());
    const double sample_every = cfg.get_num("sample-every", 0.05);
    double next = sample_every;
    while (st.t < t_end - 1e-12) {
        st.dt = std::min(dt, sc.dt_safety / detail::amplitude_scale(st.u, sc));
        step(st, sc);
        if (st.t >= next) {
            record_sample(st, sc, omega);
            emit(st.history.back());
            next += sample_every;
        }
    }
    json verdict{{"t_end", st.t},
                 {"mass_drift", st.mass_drift},
                 {"action_drift", st.action_drift},
                 {"trustworthy", st.trustworthy}};
    std::ofstream(man.dir() / "verdict.json") << verdict.dump(2) << "\n";
    man.check("trustworthy_evolution", st.trustworthy);
    man.finish();
    return man.all_pass() ? 0 : 1;
}

// -------------------------------------------------------- sweep-dichotomy ---

int cmd_sweep_dichotomy(const RunConfig& cfg) {
    RunManifest man(output_dir(cfg, "sweep-dichotomy"), cfg);
    const double p = cfg.get_num("p", 4.0);
    const double eps = cfg.get_num("eps", 0.03);
    auto nl = Nonlinearity::pure_power(p);
    SolitaryWave w = construct_Q(eps, nl);
    ClassifyConfig cc;
    cc.r_max = cfg.get_num("r-max", 120.0);
    cc.dr = cfg.get_num("dr", 0.01);
    cc.t_end = cfg.get_num("t-end", 60.0);
    cc.step.absorber = true;
    auto rows = dichotomy_sweep(parse_list(cfg.get("a", "0.5,1.0,1.3")), w, cc);
    CsvWriter csv(man.dir() / "verdicts.csv");
    csv.header({"a", "S", "K", "m_level", "verdict", "l6_decay", "supgrad_growth", "drift", "horizon"});
    for (const auto& r : rows) {
        csv.raw_row({fmt17(r.a), fmt17(r.S), fmt17(r.K), fmt17(r.verdict.m_level),
                     DichotomyVerdict::name(r.verdict.verdict), fmt17(r.verdict.l6_decay_factor),
                     fmt17(r.verdict.supgrad_growth_factor), fmt17(r.verdict.conservation_drift),
                     fmt17(r.verdict.time_horizon)});
        man.check("a_" + fmt17(r.a), r.verdict.verdict != DichotomyVerdict::Kind::inconclusive);
    }
    man.finish();
    return man.all_pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cnls: solitary waves and dynamics of the 3D perturbed energy-critical NLS"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOpts gl;
    app.add_option("--config", gl.config_file, "key = value configuration file (flags win)");
    app.add_option("--seed", gl.seed, "seed for randomized test batteries");
    app.add_option("--out", gl.out_dir, "output root directory");

    std::map<std::string, std::string> fv;
    auto add_opt = [&](CLI::App* sub, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(
            "--" + key, [&fv, key](const std::string& v) { fv[key] = v; }, help);
    };

    auto* c = app.add_subcommand("construct", "construct solitary waves Q_eps");
    for (const char* k : {"p", "sign", "eps", "grid-n", "grid-rmax", "workers"}) add_opt(c, k, k);

    auto* v = app.add_subcommand("verify", "run a closed-form identity suite");
    add_opt(v, "suite", "profiles|resolvent|functionals|dynamics|all");

    auto* pr = app.add_subcommand("resolvent-probe", "resonant amplification rates of (1+R0 V)^{-1}");
    for (const char* k : {"grid-n", "grid-rmax", "lambda-min", "lambda-max", "points"}) add_opt(pr, k, k);

    auto* ev = app.add_subcommand("evolve", "radial time propagation with trackers");
    for (const char* k : {"init", "eps", "p", "t-end", "dt", "absorb", "r-max", "dr", "sample-every", "drift-budget"})
        add_opt(ev, k, k);

    auto* sd = app.add_subcommand("sweep-dichotomy", "classify a*Q_eps into scatter/blow-up");
    for (const char* k : {"p", "eps", "a", "r-max", "dr", "t-end"}) add_opt(sd, k, k);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = resolve_config(gl, fv);
        cfg.set("output_root", cfg.get("output_root", gl.out_dir));
        if (app.got_subcommand("construct")) return cmd_construct(cfg);
        if (app.got_subcommand("verify")) return cmd_verify(cfg);
        if (app.got_subcommand("resolvent-probe")) return cmd_probe(cfg);
        if (app.got_subcommand("evolve")) return cmd_evolve(cfg);
        if (app.got_subcommand("sweep-dichotomy")) return cmd_sweep_dichotomy(cfg);
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return std::string(e.what()).rfind("config", 0) == 0 ? 2 : 1;
    }
    return 2;
}
