#include "backlab/acceptance.hpp"

#include "backlab/cli.hpp"
#include "backlab/elliptic.hpp"
#include "backlab/gauge.hpp"
#include "backlab/report.hpp"
#include "backlab/sweep.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace backlab {

namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
    return s;
}

std::string fmt(double x) {
    std::ostringstream s;
    s << std::setprecision(4) << x;
    return s.str();
}

ScenarioConfig config_for(const AcceptanceOptions& o, const std::string& id, const json& overrides = json::object()) {
    ScenarioConfig c = default_config(id);
    c.output = (fs::path(o.work_dir) / "runs").string();
    for (auto& [k, v] : overrides.items()) c = with_value(c, k, v);
    return c;
}

// Runs a scenario, folds its failures into r and returns the manifest.
RunManifest run_into(CriterionResult& r, const ScenarioConfig& c) {
    RunManifest m = run_scenario(c);
    r.metrics[c.scenario] = m.metrics;
    if (!m.pass) {
        r.pass = false;
        r.detail += (r.detail.empty() ? "" : "; ") + c.scenario + ": " + join(m.failures);
    }
    return m;
}

void require(CriterionResult& r, bool ok, const std::string& what) {
    if (!ok) {
        r.pass = false;
        r.detail += (r.detail.empty() ? "" : "; ") + what;
    }
}

// ---------------------------------------------------------------- criteria

CriterionResult c_cnoidal(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest m = run_into(r, config_for(o, "cnoidal-travel"));
    double secs = m.metrics["seconds"].get<double>();
    require(r, secs < 30.0, "runtime " + fmt(secs) + " s exceeds 30 s");
    if (r.pass) r.detail = "rel error " + fmt(m.metrics["rel_error_exact"].get<double>()) + " in " + fmt(secs) + " s";
    return r;
}

CriterionResult c_eigen(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest m = run_into(r, config_for(o, "cnoidal-eigen"));
    if (r.pass) {
        double res = 0, ev = 0;
        for (const auto& p : m.metrics["pairs"]) {
            res = std::max(res, p["residual"].get<double>());
            ev = std::max(ev, p["eigenvalue_error"].get<double>());
        }
        r.detail = "max residual " + fmt(res) + ", max eigenvalue error " + fmt(ev);
    }
    return r;
}

CriterionResult c_constants(const AcceptanceOptions&) {
    CriterionResult r;
    ModulationConstants c = modulation_constants();
    const double got[] = {c.C, c.C1, c.C2, c.C3, c.C4};
    const double want[] = {2.0 / 3.0, 8.0 / 15.0, 8.0 / 15.0, 0.0, 0.2};
    double worst = 0;
    for (int i = 0; i < 5; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    r.pass = worst < 1e-10;
    r.metrics = {{"C", c.C}, {"C1", c.C1}, {"C2", c.C2}, {"C3", c.C3}, {"C4", c.C4}, {"max_error", worst}};
    r.detail = "max deviation " + fmt(worst);
    return r;
}

CriterionResult c_damped(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest m = run_into(r, config_for(o, "modulation-damped"));
    if (r.pass) r.detail = "max rel energy error " + fmt(m.metrics["energy_law_max_rel_error"].get<double>());
    return r;
}

CriterionResult c_viscous(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest m = run_into(r, config_for(o, "modulation-viscous"));
    if (r.pass)
        r.detail = "forward max l deviation " + fmt(m.metrics["forward_l_max_rel_deviation"].get<double>()) +
                   ", backward l growth x" + fmt(m.metrics["backward_l_growth"].get<double>());
    return r;
}

CriterionResult c_bbm(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest m = run_into(r, config_for(o, "modulation-bbm"));
    if (r.pass) r.detail = "relative residual " + fmt(m.metrics["relative_residual"].get<double>());
    return r;
}

CriterionResult c_kdv_bounded(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest m = run_into(r, config_for(o, "kdv-backward-bounded"));
    if (r.pass) r.detail = "terminal |u|^2 / (|f|^2/beta^2) = " + fmt(m.metrics["terminal_ratio"].get<double>());
    return r;
}

CriterionResult c_blowup(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest a = run_into(r, config_for(o, "kbs-backward-blowup"));
    RunManifest b = run_into(r, config_for(o, "kbs-lifespan-sweep"));
    std::ostringstream d;
    d << "T* " << fmt(a.metrics["t_star_estimate"].get<double>());
    if (a.metrics.contains("refinement_rel_change"))
        d << ", refinement change " << fmt(a.metrics["refinement_rel_change"].get<double>());
    d << ", lifespans";
    for (const auto& x : b.metrics["runs"]) d << ' ' << fmt(x["t_star_estimate"].get<double>());
    r.detail = r.pass ? d.str() : r.detail + " [" + d.str() + "]";
    return r;
}

CriterionResult c_absorbing(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest m = run_into(r, config_for(o, "kbs-forward-absorbing"));
    SweepSpec s;
    s.base = config_for(o, "kbs-forward-absorbing", {{"model.runs", 3}, {"grid.n", 1024}});
    s.axes.push_back({"grid.L", {2 * pi, 4 * pi, 8 * pi, 16 * pi}});
    s.metric = "terminal_radius";
    SweepResult sw = run_sweep(s);
    r.metrics["sweep"] = sw.aggregate;
    for (const auto& c : sw.cells) {
        require(r, c.ok, "sweep cell " + std::to_string(c.index) + ": " + c.error);
        if (c.ok) require(r, c.manifest.pass, "sweep cell " + std::to_string(c.index) + ": " + join(c.manifest.failures));
    }
    require(r, sw.fits.size() == 1, "no L fit");
    std::string fit;
    if (!sw.fits.empty()) {
        const AxisFit& f = sw.fits.front();
        fit = "L slope " + fmt(f.slope) + " +/- " + fmt(f.stderr_slope) + " (bound 2.5)";
        require(r, f.within_bound, fit + " exceeds bound");
    }
    if (r.pass)
        r.detail = std::to_string(m.metrics["remained"].get<int>()) + " runs in ball radius " +
                   fmt(m.metrics["ball_radius"].get<double>()) + ", " + fit;
    return r;
}

CriterionResult c_nls(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest m = run_into(r, config_for(o, "nls-backward-growth"));
    std::string d = "p " + fmt(m.metrics["mass_exponent"].get<double>()) + ", energy exponent " +
                    fmt(m.metrics["energy_exponent"].get<double>()) + ", H1 exponent " +
                    fmt(m.metrics["h1_exponent"].get<double>());
    r.detail = r.pass ? d : r.detail + " [" + d + "]";
    return r;
}

CriterionResult c_cgl(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest m = run_into(r, config_for(o, "cgl-backward-riccati"));
    std::string d = "T*/s1 = " + fmt(m.metrics["t_star_over_s1"].get<double>());
    r.detail = r.pass ? d : r.detail + " [" + d + "]";
    return r;
}

CriterionResult c_hyperns(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest a = run_into(r, config_for(o, "hyperns-eigenflow"));
    RunManifest b = run_into(r, config_for(o, "hyperns-decay"));
    if (r.pass)
        r.detail = "eigenflow error " + fmt(a.metrics["max_ratio_error"].get<double>()) + ", q -> shell " +
                   fmt(b.metrics["nearest_shell"].get<double>()) + " (rel " + fmt(b.metrics["shell_rel_err"].get<double>()) +
                   ")";
    return r;
}

// Dense-scan minimizer of ∫(u − φ(·+ξ))², independent of the gauge module's search.
std::pair<double, double> scan_minimizer(const Field& u, const Field& phi) {
    const SpectralGrid& g = *u.grid;
    const int N = g.n();
    const double L = g.length();
    Field us = to_spectral(u), ps = to_spectral(phi);
    auto corr = [&](double xi, bool deriv) {
        double s = 0;
        for (int j = 0; j < N; ++j) {
            cplx w = L * std::conj(us.values[j]) * ps.values[j] * std::exp(cplx(0, g.kx()[j] * xi));
            if (deriv) w *= cplx(0, g.kx()[j]);
            s += w.real();
        }
        return s;
    };
    const int M = 16 * N;
    int best = 0;
    double bv = -1e300;
    for (int m = 0; m < M; ++m) {
        double v = corr(-L / 2 + m * L / M, false);
        if (v > bv) bv = v, best = m;
    }
    double a = -L / 2 + (best - 1) * L / M, b = -L / 2 + (best + 1) * L / M, fa = corr(a, true);
    while (b - a > 1e-15) {
        double c = 0.5 * (a + b), fc = corr(c, true);
        if ((fc > 0) == (fa > 0))
            a = c, fa = fc;
        else
            b = c;
    }
    double xi = 0.5 * (a + b);
    double F = std::pow(l2_norm(u), 2) + std::pow(l2_norm(phi), 2) - 2 * corr(xi, false);
    return {F, std::remainder(xi, L)};
}

CriterionResult c_gauge(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    const double L = 2 * pi;
    GridPtr g = make_grid(1, 512, L);
    for (int div : {4, 8, 16, 32}) {
        const double eps = L / div;
        BumpFunction b = build_bump(eps, g);
        GaugeFunction G = build_gauge(1.0, b);
        bool support = true, positive = true;
        for (int i = 0; i < g->n(); ++i) {
            positive = positive && b.b[i].real() >= 0;
            if (std::abs(g->x(i)) > eps) support = support && b.b[i].real() < 1e-12;
        }
        std::string tag = "eps=L/" + std::to_string(div);
        require(r, std::abs(b.integral - L) < 1e-10 * L, tag + ": integral");
        require(r, support && positive, tag + ": support/sign");
        require(r, b.c_sup <= 10 && b.c_l2 <= 10 && b.c_dl2 <= 10, tag + ": bump constants");
        require(r, G.c_phi < 10 && G.c_dphi < 10 && G.c_d2phi < 10, tag + ": gauge constants");
        require(r, G.periodicity_mismatch < 1e-10, tag + ": periodicity");
        r.metrics["bump"][tag] = {{"c_sup", b.c_sup}, {"c_l2", b.c_l2}, {"c_dl2", b.c_dl2}, {"c_phi", G.c_phi}};
    }
    GridPtr gm = make_grid(1, 256, L);
    GaugeFunction G = build_gauge(1.0, build_bump(L / 4, gm));
    double ferr = 0, xerr = 0, foc = 0;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10; ++trial) {
        Field s(gm, ScalarKind::real, Representation::spectral, true);
        for (int j = 1; j <= 20; ++j) {
            s.values[j] = 2.0 * cplx(nd(rng), nd(rng)) / double(j);
            s.values[gm->n() - j] = std::conj(s.values[j]);
        }
        Field u = to_physical(s);
        LyapunovSample q = lyapunov_F(u, G);
        auto [F, xi] = scan_minimizer(u, G.phi);
        ferr = std::max(ferr, std::abs(q.F - F) / std::max(1.0, F));
        xerr = std::max(xerr, std::abs(std::remainder(q.xi_star - xi, L)));
        foc = std::max(foc, q.foc_residual);
    }
    require(r, ferr < 1e-8 && xerr < 1e-8, "minimizer differs from dense scan (F " + fmt(ferr) + ", xi " + fmt(xerr) + ")");
    require(r, foc < 1e-6, "first-order condition residual " + fmt(foc));
    r.metrics["oracle"] = {{"F_rel_error", ferr}, {"xi_error", xerr}, {"foc_residual", foc}};

    RunManifest m = run_into(r, config_for(o, "kbs-forward-absorbing", {{"gauge.enabled", true}, {"model.runs", 1}}));
    double frac = m.metrics.contains("gauge") ? m.metrics["gauge"]["monitor_fraction"].get<double>() : 0.0;
    std::string d = "oracle F err " + fmt(ferr) + ", xi err " + fmt(xerr) + ", monitor fraction " + fmt(frac);
    r.detail = r.pass ? d : r.detail + " [" + d + "]";
    return r;
}

CriterionResult c_spectra(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    RunManifest m = run_into(r, config_for(o, "spectrum-report"));
    std::string d = "Parseval " + fmt(m.metrics["parseval_rel_error"].get<double>()) + ", Burgers slope " +
                    fmt(m.metrics["burgers_slope"].get<double>()) + ", soliton flatness " +
                    fmt(m.metrics["soliton_flatness_ratio"].get<double>());
    r.detail = r.pass ? d : r.detail + " [" + d + "]";
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

int call_lab(std::vector<std::string> args) {
    args.insert(args.begin(), "lab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    std::ostringstream sink;
    auto* old_out = std::cout.rdbuf(sink.rdbuf());
    auto* old_err = std::cerr.rdbuf(sink.rdbuf());
    int code = lab_main(static_cast<int>(args.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return code;
}

CriterionResult c_infra(const AcceptanceOptions& o) {
    CriterionResult r;
    r.pass = true;
    const fs::path root = fs::path(o.work_dir) / "infra";
    fs::remove_all(root);

    // Determinism: identical configs in two output trees give identical series.
    ScenarioConfig c = config_for(o, "kdv-backward-bounded", {{"model.horizon", 10.0}});
    c.output = (root / "a").string();
    RunManifest a = run_scenario(c);
    c.output = (root / "b").string();
    RunManifest b = run_scenario(c);
    bool same = a.config_hash == b.config_hash && a.files == b.files;
    for (const auto& f : a.files) {
        if (f == "manifest.json") continue;
        if (f == "config.json") {
            json ca = read_json_file((fs::path(a.directory) / f).string());
            json cb = read_json_file((fs::path(b.directory) / f).string());
            ca.erase("output");
            cb.erase("output");
            same = same && ca == cb;
        } else {
            same = same && slurp(fs::path(a.directory) / f) == slurp(fs::path(b.directory) / f);
        }
    }
    require(r, same, "rerun not bit-identical");

    // Sweep: worker count and axis order do not change any cell.
    auto sweep = [&](int threads, bool reversed, const std::string& dir) {
        SweepSpec s;
        s.base = config_for(o, "hyperns-eigenflow", {{"integrator.t_end", 0.5}});
        s.base.output = (root / dir).string();
        std::vector<json> nu = {0.5, 1.0, 2.0}, shell = {1, 2};
        if (reversed) std::reverse(nu.begin(), nu.end()), std::reverse(shell.begin(), shell.end());
        s.axes = {{"model.nu", nu}, {"model.shell", shell}};
        s.threads = threads;
        s.metric = "max_ratio_error";
        std::map<std::string, std::string> by_point;
        for (const auto& cell : run_sweep(s).cells)
            by_point[cell.point.dump()] = cell.manifest.config_hash + " " + cell.manifest.metrics.dump() +
                                          slurp(fs::path(cell.manifest.directory) / "series.csv");
        return by_point;
    };
    auto s1 = sweep(1, false, "s1"), s3 = sweep(3, false, "s3"), sr = sweep(2, true, "sr");
    require(r, s1.size() == 6 && s1 == s3 && s1 == sr, "sweep results depend on worker count or order");

    // Exit codes.
    fs::create_directories(root / "cfg");
    auto write = [&](const std::string& name, const json& j) {
        std::string p = (root / "cfg" / name).string();
        write_text_atomic(p, j.dump(2));
        return p;
    };
    json good = to_json(config_for(o, "hyperns-eigenflow", {{"integrator.t_end", 0.5}}));
    good["output"] = (root / "cli").string();
    json failing = good;
    failing["model"]["tol"] = 1e-30;
    json bad = good;
    bad["model"]["bogus"] = 1;
    fs::create_directories(root / "empty");
    std::vector<std::pair<std::vector<std::string>, int>> cases = {
        {{"run", write("good.json", good)}, 0},
        {{"run", write("failing.json", failing)}, 1},
        {{"run", write("bad.json", bad)}, 2},
        {{"run", (root / "cfg" / "missing.json").string()}, 3},
        {{"report", (root / "empty").string(), "--out", (root / "rep0").string()}, 0},
        {{"report", (root / "cli").string(), "--out", (root / "rep1").string()}, 1},
        {{"report", (root / "does-not-exist").string(), "--out", (root / "rep2").string()}, 3},
        {{"accept", "--only", "3", "--work", (root / "acc").string()}, 0},
        {{"frobnicate"}, 2},
    };
    json codes = json::array();
    for (const auto& [args, want] : cases) {
        int got = call_lab(args);
        codes.push_back({{"args", args}, {"expected", want}, {"got", got}});
        require(r, got == want, "lab " + args.front() + " exit " + std::to_string(got) + " != " + std::to_string(want));
    }
    r.metrics = {{"determinism", same}, {"sweep_cells", s1.size()}, {"exit_codes", codes}};
    if (r.pass) r.detail = "rerun bit-identical, sweep order independent, " + std::to_string(cases.size()) + " exit codes";
    return r;
}

}  // namespace

const std::vector<Criterion>& acceptance_criteria() {
    static const std::vector<Criterion> v = {
        {1, "cnoidal-exactness", c_cnoidal},       {2, "cnoidal-eigenpair", c_eigen},
        {3, "modulation-constants", c_constants},  {4, "damped-energy-law", c_damped},
        {5, "viscous-modulation", c_viscous},      {6, "bbm-modified-energy", c_bbm},
        {7, "forced-kdv-bounded", c_kdv_bounded},  {8, "kbs-backward-blowup", c_blowup},
        {9, "absorbing-ball", c_absorbing},        {10, "nls-sandwich", c_nls},
        {11, "cgl-riccati", c_cgl},                {12, "hyperviscous-nse", c_hyperns},
        {13, "gauge-machinery", c_gauge},          {14, "spectra", c_spectra},
        {15, "infrastructure", c_infra},
    };
    return v;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt) {
    std::vector<CriterionResult> out;
    for (const auto& c : acceptance_criteria()) {
        if (!opt.only.empty() && !opt.only.count(c.id)) continue;
        auto t0 = std::chrono::steady_clock::now();
        CriterionResult r;
        try {
            r = c.run(opt);
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.id = c.id;
        r.name = c.name;
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (opt.log) *opt.log << format_line(r) << std::endl;
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_line(const CriterionResult& r) {
    std::ostringstream s;
    s << (r.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << r.id << "  " << std::left << std::setw(22) << r.name
      << std::right << std::fixed << std::setprecision(1) << std::setw(8) << r.seconds << " s  " << r.detail;
    return s.str();
}

json to_json(const CriterionResult& r) {
    return {{"id", r.id},           {"name", r.name},       {"pass", r.pass},
            {"detail", r.detail},   {"seconds", r.seconds}, {"metrics", r.metrics}};
}

}  // namespace backlab
