#include "backlab/cli.hpp"

#include "backlab/acceptance.hpp"
#include "backlab/elliptic.hpp"
#include "backlab/gauge.hpp"
#include "backlab/report.hpp"
#include "backlab/sweep.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <numbers>

namespace backlab {

namespace {

int cmd_run(const std::string& path, const std::string& output) {
    ScenarioConfig c = load_config(path);
    if (!output.empty()) c.output = output;
    RunManifest m = run_scenario(c);
    std::cout << m.scenario << " " << m.config_hash << " " << m.verdict << " " << (m.pass ? "pass" : "FAIL") << "\n"
              << m.directory << "\n";
    for (const auto& f : m.failures) std::cout << "  - " << f << "\n";
    return m.pass ? 0 : 1;
}

int cmd_sweep(const std::string& path, int threads, const std::string& out) {
    SweepSpec s = load_sweep(path);
    if (threads > 0) s.threads = threads;
    std::cout << "sweep over " << sweep_size(s) << " cell(s), " << resolve_threads(s.threads) << " worker(s)\n";
    SweepResult r = run_sweep(s);
    std::string dest = out.empty() ? (std::filesystem::path(s.base.output) / "sweep.json").string() : out;
    std::filesystem::create_directories(std::filesystem::path(dest).parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : std::filesystem::path(dest).parent_path());
    write_text_atomic(dest, r.aggregate.dump(2) + "\n");
    bool ok = r.aggregate["failed"].get<std::size_t>() == 0;
    for (const auto& f : r.fits) {
        std::cout << f.axis << ": slope " << f.slope << " +/- " << f.stderr_slope;
        if (f.has_bound) std::cout << " (bound " << f.bound << (f.within_bound ? ", ok" : ", EXCEEDED") << ")";
        std::cout << "\n";
        ok = ok && f.within_bound;
    }
    std::cout << dest << "\n";
    return ok ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out) {
    ReportBundle b = emit_report(collect_manifests(dirs), out);
    std::cout << b.markdown;
    return b.failures ? 1 : 0;
}

int cmd_accept(const std::vector<int>& only, const std::string& work, const std::string& json_out) {
    AcceptanceOptions o;
    o.only.insert(only.begin(), only.end());
    o.work_dir = work;
    o.log = &std::cout;
    auto results = run_acceptance(o);
    json j = json::array();
    bool ok = true;
    for (const auto& r : results) {
        j.push_back(to_json(r));
        ok = ok && r.pass;
    }
    if (!json_out.empty()) write_text_atomic(json_out, j.dump(2) + "\n");
    std::size_t passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.pass; });
    std::cout << passed << "/" << results.size() << " criteria passed\n";
    return ok ? 0 : 1;
}

int cmd_constants(double L, double nu, double beta, double gamma) {
    ModulationConstants mc = modulation_constants();
    json j;
    j["modulation"] = {{"C", mc.C}, {"C1", mc.C1}, {"C2", mc.C2}, {"C3", mc.C3}, {"C4", mc.C4}, {"sech2", mc.sech2}};
    GridPtr g = make_grid(1, 512, L);
    const double alpha = 8 * beta;
    json gauge = json::array();
    for (int div : {4, 8, 16, 32}) {
        BumpFunction b = build_bump(L / div, g);
        GaugeFunction G = build_gauge(alpha > 0 ? alpha : 1.0, b);
        gauge.push_back({{"eps", L / div},
                         {"c_sup", b.c_sup},
                         {"c_l2", b.c_l2},
                         {"c_dl2", b.c_dl2},
                         {"c_phi", G.c_phi},
                         {"c_dphi", G.c_dphi},
                         {"c_d2phi", G.c_d2phi},
                         {"c0_empirical", empirical_c0(b)}});
    }
    j["gauge"] = gauge;
    j["kbs"] = {{"L", L}, {"nu", nu}, {"beta", beta}, {"gamma", gamma}, {"alpha", alpha}};
    if (alpha > 0) {
        double c0 = gauge[1]["c0_empirical"].get<double>();
        j["kbs"]["C0_convention"] = convention_C0(nu, beta, gamma, alpha, L);
        j["kbs"]["eps_gauge"] = epsilon_gauge(nu, alpha, c0, L);
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int lab_main(int argc, char** argv) {
    CLI::App app{"backward-evolution lab"};
    app.require_subcommand(1);

    std::string cfg_path, output;
    auto* run = app.add_subcommand("run", "run one scenario from a config file");
    run->add_option("config", cfg_path, "config JSON")->required();
    run->add_option("--output", output, "override the output directory");

    std::string spec_path, sweep_out;
    int threads = 0;
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("spec", spec_path, "sweep spec JSON")->required();
    sweep->add_option("--threads", threads, "worker count (LAB_THREADS overrides)");
    sweep->add_option("--out", sweep_out, "aggregate JSON path");

    std::vector<std::string> dirs;
    std::string report_out = "report";
    auto* report = app.add_subcommand("report", "summarize run directories");
    report->add_option("dirs", dirs, "run or output directories")->required();
    report->add_option("--out", report_out, "report directory");

    std::vector<int> only;
    std::string work = "acceptance_runs", accept_json;
    auto* accept = app.add_subcommand("accept", "run the acceptance suite");
    accept->add_option("--only", only, "criterion ids")->delimiter(',');
    accept->add_option("--work", work, "scratch directory");
    accept->add_option("--json", accept_json, "write results as JSON");

    double L = 2 * std::numbers::pi, nu = 1.0, beta = 0.5, gamma = 1.0;
    auto* constants = app.add_subcommand("constants", "print the constants ledger");
    constants->add_option("--L", L);
    constants->add_option("--nu", nu);
    constants->add_option("--beta", beta);
    constants->add_option("--gamma", gamma);

    auto* list = app.add_subcommand("list", "list scenarios");
    std::string scen;
    auto* defaults = app.add_subcommand("defaults", "print the default config of a scenario");
    defaults->add_option("scenario", scen)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run) return cmd_run(cfg_path, output);
        if (*sweep) return cmd_sweep(spec_path, threads, sweep_out);
        if (*report) return cmd_report(dirs, report_out);
        if (*accept) return cmd_accept(only, work, accept_json);
        if (*constants) return cmd_constants(L, nu, beta, gamma);
        if (*list) {
            for (const auto& s : scenario_registry()) std::cout << s.id << "  " << s.summary << "\n";
            return 0;
        }
        if (*defaults) {
            std::cout << to_json(default_config(scen)).dump(2) << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace backlab
