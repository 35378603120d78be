#include "backlab/report.hpp"

#include "backlab/elliptic.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace backlab {

namespace fs = std::filesystem;

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
    return s.str();
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
    std::ostringstream s;
    s << std::setprecision(17);
    for (std::size_t i = 0; i < header.size(); ++i) s << (i ? "," : "") << header[i];
    s << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s << (i ? "," : "") << r[i];
        s << '\n';
    }
    write_text_atomic(path, s.str());
}

json to_json(const RunManifest& m) {
    return {{"version", m.version},   {"scenario", m.scenario}, {"config_hash", m.config_hash},
            {"started", m.started},   {"finished", m.finished}, {"verdict", m.verdict},
            {"pass", m.pass},         {"directory", m.directory}, {"files", m.files},
            {"metrics", m.metrics},   {"failures", m.failures}};
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    try {
        m.version = j.at("version").get<std::string>();
        m.scenario = j.at("scenario").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.started = j.value("started", "");
        m.finished = j.value("finished", "");
        m.verdict = j.at("verdict").get<std::string>();
        m.pass = j.at("pass").get<bool>();
        m.directory = j.value("directory", "");
        m.files = j.value("files", std::vector<std::string>{});
        m.metrics = j.value("metrics", json::object());
        m.failures = j.value("failures", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

RunManifest persist(const ScenarioConfig& cfg, const ScenarioOutput& out, const std::string& started) {
    RunManifest m;
    m.scenario = cfg.scenario;
    m.config_hash = config_hash(cfg);
    m.started = started;
    m.verdict = out.verdict;
    m.pass = out.pass;
    m.metrics = out.metrics;
    m.failures = out.failures;
    fs::path dir = fs::path(cfg.output) / (cfg.scenario + "-" + m.config_hash);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    m.directory = dir.string();

    auto add = [&](const std::string& name) { m.files.push_back(name); };
    write_text_atomic((dir / "config.json").string(), to_json(cfg).dump(2) + "\n");
    add("config.json");
    try {
        if (out.series) {
            write_series_csv((dir / "series.csv").string(), *out.series);
            add("series.csv");
        }
        for (const auto& [name, s] : out.spectra) {
            write_spectrum_csv((dir / ("spectrum_" + name + ".csv")).string(), s);
            add("spectrum_" + name + ".csv");
        }
        for (const auto& [name, t] : out.tables) {
            write_table_csv((dir / (name + ".csv")).string(), t.first, t.second);
            add(name + ".csv");
        }
        for (const auto& [name, f] : out.checkpoints) {
            write_checkpoint((dir / (name + ".bflb")).string(), f);
            add(name + ".bflb");
        }
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
    m.finished = utc_timestamp();
    add("manifest.json");
    write_text_atomic((dir / "manifest.json").string(), to_json(m).dump(2) + "\n");
    return m;
}

RunManifest run_scenario(const ScenarioConfig& cfg) {
    std::string started = utc_timestamp();
    ScenarioOutput out = execute_scenario(cfg);
    return persist(cfg, out, started);
}

std::vector<RunManifest> collect_manifests(const std::vector<std::string>& dirs) {
    std::vector<fs::path> found;
    for (const auto& d : dirs) {
        fs::path p(d);
        if (!fs::is_directory(p)) throw IoError("not a directory: " + d);
        if (fs::exists(p / "manifest.json")) found.push_back(p / "manifest.json");
        for (const auto& e : fs::directory_iterator(p))
            if (e.is_directory() && fs::exists(e.path() / "manifest.json")) found.push_back(e.path() / "manifest.json");
    }
    std::sort(found.begin(), found.end());
    std::vector<RunManifest> out;
    for (const auto& f : found) {
        RunManifest m = manifest_from_json(read_json_file(f.string()));
        m.directory = f.parent_path().string();
        out.push_back(std::move(m));
    }
    return out;
}

namespace {

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, double>>& out) {
    if (j.is_object()) {
        for (auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
    } else if (j.is_boolean()) {
        out.emplace_back(prefix, j.get<bool>() ? 1.0 : 0.0);
    } else if (j.is_number()) {
        out.emplace_back(prefix, j.get<double>());
    }
}

bool has_any(const std::string& s, std::initializer_list<const char*> keys) {
    for (const char* k : keys)
        if (s.find(k) != std::string::npos) return true;
    return false;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string r = "\"";
    for (char c : s) r += c == '"' ? std::string("\"\"") : std::string(1, c);
    return r + "\"";
}

}  // namespace

ReportBundle emit_report(const std::vector<RunManifest>& manifests, const std::string& out_dir) {
    for (const auto& m : manifests)
        for (const auto& f : m.files)
            if (!fs::exists(fs::path(m.directory) / f)) throw IoError("missing file " + (fs::path(m.directory) / f).string());

    ReportBundle b;
    ModulationConstants mc = modulation_constants();
    json constants = {{"modulation", {{"C", mc.C}, {"C1", mc.C1}, {"C2", mc.C2}, {"C3", mc.C3}, {"C4", mc.C4}}},
                      {"measured", json::array()}};
    json runs = json::array(), exponents = json::array();
    std::ostringstream md, csv;
    csv << std::setprecision(17) << "scenario,config_hash,verdict,pass,metric,value\n";
    md << "# Run report\n\n";
    md << manifests.size() << " run(s).\n\n";
    if (!manifests.empty()) {
        md << "| scenario | config | verdict | result |\n|---|---|---|---|\n";
    }
    for (const auto& m : manifests) {
        if (!m.pass) ++b.failures;
        md << "| " << m.scenario << " | " << m.config_hash << " | " << m.verdict << " | " << (m.pass ? "pass" : "FAIL")
           << " |\n";
        std::vector<std::pair<std::string, double>> flat;
        flatten(m.metrics, "", flat);
        for (const auto& [k, v] : flat) {
            csv << m.scenario << ',' << m.config_hash << ',' << m.verdict << ',' << (m.pass ? 1 : 0) << ','
                << csv_quote(k) << ',' << v << '\n';
            if (has_any(k, {"exponent", "slope"}))
                exponents.push_back({{"scenario", m.scenario}, {"metric", k}, {"value", v}});
            if (has_any(k, {"c0", "C0", "c_sup", "c_phi", "lifespan_bound", "rho2", "ratio"}))
                constants["measured"].push_back({{"scenario", m.scenario}, {"metric", k}, {"value", v}});
        }
        runs.push_back(to_json(m));
    }
    if (b.failures) {
        md << "\n## Failures\n\n";
        for (const auto& m : manifests)
            for (const auto& f : m.failures) md << "- " << m.scenario << " (" << m.config_hash << "): " << f << "\n";
    }
    if (!exponents.empty()) {
        md << "\n## Fitted exponents\n\n";
        for (const auto& e : exponents)
            md << "- " << e["scenario"].get<std::string>() << " " << e["metric"].get<std::string>() << " = "
               << e["value"].get<double>() << "\n";
    }
    md << "\n## Constants\n\nModulation: C = " << mc.C << ", C1 = " << mc.C1 << ", C2 = " << mc.C2 << ", C3 = " << mc.C3
       << ", C4 = " << mc.C4 << "\n";
    for (const auto& e : constants["measured"])
        md << "- " << e["scenario"].get<std::string>() << " " << e["metric"].get<std::string>() << " = "
           << e["value"].get<double>() << "\n";
    md << "\nreport.csv columns: scenario, config_hash, verdict, pass (0/1), metric (dotted path), value.\n";

    b.markdown = md.str();
    b.summary = {{"version", kArtifactVersion}, {"runs", runs},        {"failures", b.failures},
                 {"exponents", exponents},      {"constants", constants}};
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    write_text_atomic((fs::path(out_dir) / "report.md").string(), b.markdown);
    write_text_atomic((fs::path(out_dir) / "report.json").string(), b.summary.dump(2) + "\n");
    write_text_atomic((fs::path(out_dir) / "report.csv").string(), csv.str());
    return b;
}

}  // namespace backlab
