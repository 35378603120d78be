#pragma once

#include "backlab/config.hpp"
#include "backlab/scenarios.hpp"

#include <string>
#include <vector>

namespace backlab {

inline constexpr const char* kArtifactVersion = "1.0.0";

struct RunManifest {
    std::string version = kArtifactVersion;
    std::string scenario;
    std::string config_hash;
    std::string started, finished;
    std::string verdict;
    bool pass = false;
    std::string directory;
    std::vector<std::string> files;
    json metrics = json::object();
    std::vector<std::string> failures;
};

json to_json(const RunManifest& m);
RunManifest manifest_from_json(const json& j);

// Executes the scenario and persists config, series, spectra, checkpoints and
// the manifest (written last, atomically) under cfg.output.
RunManifest run_scenario(const ScenarioConfig& cfg);
RunManifest persist(const ScenarioConfig& cfg, const ScenarioOutput& out, const std::string& started);

// Reads every manifest.json found directly in, or one level below, each directory.
std::vector<RunManifest> collect_manifests(const std::vector<std::string>& dirs);

struct ReportBundle {
    std::string markdown;
    json summary;
    std::size_t failures = 0;
};

// Writes report.md, report.json and report.csv into out_dir. Throws IoError when
// a manifest lists a file that no longer exists.
ReportBundle emit_report(const std::vector<RunManifest>& manifests, const std::string& out_dir);

std::string utc_timestamp();
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

}  // namespace backlab
