#pragma once

#include "backlab/config.hpp"
#include "backlab/diagnostics.hpp"
#include "backlab/integrator.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace backlab {

struct ScenarioOutput {
    std::string verdict = "completed";
    bool pass = true;
    json metrics = json::object();
    std::vector<std::string> failures;
    std::optional<RunRecord> series;
    std::vector<std::pair<std::string, Spectrum>> spectra;
    std::vector<std::pair<std::string, Field>> checkpoints;
    // Extra plot-ready tables: name -> (header, rows).
    std::vector<std::pair<std::string, std::pair<std::vector<std::string>, std::vector<std::vector<double>>>>> tables;

    void check(bool ok, const std::string& what);
};

struct ScenarioInfo {
    std::string id;
    std::string summary;
    json defaults;  // {"grid": {...}, "model": {...}, "integrator": {...}, "gauge": {...}}
    std::function<ScenarioOutput(const ScenarioConfig&)> run;
};

const std::vector<ScenarioInfo>& scenario_registry();
const ScenarioInfo& find_scenario(const std::string& id);

// Runs without touching the disk.
ScenarioOutput execute_scenario(const ScenarioConfig& cfg);

IntegratorConfig integrator_config(const ScenarioConfig& cfg);
// Band-limited random data with Gaussian spectral envelope exp(-tau k²), scaled to the given L² norm.
Field generic_data(GridPtr g, double norm, double tau, std::uint64_t seed, int kmax = 0);

}  // namespace backlab
