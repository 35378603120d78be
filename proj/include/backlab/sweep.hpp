#pragma once

#include "backlab/config.hpp"
#include "backlab/report.hpp"

#include <string>
#include <vector>

namespace backlab {

struct SweepAxis {
    std::string path;  // "section.key"
    std::vector<json> values;
};

struct SweepSpec {
    ScenarioConfig base;
    std::vector<SweepAxis> axes;
    int threads = 0;                           // 0: LAB_THREADS or hardware concurrency
    std::string metric = "terminal_radius";    // aggregated and fitted against each axis
};

struct SweepCell {
    std::size_t index = 0;
    json point = json::object();
    bool ok = false;
    std::string error;
    RunManifest manifest;
};

struct AxisFit {
    std::string axis;
    double slope = 0.0;
    double stderr_slope = 0.0;
    std::size_t points = 0;
    bool has_bound = false;
    double bound = 0.0;
    bool within_bound = true;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::vector<AxisFit> fits;
    json aggregate;
};

inline constexpr std::size_t kMaxSweepCells = 10000;

SweepSpec parse_sweep(const json& j);
SweepSpec load_sweep(const std::string& path);
std::size_t sweep_size(const SweepSpec& s);
int resolve_threads(int requested);

// Runs the Cartesian product on a worker pool. Results are stored by cell index,
// so the aggregate does not depend on the number of workers.
SweepResult run_sweep(const SweepSpec& spec);
// Upper-bound exponents of the absorbing-ball radius for the forward KBS sweep.
bool radius_bound_exponent(const std::string& axis, double& exponent);

}  // namespace backlab
