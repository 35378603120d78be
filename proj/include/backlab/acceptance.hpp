#pragma once

#include "backlab/config.hpp"

#include <functional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace backlab {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    json metrics = json::object();
};

struct AcceptanceOptions {
    std::set<int> only;            // empty: all
    std::string work_dir = "acceptance_runs";
    std::ostream* log = nullptr;   // one line per finished criterion
};

struct Criterion {
    int id;
    std::string name;
    std::function<CriterionResult(const AcceptanceOptions&)> run;
};

const std::vector<Criterion>& acceptance_criteria();
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);
std::string format_line(const CriterionResult& r);
json to_json(const CriterionResult& r);

}  // namespace backlab
