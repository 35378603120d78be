#pragma once

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace backlab {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sections are fully populated after parse_config: every key a scenario
// understands is present, with the registry default where none was given.
struct ScenarioConfig {
    std::string scenario;
    json grid = json::object();
    json model = json::object();
    json integrator = json::object();
    json gauge = json::object();
    std::uint64_t seed = 0;
    std::string output = "runs";

    const json& section(const std::string& name) const;
    json& section(const std::string& name);
    double num(const std::string& sec, const std::string& key) const;
    int integer(const std::string& sec, const std::string& key) const;
    bool flag(const std::string& sec, const std::string& key) const;
    std::string str(const std::string& sec, const std::string& key) const;
    std::vector<double> list(const std::string& sec, const std::string& key) const;
};

// Validates against the scenario's schema: unknown sections or keys and
// mismatched value types throw ConfigError.
ScenarioConfig parse_config(const json& j);
ScenarioConfig load_config(const std::string& path);
ScenarioConfig default_config(const std::string& scenario);

json to_json(const ScenarioConfig& c, bool with_output = true);
// FNV-1a over the canonical JSON of every field except the output directory.
std::string config_hash(const ScenarioConfig& c);

// Sets "section.key" to value, re-validating the result.
ScenarioConfig with_value(const ScenarioConfig& c, const std::string& path, const json& value);

json read_json_file(const std::string& path);
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace backlab
