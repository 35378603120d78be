#include "backlab/config.hpp"
#include "backlab/scenarios.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace backlab {

namespace {

const char* const kSections[] = {"grid", "model", "integrator", "gauge"};

bool is_section(const std::string& s) {
    for (const char* k : kSections)
        if (s == k) return true;
    return false;
}

// Coerces v to the type of the default d, or throws.
json coerce(const json& d, const json& v, const std::string& where) {
    auto bad = [&] { return ConfigError(where + ": expected " + std::string(d.type_name()) + ", got " + v.type_name()); };
    if (d.is_number_integer()) {
        if (v.is_number_integer()) return v;
        if (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>())))
            return static_cast<long long>(v.get<double>());
        throw bad();
    }
    if (d.is_number_float()) {
        if (v.is_number()) return v.get<double>();
        throw bad();
    }
    if (d.is_boolean()) {
        if (v.is_boolean()) return v;
        throw bad();
    }
    if (d.is_string()) {
        if (v.is_string()) return v;
        throw bad();
    }
    if (d.is_array()) {
        if (!v.is_array()) throw bad();
        json out = json::array();
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError(where + ": list entries must be numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }
    throw bad();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

const json& ScenarioConfig::section(const std::string& name) const {
    if (name == "grid") return grid;
    if (name == "model") return model;
    if (name == "integrator") return integrator;
    if (name == "gauge") return gauge;
    throw ConfigError("unknown section " + name);
}

json& ScenarioConfig::section(const std::string& name) {
    return const_cast<json&>(static_cast<const ScenarioConfig&>(*this).section(name));
}

namespace {

const json& lookup(const ScenarioConfig& c, const std::string& sec, const std::string& key) {
    const json& s = c.section(sec);
    auto it = s.find(key);
    if (it == s.end()) throw ConfigError(c.scenario + ": missing " + sec + "." + key);
    return *it;
}

}  // namespace

double ScenarioConfig::num(const std::string& sec, const std::string& key) const {
    return lookup(*this, sec, key).get<double>();
}

int ScenarioConfig::integer(const std::string& sec, const std::string& key) const {
    return lookup(*this, sec, key).get<int>();
}

bool ScenarioConfig::flag(const std::string& sec, const std::string& key) const {
    return lookup(*this, sec, key).get<bool>();
}

std::string ScenarioConfig::str(const std::string& sec, const std::string& key) const {
    return lookup(*this, sec, key).get<std::string>();
}

std::vector<double> ScenarioConfig::list(const std::string& sec, const std::string& key) const {
    return lookup(*this, sec, key).get<std::vector<double>>();
}

ScenarioConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    auto it = j.find("scenario");
    if (it == j.end() || !it->is_string()) throw ConfigError("config needs a string \"scenario\"");
    ScenarioConfig c;
    c.scenario = it->get<std::string>();
    const ScenarioInfo* info = nullptr;
    for (const auto& s : scenario_registry())
        if (s.id == c.scenario) info = &s;
    if (!info) throw ConfigError("unknown scenario " + c.scenario);

    for (const char* sec : kSections) c.section(sec) = info->defaults.value(sec, json::object());
    for (auto& [key, val] : j.items()) {
        if (key == "scenario") continue;
        if (key == "seed") {
            if (!val.is_number_unsigned() && !(val.is_number_integer() && val.get<long long>() >= 0))
                throw ConfigError("seed must be a non-negative integer");
            c.seed = val.get<std::uint64_t>();
        } else if (key == "output") {
            if (!val.is_string()) throw ConfigError("output must be a string");
            c.output = val.get<std::string>();
        } else if (is_section(key)) {
            if (!val.is_object()) throw ConfigError("section " + key + " must be an object");
            json& dst = c.section(key);
            for (auto& [k, v] : val.items()) {
                auto d = dst.find(k);
                if (d == dst.end()) throw ConfigError("unknown key " + key + "." + k + " for scenario " + c.scenario);
                *d = coerce(*d, v, key + "." + k);
            }
        } else {
            throw ConfigError("unknown top-level key " + key);
        }
    }
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    json j;
    try {
        j = read_json_file(path);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

ScenarioConfig default_config(const std::string& scenario) { return parse_config(json{{"scenario", scenario}}); }

json to_json(const ScenarioConfig& c, bool with_output) {
    json j{{"scenario", c.scenario}, {"grid", c.grid},   {"model", c.model},
           {"integrator", c.integrator}, {"gauge", c.gauge}, {"seed", c.seed}};
    if (with_output) j["output"] = c.output;
    return j;
}

std::string config_hash(const ScenarioConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(c, false).dump())));
    return buf;
}

ScenarioConfig with_value(const ScenarioConfig& c, const std::string& path, const json& value) {
    json j = to_json(c);
    if (path == "seed" || path == "output") {
        j[path] = value;
        return parse_config(j);
    }
    auto dot = path.find('.');
    if (dot == std::string::npos) throw ConfigError("axis must be section.key: " + path);
    std::string sec = path.substr(0, dot), key = path.substr(dot + 1);
    if (!is_section(sec)) throw ConfigError("unknown section in " + path);
    j[sec][key] = value;
    return parse_config(j);
}

json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return json::parse(ss.str());
}

void write_text_atomic(const std::string& path, const std::string& text) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc | std::ios::binary);
        if (!os) throw IoError("cannot write " + tmp);
        os << text;
        if (!os) throw IoError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("rename failed: " + path);
}

}  // namespace backlab
