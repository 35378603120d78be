#include "backlab/sweep.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace backlab {

SweepSpec parse_sweep(const json& j) {
    if (!j.is_object()) throw ConfigError("sweep spec must be an object");
    for (auto& [k, v] : j.items())
        if (k != "base" && k != "axes" && k != "threads" && k != "metric") throw ConfigError("unknown sweep key " + k);
    if (!j.contains("base") || !j.contains("axes")) throw ConfigError("sweep spec needs base and axes");
    SweepSpec s;
    s.base = parse_config(j["base"]);
    if (j.contains("threads")) {
        if (!j["threads"].is_number_integer() || j["threads"].get<int>() < 0) throw ConfigError("threads must be >= 0");
        s.threads = j["threads"].get<int>();
    }
    if (j.contains("metric")) {
        if (!j["metric"].is_string()) throw ConfigError("metric must be a string");
        s.metric = j["metric"].get<std::string>();
    }
    const json& axes = j["axes"];
    if (!axes.is_array() || axes.empty() || axes.size() > 3) throw ConfigError("axes must list 1 to 3 axes");
    for (const auto& a : axes) {
        if (!a.is_object() || !a.contains("path") || !a.contains("values") || !a["values"].is_array() ||
            a["values"].empty())
            throw ConfigError("each axis needs a path and a non-empty values list");
        SweepAxis ax{a["path"].get<std::string>(), {}};
        for (const auto& v : a["values"]) {
            with_value(s.base, ax.path, v);  // validates path and type
            ax.values.push_back(v);
        }
        for (const auto& o : s.axes)
            if (o.path == ax.path) throw ConfigError("duplicate axis " + ax.path);
        s.axes.push_back(std::move(ax));
    }
    if (sweep_size(s) > kMaxSweepCells) throw ConfigError("sweep exceeds " + std::to_string(kMaxSweepCells) + " cells");
    return s;
}

SweepSpec load_sweep(const std::string& path) { return parse_sweep(read_json_file(path)); }

std::size_t sweep_size(const SweepSpec& s) {
    std::size_t n = 1;
    for (const auto& a : s.axes) {
        n *= a.values.size();
        if (n > kMaxSweepCells) return kMaxSweepCells + 1;
    }
    return n;
}

int resolve_threads(int requested) {
    if (const char* e = std::getenv("LAB_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(e, &end, 10);
        if (end != e && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

bool radius_bound_exponent(const std::string& axis, double& exponent) {
    static const std::pair<const char*, double> table[] = {
        {"grid.L", 2.5}, {"model.nu", -2.0}, {"model.beta", 2.5}, {"model.gamma", 1.0}};
    for (const auto& [k, v] : table)
        if (axis == k) {
            exponent = v;
            return true;
        }
    return false;
}

namespace {

const json* lookup(const json& j, const std::string& path) {
    const json* cur = &j;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        std::size_t dot = path.find('.', pos);
        std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &(*cur)[key];
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return cur;
}

json point_of(const SweepSpec& s, std::size_t index) {
    json p = json::object();
    for (auto it = s.axes.rbegin(); it != s.axes.rend(); ++it) {
        p[it->path] = it->values[index % it->values.size()];
        index /= it->values.size();
    }
    return p;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
    const std::size_t n = sweep_size(spec);
    if (n > kMaxSweepCells) throw ConfigError("sweep too large");
    SweepResult res;
    res.cells.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        res.cells[i].index = i;
        res.cells[i].point = point_of(spec, i);
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            SweepCell& c = res.cells[i];
            try {
                ScenarioConfig cfg = spec.base;
                for (auto& [k, v] : c.point.items()) cfg = with_value(cfg, k, v);
                c.manifest = run_scenario(cfg);
                c.ok = true;
            } catch (const std::exception& e) {
                c.error = e.what();
            }
        }
    };
    const int threads = std::min<int>(resolve_threads(spec.threads), static_cast<int>(n));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // Log-log least squares of the metric against every numeric axis jointly.
    std::vector<std::size_t> usable;
    std::vector<double> values(n, std::nan(""));
    for (std::size_t i = 0; i < n; ++i) {
        const SweepCell& c = res.cells[i];
        if (!c.ok) continue;
        const json* v = lookup(c.manifest.metrics, spec.metric);
        if (!v || !v->is_number() || v->get<double>() <= 0) continue;
        bool positive = true;
        for (auto& [k, x] : c.point.items()) positive = positive && x.is_number() && x.get<double>() > 0;
        values[i] = v->get<double>();
        if (positive) usable.push_back(i);
    }
    std::vector<std::size_t> fit_axes;
    for (std::size_t a = 0; a < spec.axes.size(); ++a)
        if (spec.axes[a].values.size() >= 2) fit_axes.push_back(a);
    const std::size_t p = fit_axes.size() + 1;
    if (!fit_axes.empty() && usable.size() >= p) {
        Eigen::MatrixXd X(usable.size(), p);
        Eigen::VectorXd y(usable.size());
        for (std::size_t r = 0; r < usable.size(); ++r) {
            const json& pt = res.cells[usable[r]].point;
            X(r, 0) = 1.0;
            for (std::size_t c = 0; c < fit_axes.size(); ++c)
                X(r, c + 1) = std::log(pt[spec.axes[fit_axes[c]].path].get<double>());
            y(r) = std::log(values[usable[r]]);
        }
        Eigen::MatrixXd XtX = X.transpose() * X;
        Eigen::VectorXd beta = XtX.ldlt().solve(X.transpose() * y);
        const double dof = static_cast<double>(usable.size()) - p;
        const double s2 = dof > 0 ? (y - X * beta).squaredNorm() / dof : 0.0;
        Eigen::MatrixXd cov = s2 * XtX.inverse();
        for (std::size_t c = 0; c < fit_axes.size(); ++c) {
            AxisFit f;
            f.axis = spec.axes[fit_axes[c]].path;
            f.slope = beta(c + 1);
            f.stderr_slope = std::sqrt(std::max(0.0, cov(c + 1, c + 1)));
            f.points = usable.size();
            f.has_bound = radius_bound_exponent(f.axis, f.bound);
            if (f.has_bound) f.within_bound = f.slope <= f.bound + f.stderr_slope;
            res.fits.push_back(f);
        }
    }

    json cells = json::array(), fits = json::array();
    std::size_t failed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const SweepCell& c = res.cells[i];
        json row = {{"index", c.index}, {"point", c.point}, {"ok", c.ok}};
        if (c.ok) {
            row["verdict"] = c.manifest.verdict;
            row["pass"] = c.manifest.pass;
            row["config_hash"] = c.manifest.config_hash;
            row["directory"] = c.manifest.directory;
            if (!std::isnan(values[i])) row[spec.metric] = values[i];
            if (!c.manifest.pass) ++failed;
        } else {
            row["error"] = c.error;
            ++failed;
        }
        cells.push_back(row);
    }
    for (const auto& f : res.fits) {
        json j = {{"axis", f.axis}, {"slope", f.slope}, {"stderr", f.stderr_slope}, {"points", f.points}};
        if (f.has_bound) {
            j["bound_exponent"] = f.bound;
            j["within_bound"] = f.within_bound;
        }
        fits.push_back(j);
    }
    res.aggregate = {{"scenario", spec.base.scenario}, {"metric", spec.metric}, {"cells", cells},
                     {"fits", fits},                   {"failed", failed},      {"size", n}};
    return res;
}

}  // namespace backlab
