#pragma once

#include "backlab/models.hpp"

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace backlab {

enum class Scheme { etdrk4, imex_cnab2 };

struct IntegratorConfig {
    Scheme scheme = Scheme::etdrk4;
    double dt0 = 1e-3;
    double dt_min = 1e-12;
    double dt_max = std::numeric_limits<double>::infinity();
    bool adapt = false;
    double tol_loc = 1e-8;
    double t_end = 1.0;
    double cap_norm = 0.0;  // 0: 1e6 * |u0|
    int record_every = 1;
    double tail_threshold = 1e-4;
    // Krasny filter: after every step, modes below filter_level * max|û| are zeroed. 0 disables.
    double filter_level = 0.0;

    void validate() const;
};

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct Sample {
    double t = 0.0;
    double dt = 0.0;
    double norm = 0.0;
    double h1 = 0.0;
    double tail = 0.0;
    std::vector<double> extra;
};

enum class Verdict { completed, blowup, resolution_exhausted };
std::string to_string(Verdict v);

struct GrowthFit {
    double t_a = 0.0, t_b = 0.0;
    double p = 0.0;          // log|u| ≈ c + p t
    double intercept = 0.0;
    double residual = 0.0;   // rms of the log fit
    int convexity = 0;       // +1 convex, 0 flat, -1 concave
    double convex_fraction = 0.0;
    double curvature = 0.0;  // second derivative of a quadratic fit of log|u|
};

GrowthFit fit_growth(const std::vector<double>& t, const std::vector<double>& values);

struct BlowupFit {
    double t_star = std::numeric_limits<double>::quiet_NaN();
    double exponent = 0.0;
    double r2 = 0.0;
    std::size_t window = 0;
};

// Fits |u|^{-p} linearly in t over the samples and extrapolates to zero,
// choosing p from a log-spaced ladder by best linearity.
BlowupFit extrapolate_blowup(const std::vector<double>& t, const std::vector<double>& norms);

struct RunRecord {
    IntegratorConfig config;
    std::string model_name;
    std::vector<std::string> extra_names;
    std::vector<Sample> samples;
    Verdict verdict = Verdict::completed;
    double t_star_lower = std::numeric_limits<double>::quiet_NaN();
    double t_star_estimate = std::numeric_limits<double>::quiet_NaN();
    double t_star_exponent = 0.0;
    bool cap_crossed = false;
    bool dt_collapsed = false;
    bool log_convex = false;
    std::size_t steps = 0;
    std::size_t rejected = 0;
    std::vector<std::string> checkpoints;
    Field final_state;
    double final_time = 0.0;

    std::vector<double> times() const;
    std::vector<double> norms() const;
    std::vector<double> column(const std::string& name) const;
};

// Diagnostic hook: receives the spectral state at each recorded sample.
using Observer = std::function<void(double t, const Field& state, std::vector<double>& extra)>;

class Stepper {
public:
    explicit Stepper(const Model& m, Scheme s = Scheme::etdrk4) : model_(m), scheme_(s) {}
    void step(cvec& v, double dt);
    void reset_history() { have_prev_ = false; }

private:
    struct Coeffs {
        cvec e, e2, q, f1, f2, f3;
    };
    const Coeffs& coeffs(double dt);
    void etdrk4(cvec& v, double dt);
    void cnab2(cvec& v, double dt);

    const Model& model_;
    Scheme scheme_;
    std::map<double, Coeffs> cache_;
    cvec prev_n_;
    double prev_dt_ = 0.0;
    bool have_prev_ = false;
};

Field step(const Field& state, const Model& model, const IntegratorConfig& cfg, double dt);

RunRecord integrate(const Field& u0, const Model& model, const IntegratorConfig& cfg, const Observer& observer = {},
                    const std::vector<std::string>& extra_names = {});

double tail_fraction(const SpectralGrid& g, const cvec& v);
void krasny_filter(cvec& v, double level);

void write_series_csv(const std::string& path, const RunRecord& rec);

}  // namespace backlab
