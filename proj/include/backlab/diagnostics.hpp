#pragma once

#include "backlab/integrator.hpp"
#include "backlab/spectral.hpp"

#include <string>
#include <vector>

namespace backlab {

// 1D: E_k = (L/2)(|u_k|² + |u_{-k}|²) for integer k = 1..N/2.
// 2D: unit-width shell sums of L_x L_y |u_k|² binned by round(|k|/Δk).
struct Spectrum {
    int dim = 1;
    std::vector<double> k;
    std::vector<double> E;
    std::vector<double> k2E;  // Σ over the bin of |k|² weights; Σ k2E = |∇u|²
    double mean_energy = 0.0;  // mode-0 part, same normalization as E, excluded from E
    double total = 0.0;        // Σ E
    double k_max = 0.0;
    // ν|u_x|², the right side of ½ d/ds|u|² for the backward heat part.
    double backward_rate(double nu) const;
};

Spectrum compute_spectrum(const Field& u);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    std::size_t points = 0;
};

// Least squares of log E against log k on k_lo ≤ k ≤ k_hi (positive E only).
SlopeFit fit_spectral_slope(const Spectrum& s, double k_lo, double k_hi);
// Same fit on logarithmically binned data (bins per octave).
SlopeFit fit_spectral_slope_logbinned(const Spectrum& s, double k_lo, double k_hi, int bins_per_octave = 4);

void write_spectrum_csv(const std::string& path, const Spectrum& s);

struct BoundCheck {
    bool pass = true;
    std::size_t violations = 0;
    double worst_margin = 0.0;  // most negative (bound − value)/scale
    double fitted_exponent = 0.0;
    std::string detail;
};

// s is the backward time (s = −t ≥ 0); mass2 = |u(s)|².
BoundCheck nls_bounds_check(const std::vector<double>& s, const std::vector<double>& mass2, double lambda,
                            double u0_norm2, double f_norm2);
double nls_upper_bound(double s, double lambda, double u0_norm2, double f_norm2);
double nls_lower_bound(double s, double lambda, double u0_norm2, double f_norm2);

struct NlsEnergyCheck {
    bool pass = true;
    std::size_t violations = 0;
    double energy_exponent = 0.0;
    double h1_exponent = 0.0;
};

NlsEnergyCheck nls_energy_bound_check(const std::vector<double>& s, const std::vector<double>& phi,
                                      const std::vector<double>& energy, const std::vector<double>& h1,
                                      double lambda, double L, double f_norm2, double tol);

double nls_energy(const Field& u);  // |u_x|² − ½|u|⁴_{L⁴}
double nls_phi(const Field& u, const Field& f);

struct RiccatiCheck {
    bool dominated = true;
    std::size_t violations = 0;
    double s1 = 0.0;  // closed-form blow-up time of the comparison ODE
    double worst_ratio = 0.0;
};

double riccati_blowup_time(double y0, double delta, double alpha, double L);
double riccati_rk4(double y0, double delta, double alpha, double L, double s, int steps = 2000);
RiccatiCheck cgl_riccati_check(const std::vector<double>& s, const std::vector<double>& y, double delta, double alpha,
                               double L, double rel_tol = 1e-8);

struct SandwichCheck {
    bool upper_ok = true;
    std::size_t upper_violations = 0;
    double lower_fraction = 0.0;  // fraction of samples satisfying the convention-constant lower bound
    bool q_converged = false;
    double q_final = 0.0;
    int nearest_shell = 0;
    double shell_rel_err = 0.0;
    double q_oscillation = 0.0;
};

SandwichCheck hyperns_sandwich_check(const std::vector<double>& t, const std::vector<double>& norm_u,
                                     const std::vector<double>& q, double nu, double L, double au0_2,
                                     double u0_norm);

// Residuals of a differentiated identity along a uniformly sampled series:
// d/dt Q(t) versus rhs(t), using fourth-order centered differences.
std::vector<double> derivative_residuals(const std::vector<double>& t, const std::vector<double>& Q,
                                         const std::vector<double>& rhs);

}  // namespace backlab
