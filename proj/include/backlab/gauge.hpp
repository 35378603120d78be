#pragma once

#include "backlab/spectral.hpp"

#include <cstdint>
#include <vector>

namespace backlab {

struct BumpFunction {
    double eps = 0.0;
    Field b;
    double integral = 0.0;
    double sup = 0.0;
    double l2 = 0.0;
    double dl2 = 0.0;
    // Measured constants in sup b ≤ c L/ε, |b| ≤ c L/ε^{1/2}, |b'| ≤ c L/ε^{3/2}.
    double c_sup = 0.0, c_l2 = 0.0, c_dl2 = 0.0;
};

// Hat of half-width 3ε/4 mollified by the exp(-1/(1-x²)) kernel of radius ε/4,
// so the support is exactly (-ε, ε). Normalized to ∫b = L on the grid.
BumpFunction build_bump(double eps, GridPtr grid);
// Same construction evaluated at arbitrary points (no grid normalization).
double bump_profile(double x, double eps, double L);

struct GaugeFunction {
    double alpha = 0.0;
    double eps = 0.0;
    Field phi;
    Field bump;
    double norm = 0.0, dnorm = 0.0, d2norm = 0.0;
    // Measured constants in |φ| ≤ cαL^{3/2}, |φ'| ≤ cα(L^{1/2}+L/ε^{1/2}), |φ''| ≤ cαL/ε^{3/2}.
    double c_phi = 0.0, c_dphi = 0.0, c_d2phi = 0.0;
    double periodicity_mismatch = 0.0;
};

GaugeFunction build_gauge(double alpha, const BumpFunction& bump);

struct LyapunovSample {
    double t = 0.0;
    double F = 0.0;
    double xi_star = 0.0;
    double C0 = 0.0;
    double foc_residual = 0.0;  // |∫u b(·+ξ*)| / (|u||b|)
};

LyapunovSample lyapunov_F(const Field& u, const GaugeFunction& gauge, double t = 0.0, double C0 = 0.0);
// ∫(u − φ(·+ξ))² evaluated exactly for the trigonometric interpolants.
double gauge_distance(const Field& u, const GaugeFunction& gauge, double xi);

// Zero-mean projection followed by removal of the (b−1) component so that ∫b u = 0.
Field project_b_orthogonal(const BumpFunction& bump, const Field& u);
double check_poincare(const BumpFunction& bump, const Field& u);
// Maximum ratio over a fixed localized test set (count functions, given seed).
double empirical_c0(const BumpFunction& bump, int count = 100, std::uint64_t seed = 0);

double convention_C0(double nu, double beta, double gamma, double alpha, double L);
double epsilon_gauge(double nu, double alpha, double c0, double L);
double lifespan_bound(double R0, double beta, double L, double C);

struct MonitorResult {
    std::vector<double> lhs, rhs;
    double fraction = 0.0;
};

// Forward difference quotients of F against −(α/2)|u|² + (4/ν)|A^{-1/2}f|² + C0.
MonitorResult differential_inequality_monitor(const std::vector<double>& t, const std::vector<double>& F,
                                              const std::vector<double>& norm_u, double alpha, double nu,
                                              double f_minus_half2, double C0);

// |A^{-1/2} f|² = Σ |f_k|²/k² · L.
double inverse_sqrt_a_norm2(const Field& f);

}  // namespace backlab
