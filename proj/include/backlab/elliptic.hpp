#pragma once

#include "backlab/models.hpp"
#include "backlab/spectral.hpp"

namespace backlab {

// Complete integrals. The full-period form integrates over [0, 2π] and
// equals four times the standard quarter-period K(m).
double ellip_K_full(double m);
double ellip_K_std(double m);
double ellip_E_std(double m);

struct JacobiSCD {
    double sn, cn, dn;
};

JacobiSCD jacobi_sncndn(double x, double m);
double jacobi_cn(double x, double m);

struct CnoidalParams {
    double m0 = 0.5;
    double L = 0.0;
    double l0 = 0.0;
    double c0 = 0.0;
    double amplitude = 0.0;
    double mean = 0.0;         // spatial mean of the raw wave
    double shift_speed = 0.0;  // speed of the mean-subtracted profile, c0 - mean
};

CnoidalParams cnoidal_params(double m0, double L);

struct CnoidalWave {
    CnoidalParams params;
    Field u;    // zero-mean profile
    Field raw;  // 12 m l² cn²(l x)
};

CnoidalWave make_cnoidal(double m0, GridPtr grid);
// Exact zero-mean solution at time t, built analytically (no interpolation).
Field cnoidal_exact(const CnoidalParams& p, GridPtr grid, double t);

struct EigenPair {
    double lambda = 0.0;
    double C_m = 0.0;
    double K_m = 0.0;
    Field psi;
};

EigenPair make_eigenpair(const CnoidalParams& p, GridPtr grid, double t = 0.0);

struct EigenCheck {
    double residual = 0.0;             // ‖ψ'' + (u/6)ψ − λψ‖ / ‖ψ‖
    double discrete_eigenvalue = 0.0;  // nearest eigenvalue of ∂xx + diag(u/6)
    double normalization = 0.0;        // ∫ψ²
};

EigenCheck eigencheck(const Field& u_raw, const EigenPair& pair);
// Nearest eigenvalue of the dense collocation matrix ∂xx + diag(potential).
double nearest_collocation_eigenvalue(const Field& potential, double target);

struct ModulationConstants {
    double sech2 = 0, sech4 = 0, sech6 = 0;
    double C = 0, C1 = 0, C2 = 0, C3 = 0, C4 = 0;
    double C_exact = 2.0 / 3.0, C1_exact = 8.0 / 15.0, C2_exact = 8.0 / 15.0, C3_exact = 0.0, C4_exact = 0.2;
};

ModulationConstants modulation_constants();

double modulation_rhs(PerturbedKdvKind kind, double l, double eps);
// Closed forms for damped and viscous kinds; RK4 for BBM. Negative t means backward.
double modulation_solution(PerturbedKdvKind kind, double l0, double eps, double t);
double modulation_rk4(PerturbedKdvKind kind, double l0, double eps, double t, int steps = 4000);
double viscous_backward_blowup_time(double l0, double eps);

}  // namespace backlab
