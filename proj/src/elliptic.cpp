#include "backlab/elliptic.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace backlab {

using std::numbers::pi;

namespace {

struct Agm {
    double a;
    double csum;  // sum 2^{n-1} c_n^2
};

Agm agm(double m) {
    double a = 1.0, b = std::sqrt(1.0 - m), c = std::sqrt(m);
    double csum = 0.5 * c * c, pw = 0.5;
    for (int it = 0; it < 64 && std::abs(c) > 1e-17 * a; ++it) {
        double an = 0.5 * (a + b);
        c = 0.5 * (a - b);
        b = std::sqrt(a * b);
        a = an;
        pw *= 2.0;
        csum += pw * c * c;
    }
    return {a, csum};
}

}  // namespace

double ellip_K_std(double m) {
    if (!(m >= 0.0 && m < 1.0)) throw std::domain_error("ellip_K requires m in [0,1)");
    return pi / (2.0 * agm(m).a);
}

double ellip_E_std(double m) {
    if (!(m >= 0.0 && m <= 1.0)) throw std::domain_error("ellip_E requires m in [0,1]");
    if (m == 1.0) return 1.0;
    Agm r = agm(m);
    return pi / (2.0 * r.a) * (1.0 - r.csum);
}

double ellip_K_full(double m) { return 4.0 * ellip_K_std(m); }

JacobiSCD jacobi_sncndn(double x, double m) {
    if (!(m >= 0.0 && m <= 1.0)) throw std::domain_error("jacobi functions require m in [0,1]");
    if (m == 0.0) return {std::sin(x), std::cos(x), 1.0};
    if (m == 1.0) {
        double s = 1.0 / std::cosh(x);
        return {std::tanh(x), s, s};
    }
    // Reduce to one period 4K, then descending Landen.
    double K = ellip_K_std(m);
    double P = 4.0 * K;
    x = std::remainder(x, P);
    double a[40], c[40];
    a[0] = 1.0;
    double b = std::sqrt(1.0 - m);
    c[0] = std::sqrt(m);
    int n = 0;
    while (std::abs(c[n]) > 1e-16 * a[n] && n < 38) {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = std::sqrt(a[n] * b);
        ++n;
    }
    double phi = std::ldexp(a[n] * x, n);
    double prev = phi;
    for (int k = n; k > 0; --k) {
        prev = phi;
        phi = 0.5 * (phi + std::asin(c[k] * std::sin(phi) / a[k]));
    }
    double sn = std::sin(phi), cn = std::cos(phi);
    double dn = n > 0 ? cn / std::cos(prev - phi) : std::sqrt(1.0 - m * sn * sn);
    return {sn, cn, dn};
}

double jacobi_cn(double x, double m) { return jacobi_sncndn(x, m).cn; }

CnoidalParams cnoidal_params(double m0, double L) {
    if (!(m0 > 0.0 && m0 < 1.0)) throw std::domain_error("m0 must lie in (0,1)");
    if (!(L > 0.0)) throw std::domain_error("L must be positive");
    CnoidalParams p;
    p.m0 = m0;
    p.L = L;
    p.l0 = ellip_K_full(m0) / L;
    p.c0 = 4.0 * (2.0 * m0 - 1.0) * p.l0 * p.l0;
    p.amplitude = 12.0 * m0 * p.l0 * p.l0;
    // Mean of cn² over a period: (E - (1-m)K) / (m K).
    double K = ellip_K_std(m0), E = ellip_E_std(m0);
    p.mean = p.amplitude * (E - (1.0 - m0) * K) / (m0 * K);
    p.shift_speed = p.c0 - p.mean;
    return p;
}

Field cnoidal_exact(const CnoidalParams& p, GridPtr grid, double t) {
    const double shift = p.shift_speed * t;
    return sample_field(std::move(grid), [&](double x) {
        double c = jacobi_cn(p.l0 * (x - shift), p.m0);
        return p.amplitude * c * c - p.mean;
    }, ScalarKind::real, false);
}

CnoidalWave make_cnoidal(double m0, GridPtr grid) {
    if (grid->dim() != 1) throw std::invalid_argument("cnoidal waves are 1D");
    CnoidalWave w;
    w.params = cnoidal_params(m0, grid->length());
    if (grid->length() / grid->n() > 1.0 / (16.0 * w.params.l0))
        throw std::invalid_argument("grid too coarse: need 16 points per width 1/l0");
    w.raw = sample_field(grid, [&](double x) {
        double c = jacobi_cn(w.params.l0 * x, m0);
        return w.params.amplitude * c * c;
    });
    w.u = project_zero_mean(w.raw);
    w.u.zero_mean_required = true;
    return w;
}

EigenPair make_eigenpair(const CnoidalParams& p, GridPtr grid, double t) {
    EigenPair e;
    e.lambda = (2.0 * p.m0 - 1.0) * p.l0 * p.l0;
    e.K_m = ellip_K_full(p.m0);
    // ∫ over one full period of cn²: 4 (E - (1-m)K) / m.
    double K = ellip_K_std(p.m0), E = ellip_E_std(p.m0);
    e.C_m = 4.0 * (E - (1.0 - p.m0) * K) / p.m0;
    const double amp = std::sqrt(p.l0 / e.C_m);
    e.psi = sample_field(std::move(grid), [&](double x) { return amp * jacobi_cn(p.l0 * (x - p.c0 * t), p.m0); });
    return e;
}

double nearest_collocation_eigenvalue(const Field& potential, double target) {
    const SpectralGrid& g = *potential.grid;
    const int N = g.n();
    if (N > 512) throw std::invalid_argument("dense collocation limited to N <= 512");
    // Second-derivative matrix: D2 = F^{-1} diag(-k^2) F, including the Nyquist mode.
    Eigen::MatrixXd D(N, N);
    std::vector<double> col(N);
    for (int d = 0; d < N; ++d) {
        double s = 0.0;
        for (int j = 0; j < N; ++j) {
            double k = 2.0 * pi * g.mode(j) / g.length();
            s += -k * k * std::cos(2.0 * pi * j * d / N);
        }
        col[d] = s / N;
    }
    Field pot = to_physical(potential);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) D(i, j) = col[(i - j + N) % N] + (i == j ? pot[i].real() : 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D, Eigen::EigenvaluesOnly);
    double best = es.eigenvalues()(0);
    for (int i = 0; i < N; ++i)
        if (std::abs(es.eigenvalues()(i) - target) < std::abs(best - target)) best = es.eigenvalues()(i);
    return best;
}

EigenCheck eigencheck(const Field& u_raw, const EigenPair& pair) {
    EigenCheck r;
    Field psi = to_physical(pair.psi);
    Field u = to_physical(u_raw);
    Field d2 = to_physical(ddx(psi, 2));
    Field res = d2;
    for (std::size_t i = 0; i < res.size(); ++i) res[i] += (u[i] / 6.0 - pair.lambda) * psi[i];
    double npsi = l2_norm(psi);
    r.residual = l2_norm(res) / npsi;
    r.normalization = npsi * npsi;
    Field pot = u;
    for (auto& c : pot.values) c /= 6.0;
    r.discrete_eigenvalue = nearest_collocation_eigenvalue(pot, pair.lambda);
    return r;
}

ModulationConstants modulation_constants() {
    using boost::math::quadrature::gauss_kronrod;
    auto integrate = [](auto f) {
        double total = 0.0;
        const double edges[] = {-40, -20, -10, -5, -2, 0, 2, 5, 10, 20, 40};
        for (int i = 0; i + 1 < 11; ++i) total += gauss_kronrod<double, 61>::integrate(f, edges[i], edges[i + 1], 15, 1e-15);
        return total;
    };
    auto sech = [](double x) { return 1.0 / std::cosh(x); };
    ModulationConstants c;
    c.sech2 = integrate([&](double x) { return std::pow(sech(x), 2); });
    c.sech4 = integrate([&](double x) { return std::pow(sech(x), 4); });
    c.sech6 = integrate([&](double x) { return std::pow(sech(x), 6); });
    c.C = c.sech4 / c.sech2;
    double core = integrate([&](double x) { return std::pow(sech(x), 4) * (3.0 * std::pow(sech(x), 2) - 2.0); });
    c.C1 = 2.0 * core / c.sech2;
    c.C2 = core;
    c.C3 = integrate([&](double x) { return std::pow(sech(x), 4) * std::tanh(x) * (3.0 * std::pow(sech(x), 2) - 1.0); });
    c.C4 = integrate([&](double x) { return std::pow(sech(x), 4) * std::tanh(x) * (3.0 * std::pow(sech(x), 2) - 1.0) * x; });
    return c;
}

double modulation_rhs(PerturbedKdvKind kind, double l, double eps) {
    switch (kind) {
        case PerturbedKdvKind::damped: return -eps * (2.0 / 3.0) * l;
        case PerturbedKdvKind::viscous: return -eps * (8.0 / 15.0) * l * l * l;
        default: return -8.0 * eps * l * l * l / (20.0 * eps * l * l + 15.0);
    }
}

double modulation_rk4(PerturbedKdvKind kind, double l0, double eps, double t, int steps) {
    double h = t / steps, l = l0;
    for (int i = 0; i < steps; ++i) {
        double k1 = modulation_rhs(kind, l, eps);
        double k2 = modulation_rhs(kind, l + 0.5 * h * k1, eps);
        double k3 = modulation_rhs(kind, l + 0.5 * h * k2, eps);
        double k4 = modulation_rhs(kind, l + h * k3, eps);
        l += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (!std::isfinite(l)) return std::numeric_limits<double>::infinity();
    }
    return l;
}

double modulation_solution(PerturbedKdvKind kind, double l0, double eps, double t) {
    switch (kind) {
        case PerturbedKdvKind::damped: return l0 * std::exp(-(2.0 / 3.0) * eps * t);
        case PerturbedKdvKind::viscous: {
            double d = 1.0 + (16.0 / 15.0) * eps * l0 * l0 * t;
            return d > 0 ? l0 / std::sqrt(d) : std::numeric_limits<double>::infinity();
        }
        default: return modulation_rk4(kind, l0, eps, t);
    }
}

double viscous_backward_blowup_time(double l0, double eps) { return 15.0 / (16.0 * eps * l0 * l0); }

}  // namespace backlab
