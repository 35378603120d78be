#include "backlab/gauge.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace backlab {

using std::numbers::pi;

namespace {

double mollifier(double y) {
    if (std::abs(y) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - y * y));
}

double mollifier_mass() {
    static const double z = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(mollifier, -1.0, 1.0, 15, 1e-15);
    return z;
}

// Trigonometric sums for C(ξ) = ∫u(x)g(x+ξ)dx = L Σ conj(û_j) ĝ_j e^{ik_jξ} and derivatives.
struct ShiftSum {
    const SpectralGrid* g;
    cvec w;  // L conj(û) ĝ

    double value(double xi, int deriv = 0) const {
        double s = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            double k = g->kx()[j];
            cplx f = std::exp(cplx(0.0, k * xi));
            for (int d = 0; d < deriv; ++d) f *= cplx(0.0, k);
            s += (w[j] * f).real();
        }
        return s;
    }
};

ShiftSum make_shift_sum(const Field& u, const Field& g) {
    Field us = to_spectral(u), gs = to_spectral(g);
    ShiftSum s{us.grid.get(), cvec(us.size())};
    const double L = us.grid->length();
    for (std::size_t j = 0; j < s.w.size(); ++j) s.w[j] = L * std::conj(us.values[j]) * gs.values[j];
    return s;
}

double wrap(double xi, double L) {
    double r = std::remainder(xi, L);
    return r >= L / 2 ? r - L : r;
}

}  // namespace

double bump_profile(double x, double eps, double L) {
    const double h = 0.75 * eps, r = 0.25 * eps;
    x = std::remainder(x, L);
    if (std::abs(x) >= eps) return 0.0;
    auto eta = [&](double y) {
        double a = std::abs(y);
        return a < h ? L * (h - a) / (h * h) : 0.0;
    };
    auto integrand = [&](double y) { return eta(x - y) * mollifier(y / r); };
    // Split at the kinks of the hat inside the kernel support.
    std::vector<double> cuts = {-r, r};
    for (double k : {x - h, x, x + h})
        if (k > -r && k < r) cuts.push_back(k);
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        s += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, cuts[i], cuts[i + 1], 12, 1e-14);
    return s / (r * mollifier_mass());
}

BumpFunction build_bump(double eps, GridPtr grid) {
    if (grid->dim() != 1) throw std::invalid_argument("bump is 1D");
    const double L = grid->length();
    if (!(eps > 8.0 * grid->dx() && eps < L / 2)) throw std::invalid_argument("eps out of range for this grid");
    BumpFunction b;
    b.eps = eps;
    b.b = sample_field(grid, [&](double x) { return bump_profile(x, eps, L); });
    double sum = 0.0;
    for (const auto& c : b.b.values) sum += c.real();
    double scale = L / (sum * grid->dx());
    for (auto& c : b.b.values) c *= scale;
    sum = 0.0;
    for (const auto& c : b.b.values) {
        sum += c.real();
        b.sup = std::max(b.sup, c.real());
    }
    b.integral = sum * grid->dx();
    b.l2 = l2_norm(b.b);
    b.dl2 = semi_h1_norm(b.b);
    b.c_sup = b.sup / (L / eps);
    b.c_l2 = b.l2 / (L / std::sqrt(eps));
    b.c_dl2 = b.dl2 / (L / std::pow(eps, 1.5));
    return b;
}

GaugeFunction build_gauge(double alpha, const BumpFunction& bump) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    const SpectralGrid& g = *bump.b.grid;
    const double L = g.length();
    GaugeFunction G;
    G.alpha = alpha;
    G.eps = bump.eps;
    G.bump = bump.b;
    // φ' = α(1 − b) has zero mean; integrate spectrally and pin φ(0) = 0.
    Field d = bump.b;
    for (auto& c : d.values) c = alpha * (1.0 - c.real());
    Field ds = to_spectral(d);
    Field ps(ds.grid, ScalarKind::real, Representation::spectral, false);
    const int N = g.n();
    for (int j = 0; j < N; ++j) {
        if (j == 0 || j == N / 2) continue;
        ps.values[j] = ds.values[j] / cplx(0.0, g.kx()[j]);
    }
    Field phi = to_physical(ps);
    const int origin = N / 2;  // x = 0
    double p0 = phi[origin].real();
    for (auto& c : phi.values) c -= p0;
    G.phi = phi;
    G.norm = l2_norm(phi);
    G.dnorm = l2_norm(d);
    G.d2norm = alpha * bump.dl2;
    G.c_phi = G.norm / (alpha * std::pow(L, 1.5));
    G.c_dphi = G.dnorm / (alpha * (std::sqrt(L) + L / std::sqrt(bump.eps)));
    G.c_d2phi = G.d2norm / (alpha * L / std::pow(bump.eps, 1.5));
    // Mismatch of the cumulative-integral definition across one period.
    double drift = alpha * L - alpha * bump.integral;
    G.periodicity_mismatch = std::abs(drift) + std::abs(ds.values[0]) * L;
    return G;
}

double gauge_distance(const Field& u, const GaugeFunction& gauge, double xi) {
    ShiftSum s = make_shift_sum(u, gauge.phi);
    double nu = l2_norm(u);
    return nu * nu + gauge.norm * gauge.norm - 2.0 * s.value(xi);
}

LyapunovSample lyapunov_F(const Field& u, const GaugeFunction& gauge, double t, double C0) {
    const SpectralGrid& g = *gauge.phi.grid;
    const double L = g.length(), h = g.dx();
    const int N = g.n();
    ShiftSum s = make_shift_sum(u, gauge.phi);

    // C at all grid shifts ξ_m = m h via one inverse FFT.
    cvec c = s.w;
    fft_inverse(g, c);
    int best = 0;
    for (int m = 1; m < N; ++m)
        if (c[m].real() > c[best].real()) best = m;
    double center = best * h;

    // Golden-section maximization of C on the bracketing cell pair.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = center - h, b = center + h;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = s.value(x1), f2 = s.value(x2);
    while (b - a > 1e-10 * std::max(1.0, L)) {
        if (f1 > f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = s.value(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = s.value(x2);
        }
    }
    double xi = 0.5 * (a + b);
    // Newton polish on C'(ξ) = 0.
    for (int it = 0; it < 4; ++it) {
        double d1 = s.value(xi, 1), d2 = s.value(xi, 2);
        if (!(d2 < 0.0)) break;
        double step = d1 / d2;
        if (std::abs(step) > h) break;
        xi -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, L)) break;
    }
    LyapunovSample out;
    out.t = t;
    out.xi_star = wrap(xi, L);
    double nu = l2_norm(u);
    out.F = std::max(0.0, nu * nu + gauge.norm * gauge.norm - 2.0 * s.value(xi));
    out.C0 = C0;
    ShiftSum sb = make_shift_sum(u, gauge.bump);
    double bn = l2_norm(gauge.bump);
    out.foc_residual = nu > 0 ? std::abs(sb.value(xi)) / (nu * bn) : 0.0;
    return out;
}

Field project_b_orthogonal(const BumpFunction& bump, const Field& u) {
    Field v = to_physical(project_zero_mean(u));
    const Field& b = bump.b;
    double bu = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double bi = b[i].real();
        bu += bi * v[i].real();
        bb += bi * (bi - 1.0);
    }
    double c = bu / bb;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * (b[i].real() - 1.0);
    v.zero_mean_required = true;
    return v;
}

double check_poincare(const BumpFunction& bump, const Field& u) {
    Field v = to_physical(u);
    const double L = v.grid->length(), h = v.grid->dx();
    double num = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) num += bump.b[i].real() * std::norm(v[i]);
    num *= h;
    double ux = semi_h1_norm(v);
    if (ux == 0.0) throw std::invalid_argument("check_poincare: |u_x| = 0");
    return num / (bump.eps * L * ux * ux);
}

double empirical_c0(const BumpFunction& bump, int count, std::uint64_t seed) {
    GridPtr g = bump.b.grid;
    const double eps = bump.eps;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(-2.0, 2.0), width(0.15, 1.0);
    std::normal_distribution<double> amp;
    double best = 0.0;
    for (int n = 0; n < count; ++n) {
        // A few Gaussian packets on the scale of the bump, band-limited by the grid mask.
        double x0[4], s0[4], a0[4];
        for (int m = 0; m < 4; ++m) {
            x0[m] = pos(rng) * eps;
            s0[m] = width(rng) * eps;
            a0[m] = amp(rng);
        }
        Field u = sample_field(g, [&](double x) {
            double v = 0.0;
            for (int m = 0; m < 4; ++m) {
                double d = std::remainder(x - x0[m], g->length());
                v += a0[m] * std::exp(-0.5 * d * d / (s0[m] * s0[m]));
            }
            return v;
        });
        u = apply_mask(u);
        Field p = project_b_orthogonal(bump, u);
        best = std::max(best, check_poincare(bump, p));
    }
    return best;
}

double convention_C0(double nu, double beta, double gamma, double alpha, double L) {
    return nu * alpha * alpha * L + std::pow(alpha * L, 3) + beta * alpha * alpha * std::pow(L, 3) +
           gamma * gamma / std::pow(nu, 4) * std::pow(alpha * L, 5);
}

double epsilon_gauge(double nu, double alpha, double c0, double L) { return nu / (2.0 * alpha * c0 * L); }

double lifespan_bound(double R0, double beta, double L, double C) {
    return C * (1.0 / (beta * std::pow(R0, 0.25)) + beta * L * L * L / std::pow(R0, 1.75));
}

MonitorResult differential_inequality_monitor(const std::vector<double>& t, const std::vector<double>& F,
                                              const std::vector<double>& norm_u, double alpha, double nu,
                                              double f_minus_half2, double C0) {
    MonitorResult r;
    std::size_t ok = 0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        double lhs = (F[i + 1] - F[i]) / (t[i + 1] - t[i]);
        double rhs = -0.5 * alpha * norm_u[i] * norm_u[i] + 4.0 / nu * f_minus_half2 + C0;
        r.lhs.push_back(lhs);
        r.rhs.push_back(rhs);
        if (lhs <= rhs) ++ok;
    }
    r.fraction = r.lhs.empty() ? 1.0 : static_cast<double>(ok) / r.lhs.size();
    return r;
}

double inverse_sqrt_a_norm2(const Field& f) {
    Field s = to_spectral(f);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double k2 = s.grid->k2()[i];
        if (k2 > 0) acc += std::norm(s.values[i]) / k2;
    }
    return acc * s.grid->length(0) * (s.grid->dim() == 2 ? s.grid->length(1) : 1.0);
}

}  // namespace backlab
