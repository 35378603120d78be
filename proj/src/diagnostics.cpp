#include "backlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace backlab {

using std::numbers::pi;

double Spectrum::backward_rate(double nu) const {
    double s = 0.0;
    for (double v : k2E) s += v;
    return nu * s;
}

Spectrum compute_spectrum(const Field& u) {
    Field s = to_spectral(u);
    const SpectralGrid& g = *s.grid;
    Spectrum sp;
    sp.dim = g.dim();
    if (g.dim() == 1) {
        const int N = g.n();
        const double L = g.length();
        sp.mean_energy = 0.5 * L * std::norm(s.values[0]);
        for (int k = 1; k <= N / 2; ++k) {
            double e;
            if (k == N / 2)
                e = 0.5 * L * std::norm(s.values[k]);
            else
                e = 0.5 * L * (std::norm(s.values[k]) + std::norm(s.values[N - k]));
            double kk = g.kx()[k];
            double w = (k == N / 2) ? L * std::norm(s.values[k]) : L * (std::norm(s.values[k]) + std::norm(s.values[N - k]));
            sp.k.push_back(k);
            sp.E.push_back(e);
            sp.k2E.push_back(kk * kk * w);
        }
    } else {
        const double area = g.length(0) * g.length(1);
        const double dk = 2.0 * pi / g.length(0);
        int nb = static_cast<int>(std::ceil(std::sqrt(2.0) * (g.n(0) / 2 + 1))) + 1;
        sp.k.resize(nb);
        sp.E.assign(nb, 0.0);
        sp.k2E.assign(nb, 0.0);
        for (int b = 0; b < nb; ++b) sp.k[b] = b;
        sp.mean_energy = area * std::norm(s.values[0]);
        for (std::size_t i = 1; i < s.size(); ++i) {
            double kk = std::sqrt(g.k2()[i]);
            int b = static_cast<int>(std::lround(kk / dk));
            double e = area * std::norm(s.values[i]);
            sp.E[b] += e;
            sp.k2E[b] += g.k2()[i] * e;
        }
        // Drop the empty zero bin so k and E stay aligned with k ≥ 1.
        sp.k.erase(sp.k.begin());
        sp.E.erase(sp.E.begin());
        sp.k2E.erase(sp.k2E.begin());
    }
    for (double e : sp.E) sp.total += e;
    double tail = sp.total;
    sp.k_max = sp.k.empty() ? 0.0 : sp.k.back();
    for (std::size_t i = 0; i < sp.E.size(); ++i) {
        tail -= sp.E[i];
        if (tail < 1e-6 * sp.total) {
            sp.k_max = sp.k[i];
            break;
        }
    }
    return sp;
}

namespace {

SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    SlopeFit f;
    const std::size_t n = x.size();
    f.points = n;
    if (n < 2) return f;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - f.intercept - f.slope * x[i];
        ss += r * r;
    }
    f.stderr_slope = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
    return f;
}

}  // namespace

SlopeFit fit_spectral_slope(const Spectrum& s, double k_lo, double k_hi) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < s.k.size(); ++i)
        if (s.k[i] >= k_lo && s.k[i] <= k_hi && s.E[i] > 0) {
            x.push_back(std::log(s.k[i]));
            y.push_back(std::log(s.E[i]));
        }
    return loglog_fit(x, y);
}

SlopeFit fit_spectral_slope_logbinned(const Spectrum& s, double k_lo, double k_hi, int bins_per_octave) {
    std::vector<double> x, y;
    double ratio = std::exp2(1.0 / bins_per_octave);
    for (double a = k_lo; a < k_hi; a *= ratio) {
        double b = std::min(a * ratio, k_hi);
        double sum = 0, wk = 0;
        int cnt = 0;
        for (std::size_t i = 0; i < s.k.size(); ++i)
            if (s.k[i] >= a && s.k[i] < b && s.E[i] > 0) {
                sum += s.E[i];
                wk += std::log(s.k[i]);
                ++cnt;
            }
        if (cnt > 0) {
            x.push_back(wk / cnt);
            y.push_back(std::log(sum / cnt));
        }
    }
    return loglog_fit(x, y);
}

void write_spectrum_csv(const std::string& path, const Spectrum& s) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "k,E_k\n" << std::setprecision(17);
    for (std::size_t i = 0; i < s.k.size(); ++i) os << s.k[i] << ',' << s.E[i] << '\n';
}

double nls_upper_bound(double s, double lambda, double u0, double f2) {
    double e = std::exp(3.0 * lambda * s);
    return e * u0 + f2 / (3.0 * lambda * lambda) * (e - 1.0);
}

double nls_lower_bound(double s, double lambda, double u0, double f2) {
    double e = std::exp(lambda * s);
    return e * u0 + f2 / (lambda * lambda) * (1.0 - e);
}

BoundCheck nls_bounds_check(const std::vector<double>& s, const std::vector<double>& mass2, double lambda,
                            double u0_norm2, double f_norm2) {
    BoundCheck c;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double up = nls_upper_bound(s[i], lambda, u0_norm2, f_norm2);
        double lo = nls_lower_bound(s[i], lambda, u0_norm2, f_norm2);
        double tol = 1e-9 * up;
        double m1 = (up - mass2[i]) / up, m2 = (mass2[i] - lo) / up;
        c.worst_margin = std::min({c.worst_margin, m1, m2});
        if (mass2[i] > up + tol || mass2[i] < lo - tol) ++c.violations;
    }
    std::vector<double> norms(mass2.size());
    for (std::size_t i = 0; i < mass2.size(); ++i) norms[i] = std::sqrt(mass2[i]);
    if (s.size() >= 20) c.fitted_exponent = fit_growth(s, norms).p;
    const double lo = 0.5 * lambda - 0.05 * lambda, hi = 1.5 * lambda + 0.05 * lambda;
    bool band = c.fitted_exponent >= lo && c.fitted_exponent <= hi;
    c.pass = c.violations == 0 && band;
    c.detail = "p=" + std::to_string(c.fitted_exponent);
    return c;
}

double nls_energy(const Field& u) {
    double ux = semi_h1_norm(u);
    return ux * ux - 0.5 * lp_norm_p(u, 4);
}

double nls_phi(const Field& u, const Field& f) { return nls_energy(u) + 2.0 * inner_product(f, u).real(); }

NlsEnergyCheck nls_energy_bound_check(const std::vector<double>& s, const std::vector<double>& phi,
                                      const std::vector<double>& energy, const std::vector<double>& h1,
                                      double lambda, double L, double f_norm2, double tol) {
    NlsEnergyCheck c;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double e = std::exp(2.0 * lambda * s[i]);
        double bound = e * phi[0] + 0.5 * (L / 4.0 + f_norm2) * (e - 1.0);
        if (phi[i] > bound + 1e-9 * std::abs(bound)) ++c.violations;
    }
    bool ok = c.violations == 0;
    std::vector<double> ep;
    for (double e : energy) ep.push_back(e);
    bool positive = std::all_of(ep.begin(), ep.end(), [](double v) { return v > 0; });
    if (positive && s.size() >= 20) c.energy_exponent = fit_growth(s, ep).p;
    if (s.size() >= 20) c.h1_exponent = fit_growth(s, h1).p;
    c.pass = ok && positive && c.energy_exponent <= 3.0 * lambda + tol && c.h1_exponent <= 4.5 * lambda + tol;
    return c;
}

double riccati_blowup_time(double y0, double delta, double alpha, double L) {
    // y = 1/z, z' = 2δz − 2α/L.
    double zs = alpha / (delta * L), z0 = 1.0 / y0;
    if (z0 >= zs) return std::numeric_limits<double>::infinity();
    return std::log(zs / (zs - z0)) / (2.0 * delta);
}

double riccati_rk4(double y0, double delta, double alpha, double L, double s, int steps) {
    auto f = [&](double y) { return -2.0 * delta * y + 2.0 * alpha / L * y * y; };
    double h = s / steps, y = y0;
    for (int i = 0; i < steps; ++i) {
        double k1 = f(y), k2 = f(y + 0.5 * h * k1), k3 = f(y + 0.5 * h * k2), k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (!std::isfinite(y)) return std::numeric_limits<double>::infinity();
    }
    return y;
}

RiccatiCheck cgl_riccati_check(const std::vector<double>& s, const std::vector<double>& y, double delta, double alpha,
                               double L, double rel_tol) {
    RiccatiCheck c;
    c.s1 = riccati_blowup_time(y.front(), delta, alpha, L);
    c.worst_ratio = std::numeric_limits<double>::infinity();
    auto f = [&](double v) { return -2.0 * delta * v + 2.0 * alpha / L * v * v; };
    double yr = y.front(), sr = s.empty() ? 0.0 : s.front();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] >= c.s1) break;
        // March the comparison solution with RK4, refining toward its blow-up time.
        while (sr < s[i]) {
            double h = std::min({s[i] - sr, 1e-3 * c.s1, 0.02 * (c.s1 - sr)});
            double k1 = f(yr), k2 = f(yr + 0.5 * h * k1), k3 = f(yr + 0.5 * h * k2), k4 = f(yr + h * k3);
            yr += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            sr += h;
        }
        if (!std::isfinite(yr)) break;
        c.worst_ratio = std::min(c.worst_ratio, y[i] / yr);
        if (y[i] < yr * (1.0 - rel_tol)) ++c.violations;
    }
    c.dominated = c.violations == 0;
    return c;
}

SandwichCheck hyperns_sandwich_check(const std::vector<double>& t, const std::vector<double>& norm_u,
                                     const std::vector<double>& q, double nu, double L, double au0_2,
                                     double u0_norm) {
    SandwichCheck c;
    const double lambda1 = std::pow(2.0 * pi / L, 2);
    const double b = nu * au0_2 / (u0_norm * u0_norm) *
                     std::exp(std::pow(nu, -1.5) / (lambda1 * lambda1) * u0_norm * u0_norm);
    std::size_t lower_ok = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double up = std::exp(-nu * lambda1 * lambda1 * t[i]) * u0_norm;
        if (norm_u[i] > up * (1.0 + 1e-10)) ++c.upper_violations;
        double lo = std::exp(-b * t[i]) * u0_norm;
        if (norm_u[i] >= lo * (1.0 - 1e-10)) ++lower_ok;
    }
    c.upper_ok = c.upper_violations == 0;
    c.lower_fraction = t.empty() ? 1.0 : static_cast<double>(lower_ok) / t.size();
    if (!q.empty()) {
        c.q_final = q.back();
        std::size_t start = static_cast<std::size_t>(0.8 * q.size());
        double mx = q[start], mn = q[start];
        bool decreasing = true;
        double prev = std::abs(q[start] - c.q_final);
        for (std::size_t i = start; i < q.size(); ++i) {
            mx = std::max(mx, q[i]);
            mn = std::min(mn, q[i]);
            double d = std::abs(q[i] - c.q_final);
            if (d > prev * (1.0 + 1e-9) + 1e-14 * c.q_final) decreasing = false;
            prev = d;
        }
        c.q_oscillation = (mx - mn) / c.q_final;
        const double unit = std::pow(2.0 * pi / L, 4);
        int j = static_cast<int>(std::lround(std::sqrt(c.q_final / unit)));
        j = std::clamp(j, 1, 64);
        c.nearest_shell = j;
        double target = unit * j * j;
        c.shell_rel_err = std::abs(c.q_final - target) / target;
        c.q_converged = decreasing && c.q_oscillation < 0.05 && c.shell_rel_err < 0.05;
    }
    return c;
}

std::vector<double> derivative_residuals(const std::vector<double>& t, const std::vector<double>& Q,
                                         const std::vector<double>& rhs) {
    std::vector<double> r;
    for (std::size_t i = 2; i + 2 < t.size(); ++i) {
        double h = (t[i + 2] - t[i - 2]) / 4.0;
        double d = (Q[i - 2] - 8.0 * Q[i - 1] + 8.0 * Q[i + 1] - Q[i + 2]) / (12.0 * h);
        r.push_back(d - rhs[i]);
    }
    return r;
}

}  // namespace backlab
