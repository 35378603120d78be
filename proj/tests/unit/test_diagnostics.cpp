#include "doctest.h"

#include "backlab/diagnostics.hpp"
#include "backlab/elliptic.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace backlab;
using std::numbers::pi;

TEST_SUITE("diagnostics") {

TEST_CASE("1D spectrum convention and Parseval") {
    const double L = 3.0;
    auto g = make_grid(1, 64, L);
    Field u = sample_field(g, [&](double x) { return std::sin(2 * pi * x / L); });
    Spectrum s = compute_spectrum(u);
    CHECK(s.E[0] == doctest::Approx(L / 4).epsilon(1e-12));
    CHECK(s.k_max == 1.0);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    Field r = make_field(g);
    for (auto& c : r.values) c = nd(rng);
    Spectrum sr = compute_spectrum(r);
    double n2 = std::pow(l2_norm(r), 2);
    CHECK(std::abs(2 * (sr.total + sr.mean_energy) - n2) < 1e-12 * n2);
    double h = std::pow(semi_h1_norm(r), 2);
    CHECK(std::abs(sr.backward_rate(1.0) - h) < 1e-12 * h);
}

TEST_CASE("2D shell spectrum") {
    const double L = 2 * pi;
    auto g = make_grid(2, 32, L);
    Field u = sample_field(g, [](double x, double y) { return std::cos(3 * x) + 0.5 * std::sin(4 * y) + std::cos(3 * x + 4 * y); });
    Spectrum s = compute_spectrum(u);
    double n2 = std::pow(l2_norm(u), 2);
    CHECK(std::abs(s.total + s.mean_energy - n2) < 1e-12 * n2);
    // Shells 3, 4 and 5 carry (L²/2)·amplitude² each.
    CHECK(s.E[2] == doctest::Approx(L * L / 2).epsilon(1e-12));
    CHECK(s.E[3] == doctest::Approx(L * L / 8).epsilon(1e-12));
    CHECK(s.E[4] == doctest::Approx(L * L / 2).epsilon(1e-12));
}

TEST_CASE("slope fits") {
    Spectrum s;
    for (int k = 1; k <= 100; ++k) {
        s.k.push_back(k);
        s.E.push_back(3.0 * std::pow(k, -2.0));
    }
    SlopeFit f = fit_spectral_slope(s, 3, 30);
    CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(f.points == 28);
    SlopeFit b = fit_spectral_slope_logbinned(s, 3, 30);
    CHECK(b.slope == doctest::Approx(-2.0).epsilon(0.05));
}

TEST_CASE("NLS bounds") {
    const double lam = 0.1;
    CHECK(nls_upper_bound(0, lam, 2.0, 1.0) == 2.0);
    CHECK(nls_lower_bound(0, lam, 2.0, 1.0) == 2.0);
    CHECK(nls_upper_bound(10, lam, 1.0, 0) == doctest::Approx(std::exp(3.0)));
    CHECK(nls_lower_bound(10, lam, 1.0, 0) == doctest::Approx(std::exp(1.0)));
    std::vector<double> s, m;
    for (int i = 0; i <= 100; ++i) {
        s.push_back(i);
        m.push_back(std::exp(2 * lam * i));
    }
    BoundCheck c = nls_bounds_check(s, m, lam, 1.0, 0.0);
    CHECK(c.violations == 0);
    CHECK(c.fitted_exponent == doctest::Approx(lam).epsilon(1e-9));
    CHECK(c.pass);
    m[50] *= 1e-3;
    CHECK(nls_bounds_check(s, m, lam, 1.0, 0.0).violations == 1);
}

TEST_CASE("NLS energy of a plane wave") {
    const double L = 2 * pi, A = 0.3;
    const int k = 2;
    auto g = make_grid(1, 64, L);
    Field u = sample_field(g, [&](double x) { return A * std::exp(cplx(0, k * x)); }, ScalarKind::complex);
    CHECK(nls_energy(u) == doctest::Approx(k * k * A * A * L - 0.5 * std::pow(A, 4) * L).epsilon(1e-12));
    Field f = make_field(g, ScalarKind::complex);
    CHECK(nls_phi(u, f) == doctest::Approx(nls_energy(u)));
}

TEST_CASE("Riccati comparison") {
    const double L = 2 * pi;
    double s1 = riccati_blowup_time(4 * pi, 1.0, 1.0, L);
    CHECK(s1 == doctest::Approx(std::log(2.0) / 2).epsilon(1e-14));
    CHECK(std::isinf(riccati_blowup_time(L, 1.0, 1.0, L)));
    CHECK(riccati_rk4(L, 1.0, 1.0, L, 1.0) == doctest::Approx(L).epsilon(1e-12));
    // Closed form y(s) = 1/(zs − (zs − z0)e^{2s}).
    double zs = 1 / L, z0 = 1 / (4 * pi);
    double sm = 0.3;
    CHECK(riccati_rk4(4 * pi, 1, 1, L, sm, 20000) ==
          doctest::Approx(1 / (zs - (zs - z0) * std::exp(2 * sm))).epsilon(1e-9));

    std::vector<double> s, y;
    for (int i = 0; i < 300; ++i) {
        double t = i * 1e-3;
        s.push_back(t);
        y.push_back(1.01 / (zs - (zs - z0) * std::exp(2 * t)));
    }
    y[0] = 4 * pi;
    CHECK(cgl_riccati_check(s, y, 1, 1, L).dominated);
    y[200] *= 0.9;
    CHECK_FALSE(cgl_riccati_check(s, y, 1, 1, L).dominated);
}

TEST_CASE("hyperviscous sandwich on exact decay") {
    const double L = 2 * pi, nu = 1;
    std::vector<double> t, n, q;
    for (int i = 0; i <= 200; ++i) {
        t.push_back(0.01 * i);
        n.push_back(std::exp(-4.0 * t.back()));  // shell |k|²=2
        q.push_back(4.0);
    }
    SandwichCheck c = hyperns_sandwich_check(t, n, q, nu, L, 4.0, 1.0);
    CHECK(c.upper_ok);
    CHECK(c.q_converged);
    CHECK(c.nearest_shell == 2);
    CHECK(c.lower_fraction == 1.0);
    n[100] = 2.0;
    CHECK_FALSE(hyperns_sandwich_check(t, n, q, nu, L, 4.0, 1.0).upper_ok);
}

TEST_CASE("derivative residuals") {
    std::vector<double> t, Q, r;
    for (int i = 0; i <= 100; ++i) {
        double s = 0.01 * i;
        t.push_back(s);
        Q.push_back(std::sin(s));
        r.push_back(std::cos(s));
    }
    for (double e : derivative_residuals(t, Q, r)) CHECK(std::abs(e) < 1e-9);
}

}
