#include "doctest.h"

#include "backlab/elliptic.hpp"
#include "backlab/integrator.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

using namespace backlab;
using std::numbers::pi;

namespace {

double K_quadrature(double m) {
    auto f = [m](double th) { return 1.0 / std::sqrt(1.0 - m * std::sin(th) * std::sin(th)); };
    double s = 0;
    for (int i = 0; i < 8; ++i)
        s += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, i * pi / 4, (i + 1) * pi / 4, 12, 1e-14);
    return s;
}

// cn via inversion of the incomplete integral: x = F(am x | m), cn = cos(am x).
// F(φ + nπ) = 2nK + F(φ), so F is evaluated on |φ| ≤ π/2 only.
double cn_oracle(double x, double m) {
    double k = std::sqrt(m);
    double K = std::comp_ellint_1(k);
    auto F = [&](double phi) {
        double n = std::round(phi / pi);
        return 2 * n * K + std::ellint_1(k, phi - n * pi);
    };
    double lo = x * pi / (2 * K) - pi, hi = x * pi / (2 * K) + pi;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        double mid = 0.5 * (lo + hi);
        (F(mid) < x ? lo : hi) = mid;
    }
    return std::cos(0.5 * (lo + hi));
}

}  // namespace

TEST_SUITE("elliptic") {

TEST_CASE("full-period complete integral") {
    CHECK(ellip_K_full(0.0) == doctest::Approx(2 * pi).epsilon(1e-15));
    CHECK(std::abs(ellip_K_full(0.5) - 4 * 1.854074677301372) < 1e-13);
    for (double m : {0.1, 0.5, 0.9, 0.99, 0.999999})
        CHECK(std::abs(ellip_K_full(m) - K_quadrature(m)) / K_quadrature(m) < 1e-13);
    for (double m : {0.2, 0.7, 0.95})
        CHECK(std::abs(ellip_K_std(m) - std::comp_ellint_1(std::sqrt(m))) < 1e-14 * ellip_K_std(m));
    for (double m : {0.2, 0.7, 0.95})
        CHECK(std::abs(ellip_E_std(m) - std::comp_ellint_2(std::sqrt(m))) < 1e-12);
    // 30-digit reference values.
    CHECK(std::abs(ellip_E_std(0.7) - 1.24167056794582277731678800309) < 1e-15);
    CHECK(std::abs(ellip_E_std(0.95) - 1.06047372776627828590489456532) < 1e-15);
    CHECK(std::abs(ellip_K_full(0.999999) - 33.1762058544042488075981161359) < 1e-13);
    CHECK(ellip_K_full(1 - 1e-10) > 40);
    CHECK_THROWS(ellip_K_full(1.0));
}

TEST_CASE("jacobi cn") {
    for (double m : {0.0, 0.3, 0.9, 1.0}) CHECK(jacobi_cn(0.0, m) == doctest::Approx(1.0).epsilon(1e-15));
    for (double x = -7; x < 7; x += 0.37) {
        CHECK(std::abs(jacobi_cn(x, 0.0) - std::cos(x)) < 1e-13);
        CHECK(std::abs(jacobi_cn(x, 1.0) - 1 / std::cosh(x)) < 1e-12);
    }
    for (double m : {0.1, 0.5, 0.9, 0.99})
        for (double x = -20; x < 20; x += 0.731) CHECK(std::abs(jacobi_cn(x, m) - cn_oracle(x, m)) < 1e-12);
}

TEST_CASE("sn^2 + cn^2 = 1 and periodicity") {
    for (double m : {0.1, 0.5, 0.9, 0.99}) {
        double P = ellip_K_full(m);
        for (int i = 0; i < 1000; ++i) {
            double x = -15 + 30.0 * i / 1000;
            JacobiSCD j = jacobi_sncndn(x, m);
            CHECK(std::abs(j.sn * j.sn + j.cn * j.cn - 1.0) < 1e-12);
            CHECK(std::abs(jacobi_cn(x + P, m) - j.cn) < 1e-10);
        }
    }
}

TEST_CASE("cnoidal parameters and periodicity") {
    auto g = make_grid(1, 256, 2 * pi);
    CnoidalWave w5 = make_cnoidal(0.5, g);
    CHECK(w5.params.c0 == 0.0);
    CnoidalWave w = make_cnoidal(0.9, g);
    CHECK(w.params.l0 == doctest::Approx(ellip_K_full(0.9) / (2 * pi)).epsilon(1e-15));
    CHECK(w.params.amplitude == doctest::Approx(12 * 0.9 * w.params.l0 * w.params.l0).epsilon(1e-15));
    // Mean of the raw wave equals the grid average.
    double mean = 0;
    for (const auto& c : w.raw.values) mean += c.real();
    mean /= w.raw.size();
    CHECK(std::abs(mean - w.params.mean) < 1e-12 * w.params.amplitude);
    double a = w.params.amplitude;
    auto f = [&](double x) { return a * std::pow(jacobi_cn(w.params.l0 * x, 0.9), 2); };
    CHECK(std::abs(f(-pi) - f(pi)) < 1e-10 * a);
    CHECK(std::abs(to_spectral(w.u).values[0]) == 0.0);
    CHECK_THROWS(make_cnoidal(0.9, make_grid(1, 16, 200.0)));
    CHECK_THROWS(make_cnoidal(1.0, g));
}

TEST_CASE("cnoidal KdV residual at N=512") {
    auto g = make_grid(1, 512, 2 * pi);
    CnoidalWave w = make_cnoidal(0.9, g);
    Field u = w.raw;
    Field ux = ddx(u, 1), uxxx = ddx(u, 3);
    Field res = u;
    for (std::size_t i = 0; i < u.size(); ++i)
        res[i] = -w.params.c0 * ux[i] + u[i] * ux[i] + uxxx[i];
    CHECK(l2_norm(res) / l2_norm(u) < 1e-8);
}

TEST_CASE("eigenpair") {
    for (double m : {0.5, 0.9, 0.99}) {
        auto g = make_grid(1, 256, 2 * pi);
        CnoidalWave w = make_cnoidal(m, g);
        EigenPair e = make_eigenpair(w.params, g);
        CHECK(e.lambda == doctest::Approx((2 * m - 1) * w.params.l0 * w.params.l0));
        EigenCheck c = eigencheck(w.raw, e);
        CHECK(c.residual < 1e-8);
        CHECK(std::abs(c.normalization - 1.0) < 1e-10);
        CHECK(std::abs(c.discrete_eigenvalue - e.lambda) < 1e-8);
    }
    // Zero potential: eigenvalues are −k².
    auto g = make_grid(1, 32, 2 * pi);
    Field z = make_field(g);
    CHECK(std::abs(nearest_collocation_eigenvalue(z, -8.7) - (-9.0)) < 1e-12);
    CHECK(std::abs(nearest_collocation_eigenvalue(z, 0.2)) < 1e-12);
}

TEST_CASE("modulation constants") {
    ModulationConstants c = modulation_constants();
    CHECK(std::abs(c.C - 2.0 / 3.0) < 1e-12);
    CHECK(std::abs(c.C1 - 8.0 / 15.0) < 1e-12);
    CHECK(std::abs(c.C2 - 8.0 / 15.0) < 1e-12);
    CHECK(std::abs(c.C3) < 1e-12);
    CHECK(std::abs(c.C4 - 0.2) < 1e-12);
    CHECK(std::abs(c.sech2 - 2.0) < 1e-12);
}

TEST_CASE("modulation ODEs") {
    CHECK(modulation_solution(PerturbedKdvKind::damped, 1.0, 0.01, 30.0) == doctest::Approx(std::exp(-0.2)));
    CHECK(std::abs(modulation_rk4(PerturbedKdvKind::damped, 1.0, 0.01, 30.0) - std::exp(-0.2)) < 1e-12);
    CHECK(std::abs(modulation_rk4(PerturbedKdvKind::viscous, 1.3, 0.02, 50.0) -
                   modulation_solution(PerturbedKdvKind::viscous, 1.3, 0.02, 50.0)) < 1e-10);
    CHECK(viscous_backward_blowup_time(1.0, 0.01) == doctest::Approx(93.75));
    double before = modulation_rk4(PerturbedKdvKind::viscous, 1.0, 0.01, -93.0, 200000);
    CHECK(before > 10.0);
    CHECK(std::isinf(modulation_solution(PerturbedKdvKind::viscous, 1.0, 0.01, -94.0)));
    double big = 1e4;
    CHECK(modulation_rhs(PerturbedKdvKind::viscous_bbm, big, 0.01) / big == doctest::Approx(-0.4).epsilon(1e-6));
}

}
