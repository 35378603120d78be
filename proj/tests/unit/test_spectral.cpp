#include "doctest.h"

#include "backlab/elliptic.hpp"
#include "backlab/spectral.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

using namespace backlab;
using std::numbers::pi;

namespace {

double max_diff(const Field& a, const Field& b) {
    Field x = to_physical(a), y = to_physical(b);
    double m = 0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

// Real trigonometric polynomial with random coefficients on modes 1..kmax.
Field random_band(GridPtr g, int kmax, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Field s(g, ScalarKind::real, Representation::spectral, true);
    for (int j = 1; j <= kmax; ++j) {
        cplx c(nd(rng), nd(rng));
        s.values[j] = c;
        s.values[g->n() - j] = std::conj(c);
    }
    return to_physical(s);
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("make_grid wavenumbers and mask") {
    auto g = make_grid(1, 64, 2 * pi);
    CHECK(g->wavenumber(1) == doctest::Approx(1.0));
    CHECK(g->mode(32) == 32);
    CHECK(g->mode(33) == -31);
    for (int i = 1; i < 32; ++i) CHECK(g->kx()[i] == -g->kx()[64 - i]);
    CHECK(make_grid(1, 64, 4 * pi)->wavenumber(1) == doctest::Approx(0.5));

    auto g2 = make_grid(2, 128, 1.0);
    CHECK(g2->wavenumber(1, 0) == doctest::Approx(2 * pi));
    CHECK(g2->wavenumber(1, 1) == doctest::Approx(2 * pi));
    int kept = 0;
    for (int i = 0; i < 128; ++i) kept += g2->mask()[static_cast<std::size_t>(i) * 128];
    CHECK(kept == 2 * 42 + 1);
    CHECK(g2->mask()[42]);
    CHECK_FALSE(g2->mask()[43]);
}

TEST_CASE("make_grid rejects bad input") {
    CHECK_THROWS_AS(make_grid(1, 63, 1.0), GridError);
    CHECK_THROWS_AS(make_grid(1, 8, 1.0), GridError);
    CHECK_THROWS_AS(make_grid(1, 48, 1.0), GridError);
    CHECK_THROWS_AS(make_grid(1, 64, 0.0), GridError);
    CHECK_THROWS_AS(make_grid(3, 64, 1.0), GridError);
}

TEST_CASE("round trip and Parseval") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ud(-1, 1);
    auto g = make_grid(1, 128, 3.0);
    Field u = make_field(g);
    for (auto& c : u.values) c = ud(rng);
    Field back = to_physical(to_spectral(u));
    double m = 0, s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        m = std::max(m, std::abs(back[i] - u[i]));
        s = std::max(s, std::abs(u[i]));
    }
    CHECK(m / s < 1e-13);
    Field sp = to_spectral(u);
    double a = l2_norm(u), b = std::sqrt(spectral_norm2(*g, sp.values));
    CHECK(std::abs(a - b) / a < 1e-12);

    auto g2 = make_grid(2, 32, 2.0);
    Field w = make_field(g2, ScalarKind::complex);
    for (auto& c : w.values) c = cplx(ud(rng), ud(rng));
    Field w2 = to_physical(to_spectral(w));
    CHECK(max_diff(w, w2) < 1e-13);
    CHECK(std::abs(l2_norm(w) - std::sqrt(spectral_norm2(*g2, to_spectral(w).values))) / l2_norm(w) < 1e-12);
}

TEST_CASE("ddx of trigonometric and constant fields") {
    const double L = 5.0, k = 2 * pi / L;
    auto g = make_grid(1, 64, L);
    Field u = sample_field(g, [&](double x) { return std::sin(k * x); });
    Field d = ddx(u, 1);
    Field ex = sample_field(g, [&](double x) { return k * std::cos(k * x); });
    CHECK(max_diff(d, ex) < 1e-12);
    Field c = sample_field(g, [](double) { return 3.0; });
    CHECK(l2_norm(ddx(c, 1)) < 1e-14);
}

TEST_CASE("ddx commutes and kills the mean") {
    std::mt19937_64 rng(2);
    auto g = make_grid(1, 64, 7.0);
    Field u = random_band(g, 20, rng);
    for (auto& c : u.values) c += 0.7;
    Field a = ddx(ddx(u, 1), 1), b = ddx(u, 2);
    CHECK(max_diff(a, b) < 1e-12 * l2_norm(b));
    CHECK(std::abs(to_spectral(ddx(u, 3)).values[0]) == 0.0);
    Field z = project_zero_mean(u);
    Field zz = project_zero_mean(z);
    CHECK(max_diff(z, zz) < 1e-15);
    CHECK(std::abs(to_spectral(z).values[0]) < 1e-15);
}

TEST_CASE("ddx of cn^2 matches Richardson-extrapolated finite differences") {
    const double m0 = 0.9, L = 2 * pi;
    const double l0 = ellip_K_full(m0) / L;
    auto f = [&](double x) {
        double c = jacobi_cn(l0 * x, m0);
        return c * c;
    };
    auto g = make_grid(1, 256, L);
    Field d2 = ddx(sample_field(g, f), 2);
    const double h = L / 16384.0;
    auto fd = [&](double x, double hh) { return (f(x + hh) - 2 * f(x) + f(x - hh)) / (hh * hh); };
    double err = 0, scale = 0;
    for (int i = 0; i < 256; i += 5) {
        double x = g->x(i);
        double rich = (4 * fd(x, h) - fd(x, 2 * h)) / 3.0;
        err = std::max(err, std::abs(d2[i].real() - rich));
        scale = std::max(scale, std::abs(rich));
    }
    CHECK(err / scale < 1e-8);
}

TEST_CASE("dealias_product") {
    auto g = make_grid(1, 16, 2 * pi);
    Field s = sample_field(g, [](double x) { return std::sin(x); });
    Field p = dealias_product(s, s);
    Field ex = sample_field(g, [](double x) { return 0.5 - 0.5 * std::cos(2 * x); });
    CHECK(max_diff(p, ex) < 1e-14);

    auto g64 = make_grid(1, 64, 2 * pi);
    const int top = 64 / 3;
    Field t = sample_field(g64, [&](double x) { return std::cos(top * x); });
    Field tt = to_spectral(dealias_product(t, t));
    CHECK(std::abs(tt.values[2 * top]) < 1e-15);
    CHECK(std::abs(tt.values[0] - 0.5) < 1e-14);

    // Exact convolution oracle for modes <= N/4.
    std::mt19937_64 rng(3);
    const int N = 64;
    Field u = random_band(g64, N / 4, rng), v = random_band(g64, N / 4, rng);
    for (auto& c : u.values) c += 0.3;
    u.zero_mean_required = false;
    Field us = to_spectral(u), vs = to_spectral(v);
    Field w = to_spectral(dealias_product(u, v));
    double err = 0, scale = 0;
    for (int j = -N / 3; j <= N / 3; ++j) {
        cplx acc = 0;
        for (int a = -N / 4; a <= N / 4; ++a) {
            int b = j - a;
            if (std::abs(b) > N / 4) continue;
            acc += us.values[(a + N) % N] * vs.values[(b + N) % N];
        }
        err = std::max(err, std::abs(acc - w.values[(j + N) % N]));
        scale = std::max(scale, std::abs(acc));
    }
    CHECK(err / scale < 1e-12);
    CHECK_THROWS_AS(dealias_product(u, make_field(make_grid(1, 32, 2 * pi))), GridError);
}

TEST_CASE("inner products and norms") {
    const double L = 3.0;
    auto g = make_grid(1, 64, L);
    Field s = sample_field(g, [&](double x) { return std::sin(2 * pi * x / L); });
    CHECK(l2_norm(s) * l2_norm(s) == doctest::Approx(L / 2).epsilon(1e-14));
    Field c = sample_field(g, [](double) { return 2.0; }, ScalarKind::real, true);
    CHECK(l2_norm(c) < 1e-14);
    const double L2 = 2 * pi;
    auto g2 = make_grid(1, 64, L2);
    Field cn0 = sample_field(g2, [&](double x) { return jacobi_cn(ellip_K_full(0.0) / L2 * x, 0.0); });
    CHECK(l2_norm(cn0) * l2_norm(cn0) == doctest::Approx(L2 / 2).epsilon(1e-13));
    CHECK(semi_h1_norm(s) == doctest::Approx(2 * pi / L * std::sqrt(L / 2)).epsilon(1e-13));
    CHECK(h1_norm(s) == doctest::Approx(std::sqrt(L / 2 + std::pow(2 * pi / L, 2) * L / 2)).epsilon(1e-13));
    CHECK(std::abs(inner_product(s, s) - inner_product(to_spectral(s), to_spectral(s))) < 1e-13);
}

TEST_CASE("checkpoint round trip") {
    std::mt19937_64 rng(4);
    auto g = make_grid(1, 32, 1.5);
    Field u = random_band(g, 8, rng);
    std::string p1 = "ckpt_test_1d.bflb";
    write_checkpoint(p1, u);
    Field r = read_checkpoint(p1);
    CHECK(r.grid->same_as(*g));
    CHECK(r.kind == ScalarKind::real);
    CHECK(max_diff(r, u) == 0.0);
    {
        std::FILE* f = std::fopen(p1.c_str(), "rb");
        std::fseek(f, 0, SEEK_END);
        CHECK(std::ftell(f) == 32 + 32 * 8);
        std::fclose(f);
    }
    Field sp = to_spectral(u);
    write_checkpoint(p1, sp);
    Field rs = read_checkpoint(p1);
    CHECK(rs.rep == Representation::spectral);
    CHECK(max_diff(rs, sp) == 0.0);

    auto g2 = make_grid_2d(16, 32, 1.0, 2.0);
    Field w = make_field(g2, ScalarKind::complex);
    for (std::size_t i = 0; i < w.size(); ++i) w.values[i] = cplx(double(i), -double(i));
    std::string p2 = "ckpt_test_2d.bflb";
    write_checkpoint(p2, w);
    Field rw = read_checkpoint(p2);
    CHECK(rw.grid->same_as(*g2));
    CHECK(max_diff(rw, w) == 0.0);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
    CHECK_THROWS(read_checkpoint("does_not_exist.bflb"));
}

}
