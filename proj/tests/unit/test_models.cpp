#include "doctest.h"

#include "backlab/elliptic.hpp"
#include "backlab/models.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace backlab;
using std::numbers::pi;

namespace {

Field random_real(GridPtr g, int kmax, std::uint64_t seed, double amp = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Field s(g, ScalarKind::real, Representation::spectral, true);
    for (int j = 1; j <= kmax; ++j) {
        cplx c(nd(rng), nd(rng));
        s.values[j] = amp * c;
        s.values[g->n() - j] = amp * std::conj(c);
    }
    return to_physical(s);
}

Field random_complex(GridPtr g, int kmax, std::uint64_t seed, double amp = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Field s(g, ScalarKind::complex, Representation::spectral, false);
    for (int j = -kmax; j <= kmax; ++j) s.values[(j + g->n()) % g->n()] = amp * cplx(nd(rng), nd(rng));
    return to_physical(s);
}

double rel_diff(const Field& a, const Field& b) {
    Field d = to_physical(a), e = to_physical(b);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= e[i];
    return l2_norm(d) / std::max(l2_norm(e), 1e-300);
}

Field shell_vorticity(GridPtr g, int shell, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const double L = g->length();
    Field w = make_field(g);
    for (int a = -8; a <= 8; ++a)
        for (int b = -8; b <= 8; ++b) {
            if (a * a + b * b != shell) continue;
            if (a < 0 || (a == 0 && b < 0)) continue;
            double ca = nd(rng), cb = nd(rng);
            for (int i = 0; i < g->n(0); ++i)
                for (int j = 0; j < g->n(1); ++j) {
                    double ph = 2 * pi * (a * g->x(i, 0) + b * g->x(j, 1)) / L;
                    w.values[static_cast<std::size_t>(i) * g->n(1) + j] += ca * std::cos(ph) + cb * std::sin(ph);
                }
        }
    w.zero_mean_required = true;
    return w;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("kbs tendency basic cases") {
    const double L = 4.0, k = 2 * pi / L;
    auto g = make_grid(1, 64, L);
    KbsParams p;
    Field z = make_field(g, ScalarKind::real, true);
    CHECK(l2_norm(kbs_tendency(z, p)) == 0.0);

    p.nu = 1.0;
    Field s = sample_field(g, [&](double x) { return std::sin(k * x); }, ScalarKind::real, true);
    Field ex = sample_field(g, [&](double x) { return -k * k * std::sin(k * x) - 0.5 * k * std::sin(2 * k * x); });
    CHECK(rel_diff(kbs_tendency(s, p), ex) < 1e-13);

    Field nz = sample_field(g, [&](double x) { return 1.0 + std::sin(k * x); });
    CHECK_THROWS_AS(kbs_tendency(nz, p), ModelError);
}

TEST_CASE("kbs backward tendency is the negation") {
    auto g = make_grid(1, 64, 10.0);
    Field u = random_real(g, 12, 7);
    KbsParams p;
    p.nu = 0.3;
    p.beta = 0.2;
    p.gamma = 1.1;
    p.forcing = random_real(g, 5, 8, 0.5);
    Field a = kbs_tendency(u, p);
    p.direction = Direction::backward;
    Field b = kbs_tendency(u, p);
    for (auto& c : b.values) c = -c;
    CHECK(rel_diff(b, a) < 1e-15);
}

TEST_CASE("cnoidal wave is a travelling wave of the KdV tendency") {
    auto g = make_grid(1, 512, 2 * pi);
    CnoidalWave w = make_cnoidal(0.9, g);
    KbsParams p;
    p.gamma = 1.0;
    Field t = kbs_tendency(w.u, p);
    Field ux = ddx(w.u, 1);
    for (auto& c : ux.values) c *= -w.params.shift_speed;
    CHECK(rel_diff(t, ux) < 1e-8);
}

TEST_CASE("kbs energy law and KdV conservation") {
    auto g = make_grid(1, 128, 12.0);
    Field u = random_real(g, 30, 9);
    KbsParams p;
    p.gamma = 1.0;
    double scale = std::pow(l2_norm(u), 3);
    CHECK(std::abs(inner_product(kbs_tendency(u, p), u).real()) < 1e-10 * scale);

    p.nu = 0.7;
    p.beta = 0.4;
    p.forcing = random_real(g, 6, 10, 0.3);
    double lhs = inner_product(kbs_tendency(u, p), u).real();
    double ux = semi_h1_norm(u), n = l2_norm(u);
    double rhs = -p.nu * ux * ux + p.beta * n * n + inner_product(*p.forcing, u).real();
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(rhs));
}

TEST_CASE("nls tendency") {
    const double L = 2 * pi;
    auto g = make_grid(1, 64, L);
    NlsParams p;
    p.lambda = 0.1;
    Field z = make_field(g, ScalarKind::complex);
    CHECK(l2_norm(nls_tendency(z, p)) == 0.0);

    const cplx A(0.7, -0.3);
    const int kk = 3;
    Field pw = sample_field(g, [&](double x) { return A * std::exp(cplx(0, kk * x)); }, ScalarKind::complex);
    Field ex = pw;
    for (auto& c : ex.values) c *= cplx(-p.lambda, std::norm(A) - kk * kk);
    CHECK(rel_diff(nls_tendency(pw, p), ex) < 1e-13);

    Field c = sample_field(g, [](double) { return 0.8; }, ScalarKind::complex);
    Field cex = sample_field(g, [&](double) { return cplx(-p.lambda * 0.8, std::pow(0.8, 3)); }, ScalarKind::complex);
    CHECK(rel_diff(nls_tendency(c, p), cex) < 1e-14);

    // Mass law: Re(u_t, u) = -λ|u|² + Im∫ f ū.
    Field u = random_complex(g, 10, 11, 0.5);
    p.forcing = random_complex(g, 4, 12, 0.2);
    double lhs = inner_product(nls_tendency(u, p), u).real();
    double n = l2_norm(u);
    double rhs = -p.lambda * n * n + inner_product(*p.forcing, u).imag();
    CHECK(std::abs(lhs - rhs) < 1e-10 * n * n);
}

TEST_CASE("cgl tendency") {
    auto g = make_grid(1, 64, 2 * pi);
    CglParams p;
    p.a = 1.0;
    p.delta = 0.0;
    p.alpha_cgl = p.beta_cgl = p.b = 0.0;
    Field e = sample_field(g, [](double x) { return std::exp(cplx(0, x)); }, ScalarKind::complex);
    Field me = e;
    for (auto& c : me.values) c = -c;
    CHECK(rel_diff(cgl_tendency(e, p), me) < 1e-12);
    CHECK(l2_norm(cgl_tendency(make_field(g, ScalarKind::complex), p)) == 0.0);

    CglParams q;
    q.delta = 1.3;
    q.alpha_cgl = 0.9;
    const double y = 2.0, u0 = std::sqrt(y);
    Field uni = sample_field(g, [&](double) { return u0; }, ScalarKind::complex);
    Field ex = sample_field(g, [&](double) { return q.delta * u0 - q.alpha_cgl * u0 * u0 * u0; }, ScalarKind::complex);
    CHECK(rel_diff(cgl_tendency(uni, q), ex) < 1e-14);

    CglParams r{0.6, 0.4, 0.8, 1.2, -0.5};
    Field u = random_complex(g, 10, 13, 0.4);
    double lhs = inner_product(cgl_tendency(u, r), u).real();
    double ux = semi_h1_norm(u), n = l2_norm(u);
    // The cubic term is dealiased, so compare against the masked |u|⁴ integral.
    double rhs = -r.a * ux * ux + r.delta * n * n - r.alpha_cgl * lp_norm_p(u, 4);
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(rhs));
}

TEST_CASE("hyperviscous NSE tendency") {
    const double L = 2 * pi, nu = 0.7;
    auto g = make_grid(2, 32, L);
    HyperNsParams p;
    p.nu = nu;
    Field w = shell_vorticity(g, 5, 21);
    Field t = hyperns_tendency(w, p);
    Field lin = to_spectral(w);
    for (std::size_t i = 0; i < lin.size(); ++i) lin.values[i] *= -nu * g->k2()[i] * g->k2()[i];
    CHECK(rel_diff(t, lin) < 1e-12);
    Field psi = streamfunction(w);
    CHECK(l2_norm(jacobian(psi, w)) < 1e-12 * l2_norm(w));

    CHECK(l2_norm(hyperns_tendency(make_field(g, ScalarKind::real, true), p)) == 0.0);

    // Two shells against a direct convolution of the Jacobian.
    Field w2 = to_physical(to_spectral(shell_vorticity(g, 1, 22)));
    for (std::size_t i = 0; i < w2.size(); ++i) w2.values[i] += w.values[i];
    Field ws = to_spectral(w2);
    const int N = 32;
    std::vector<std::pair<std::size_t, cplx>> nz;
    for (std::size_t i = 0; i < ws.size(); ++i)
        if (std::abs(ws.values[i]) > 1e-12) nz.push_back({i, ws.values[i]});
    cvec oracle(ws.size(), 0.0);
    for (auto [i, wi] : nz)
        for (auto [j, wj] : nz) {
            double k2i = g->k2()[i];
            cplx psi_i = -wi / k2i;
            // J(ψ, ω) = ψ_x ω_y − ψ_y ω_x for the mode pair (i, j).
            cplx term = (cplx(0, g->kx()[i]) * psi_i) * (cplx(0, g->ky()[j]) * wj) -
                        (cplx(0, g->ky()[i]) * psi_i) * (cplx(0, g->kx()[j]) * wj);
            int mx = (g->mode(static_cast<int>(i / N)) + g->mode(static_cast<int>(j / N)) + N) % N;
            int my = (g->mode(static_cast<int>(i % N), 1) + g->mode(static_cast<int>(j % N), 1) + N) % N;
            oracle[static_cast<std::size_t>(mx) * N + my] += term;
        }
    Field tt = to_spectral(hyperns_tendency(w2, p));
    double err = 0, scale = 0;
    for (std::size_t i = 0; i < tt.size(); ++i) {
        cplx expected = -nu * g->k2()[i] * g->k2()[i] * ws.values[i] - oracle[i];
        err = std::max(err, std::abs(tt.values[i] - expected));
        scale = std::max(scale, std::abs(expected));
    }
    CHECK(err < 1e-10 * scale);

    // (J, ω) = 0 and d/dt|u|² = −2ν|Au|².
    Field rnd = random_real(make_grid(1, 16, 1.0), 1, 0);
    (void)rnd;
    Field jw = jacobian(streamfunction(w2), w2);
    CHECK(std::abs(inner_product(jw, w2).real()) < 1e-10 * l2_norm(jw) * l2_norm(w2));
    Field ts = to_spectral(hyperns_tendency(w2, p));
    double de = 0;
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (g->k2()[i] > 0) de += 2 * (ts.values[i] * std::conj(ws.values[i])).real() / g->k2()[i];
    de *= L * L;
    CHECK(std::abs(de + 2 * nu * hyperns_au2(w2)) < 1e-10 * hyperns_au2(w2));
    CHECK_THROWS_AS(hyperns_tendency(sample_field(g, [](double, double) { return 1.0; }), p), ModelError);
}

TEST_CASE("bbm tendency") {
    auto g = make_grid(1, 128, 20.0);
    CHECK(l2_norm(bbm_tendency(make_field(g, ScalarKind::real, true), 0.1)) == 0.0);
    Field u = random_real(g, 25, 30, 0.3);
    KbsParams kdv;
    kdv.gamma = 1.0;
    CHECK(rel_diff(bbm_tendency(u, 0.0), kbs_tendency(u, kdv)) < 1e-14);
    const double eps = 0.05;
    Field ut = bbm_tendency(u, eps);
    double lhs = inner_product(ut, u).real() + eps * inner_product(ddx(ut, 1), ddx(u, 1)).real();
    double ux = semi_h1_norm(u);
    CHECK(std::abs(lhs + eps * ux * ux) < 1e-10 * eps * ux * ux);
}

TEST_CASE("perturbed KdV factory") {
    auto g = make_grid(1, 64, 10.0);
    auto d = make_perturbed_kdv(g, {PerturbedKdvKind::damped, 0.01});
    CHECK(d->name() == "kbs");
    CHECK(d->symbol()[1].real() == doctest::Approx(-0.01));
    auto v = make_perturbed_kdv(g, {PerturbedKdvKind::viscous, 0.02});
    CHECK(v->symbol()[1].real() == doctest::Approx(-0.02 * std::pow(2 * pi / 10.0, 2)));
    auto b = make_perturbed_kdv(g, {PerturbedKdvKind::viscous_bbm, 0.01}, Direction::backward);
    CHECK(b->name() == "bbm");
    CHECK(b->symbol()[1].real() > 0.0);
    CHECK_THROWS_AS(make_perturbed_kdv(g, {PerturbedKdvKind::viscous, 0.0}), ModelError);
}

}
