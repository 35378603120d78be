#include "doctest.h"

#include "backlab/integrator.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace backlab;
using std::numbers::pi;

namespace {

class LinearModel final : public Model {
public:
    LinearModel(GridPtr g, double c) : Model(std::move(g), ScalarKind::complex, false, Direction::forward) {
        cvec s(grid_->size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = -c * grid_->k2()[i];
        set_forward_symbol(s);
    }
    std::string name() const override { return "linear"; }

protected:
    void forward_nonlinear(const cvec&, cvec&) const override {}
};

Field smooth_data(GridPtr g) {
    const double L = g->length();
    return sample_field(g, [&](double x) {
        return std::sin(2 * pi * x / L) + 0.5 * std::cos(4 * pi * x / L + 0.3) + 0.2 * std::sin(6 * pi * x / L);
    }, ScalarKind::real, true);
}

double diff_norm(const Field& a, const Field& b) {
    Field x = to_spectral(a), y = to_spectral(b);
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::norm(x[i] - y[i]);
    return std::sqrt(s);
}

Field run_fixed(const Model& m, const Field& u0, double dt, double T, Scheme scheme = Scheme::etdrk4) {
    IntegratorConfig c;
    c.scheme = scheme;
    c.dt0 = dt;
    c.t_end = T;
    c.record_every = 1000000;
    return integrate(u0, m, c).final_state;
}

}  // namespace

TEST_SUITE("integrator") {

TEST_CASE("ETDRK4 is exact on linear problems") {
    auto g = make_grid(1, 32, 2 * pi);
    LinearModel m(g, 1.0);
    Field u = sample_field(g, [](double x) { return std::exp(cplx(0, x)); }, ScalarKind::complex);
    IntegratorConfig c;
    Field v = to_physical(step(u, m, c, 0.1));
    double err = 0;
    for (std::size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(v[i] - std::exp(-0.1) * u[i]));
    CHECK(err < 1e-12);
}

TEST_CASE("heat decay at small amplitude") {
    const double L = 3.0, k = 2 * pi / L;
    auto g = make_grid(1, 32, L);
    KbsParams p;
    p.nu = 1.0;
    KbsModel m(g, p);
    Field u0 = sample_field(g, [&](double x) { return 1e-6 * std::sin(k * x); }, ScalarKind::real, true);
    IntegratorConfig c;
    c.dt0 = 1e-3;
    c.t_end = 0.5;
    c.record_every = 50;
    RunRecord r = integrate(u0, m, c);
    CHECK(r.verdict == Verdict::completed);
    for (const auto& s : r.samples) CHECK(std::abs(s.norm / r.samples[0].norm - std::exp(-k * k * s.t)) < 1e-8);
}

TEST_CASE("ETDRK4 observed order on a smooth KBS run") {
    auto g = make_grid(1, 64, 8 * pi);
    KbsParams p;
    p.nu = 1.0;
    p.beta = 0.1;
    p.gamma = 1.0;
    KbsModel m(g, p);
    Field u0 = smooth_data(g);
    const double T = 2.0;
    Field ref = run_fixed(m, u0, T / 1600, T);
    double e1 = diff_norm(run_fixed(m, u0, T / 25, T), ref);
    double e2 = diff_norm(run_fixed(m, u0, T / 50, T), ref);
    double e3 = diff_norm(run_fixed(m, u0, T / 100, T), ref);
    MESSAGE("orders ", std::log2(e1 / e2), " ", std::log2(e2 / e3));
    CHECK(std::log2(e1 / e2) >= 3.8);
    CHECK(std::log2(e2 / e3) >= 3.8);
}

TEST_CASE("CNAB2 converges at second order") {
    auto g = make_grid(1, 32, 8 * pi);
    KbsParams p;
    p.nu = 1.0;
    KbsModel m(g, p);
    Field u0 = smooth_data(g);
    const double T = 1.0;
    Field ref = run_fixed(m, u0, T / 2000, T, Scheme::etdrk4);
    double e1 = diff_norm(run_fixed(m, u0, T / 100, T, Scheme::imex_cnab2), ref);
    double e2 = diff_norm(run_fixed(m, u0, T / 200, T, Scheme::imex_cnab2), ref);
    CHECK(std::log2(e1 / e2) > 1.8);
}

TEST_CASE("fit_growth") {
    std::vector<double> t, v, w;
    for (int i = 0; i < 50; ++i) {
        t.push_back(0.1 * i);
        v.push_back(std::exp(2.0 * t.back()));
        w.push_back(std::exp(2.0 * 0.01 * t.back()));
    }
    GrowthFit f = fit_growth(t, v);
    CHECK(std::abs(f.p - 2.0) < 1e-10);
    CHECK(f.convexity == 0);
    CHECK(std::abs(fit_growth(t, w).p - 0.02) < 1e-12);
    std::vector<double> sup;
    for (double x : t) sup.push_back(std::exp(x * x));
    CHECK(fit_growth(t, sup).convexity == 1);
    CHECK_THROWS(fit_growth({1, 2, 3}, {1, 2, 3}));
    std::vector<double> bad = v;
    bad[3] = -1;
    CHECK_THROWS(fit_growth(t, bad));
}

TEST_CASE("extrapolate_blowup recovers a power law") {
    std::vector<double> t, n;
    for (int i = 0; i < 40; ++i) {
        t.push_back(0.02 * i);
        n.push_back(std::pow(1.0 - t.back(), -0.5));
    }
    BlowupFit f = extrapolate_blowup(t, n);
    CHECK(f.t_star == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(f.exponent == doctest::Approx(2.0));
}

TEST_CASE("backward CGL blows up") {
    const double L = 2 * pi;
    auto g = make_grid(1, 32, L);
    CglParams p;
    p.direction = Direction::backward;
    CglModel m(g, p);
    Field u0 = sample_field(g, [&](double x) { return std::sqrt(2.0) * (1.0 + 1e-3 * std::cos(x)); }, ScalarKind::complex);
    IntegratorConfig c;
    c.adapt = true;
    c.dt0 = 1e-3;
    c.tol_loc = 1e-9;
    c.dt_min = 1e-16;
    c.t_end = 2.0;
    c.cap_norm = 1e3 * l2_norm(u0);
    RunRecord r = integrate(u0, m, c);
    CHECK(r.verdict == Verdict::blowup);
    CHECK(r.t_star_estimate <= std::log(2.0) / 2 * 1.01);
    CHECK(r.t_star_estimate >= r.t_star_lower);

    IntegratorConfig c2 = c;
    c2.cap_norm = 1e4 * l2_norm(u0);
    RunRecord r2 = integrate(u0, m, c2);
    CHECK(r2.verdict == Verdict::blowup);
    CHECK(r2.t_star_lower >= r.t_star_lower);
}

TEST_CASE("integration is deterministic") {
    auto g = make_grid(1, 64, 10.0);
    KbsParams p;
    p.nu = 0.5;
    p.beta = 0.3;
    p.gamma = 1.0;
    KbsModel m(g, p);
    IntegratorConfig c;
    c.adapt = true;
    c.dt0 = 0.01;
    c.t_end = 1.0;
    RunRecord a = integrate(smooth_data(g), m, c), b = integrate(smooth_data(g), m, c);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].t == b.samples[i].t);
        CHECK(a.samples[i].norm == b.samples[i].norm);
    }
}

TEST_CASE("config validation") {
    IntegratorConfig c;
    c.tol_loc = 0.5;
    CHECK_THROWS(c.validate());
    c = IntegratorConfig{};
    c.dt_min = 0;
    CHECK_THROWS(c.validate());
    CHECK(scheme_from_string("imex_cnab2") == Scheme::imex_cnab2);
    CHECK_THROWS(scheme_from_string("rk4"));
}

}
