#include "backlab/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace backlab {

namespace {

constexpr int kContourPoints = 32;

double vec_norm(const SpectralGrid& g, const cvec& v) { return std::sqrt(spectral_norm2(g, v)); }

void finish_state(const Model& m, cvec& v) {
    const auto& mask = m.grid().mask();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!mask[i]) v[i] = 0.0;
    if (m.zero_mean()) v[0] = 0.0;
    if (m.kind() == ScalarKind::real) enforce_real(m.grid(), v);
}

// Snap adaptive steps onto a 2^(1/8) ladder so coefficient sets are reused.
double quantize(double dt) { return std::exp2(std::floor(8.0 * std::log2(dt)) / 8.0); }

}  // namespace

void IntegratorConfig::validate() const {
    if (!(dt0 > 0.0)) throw std::invalid_argument("dt0 must be positive");
    if (!(dt_min > 0.0)) throw std::invalid_argument("dt_min must be positive");
    if (cap_norm < 0.0) throw std::invalid_argument("cap_norm must be positive");
    if (!(tol_loc > 1e-14 && tol_loc < 1e-2)) throw std::invalid_argument("tol_loc out of range");
    if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
    if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
    if (!(filter_level >= 0.0 && filter_level < 1.0)) throw std::invalid_argument("filter_level must be in [0, 1)");
}

std::string to_string(Scheme s) { return s == Scheme::etdrk4 ? "etdrk4" : "imex_cnab2"; }

Scheme scheme_from_string(const std::string& s) {
    if (s == "etdrk4") return Scheme::etdrk4;
    if (s == "imex_cnab2") return Scheme::imex_cnab2;
    throw std::invalid_argument("unknown scheme: " + s);
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::completed: return "completed";
        case Verdict::blowup: return "blowup";
        default: return "resolution_exhausted";
    }
}

const Stepper::Coeffs& Stepper::coeffs(double dt) {
    auto it = cache_.find(dt);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > 24) cache_.clear();
    const cvec& sigma = model_.symbol();
    const std::size_t n = sigma.size();
    Coeffs c;
    c.e.resize(n);
    c.e2.resize(n);
    c.q.resize(n);
    c.f1.resize(n);
    c.f2.resize(n);
    c.f3.resize(n);
    cplx roots[kContourPoints];
    for (int j = 0; j < kContourPoints; ++j)
        roots[j] = std::exp(cplx(0.0, 2.0 * std::numbers::pi * (j + 0.5) / kContourPoints));
    std::map<std::pair<double, double>, std::size_t> seen;
    for (std::size_t i = 0; i < n; ++i) {
        cplx z = sigma[i] * dt;
        auto key = std::make_pair(z.real(), z.imag());
        if (auto s = seen.find(key); s != seen.end()) {
            std::size_t k = s->second;
            c.e[i] = c.e[k];
            c.e2[i] = c.e2[k];
            c.q[i] = c.q[k];
            c.f1[i] = c.f1[k];
            c.f2[i] = c.f2[k];
            c.f3[i] = c.f3[k];
            continue;
        }
        seen.emplace(key, i);
        c.e[i] = std::exp(z);
        c.e2[i] = std::exp(0.5 * z);
        cplx q = 0.0, f1 = 0.0, f2 = 0.0, f3 = 0.0;
        for (int j = 0; j < kContourPoints; ++j) {
            cplx r = z + roots[j];
            cplx er = std::exp(r), r3 = r * r * r;
            q += (std::exp(0.5 * r) - 1.0) / r;
            f1 += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
            f2 += (2.0 + r + er * (r - 2.0)) / r3;
            f3 += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
        }
        const double w = dt / kContourPoints;
        c.q[i] = q * w;
        c.f1[i] = f1 * w;
        c.f2[i] = f2 * w;
        c.f3[i] = f3 * w;
    }
    return cache_.emplace(dt, std::move(c)).first->second;
}

void Stepper::etdrk4(cvec& v, double dt) {
    const Coeffs& c = coeffs(dt);
    const std::size_t n = v.size();
    cvec nv, na, nb, nc, a(n), b(n), cc(n);
    model_.nonlinear(v, nv);
    for (std::size_t i = 0; i < n; ++i) a[i] = c.e2[i] * v[i] + c.q[i] * nv[i];
    model_.nonlinear(a, na);
    for (std::size_t i = 0; i < n; ++i) b[i] = c.e2[i] * v[i] + c.q[i] * na[i];
    model_.nonlinear(b, nb);
    for (std::size_t i = 0; i < n; ++i) cc[i] = c.e2[i] * a[i] + c.q[i] * (2.0 * nb[i] - nv[i]);
    model_.nonlinear(cc, nc);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = c.e[i] * v[i] + c.f1[i] * nv[i] + 2.0 * c.f2[i] * (na[i] + nb[i]) + c.f3[i] * nc[i];
}

void Stepper::cnab2(cvec& v, double dt) {
    const cvec& sigma = model_.symbol();
    cvec nv;
    model_.nonlinear(v, nv);
    if (!have_prev_ || prev_dt_ != dt) prev_n_ = nv;
    for (std::size_t i = 0; i < v.size(); ++i) {
        cplx h = 0.5 * dt * sigma[i];
        v[i] = ((1.0 + h) * v[i] + dt * (1.5 * nv[i] - 0.5 * prev_n_[i])) / (1.0 - h);
    }
    prev_n_ = std::move(nv);
    prev_dt_ = dt;
    have_prev_ = true;
}

void Stepper::step(cvec& v, double dt) {
    if (scheme_ == Scheme::etdrk4)
        etdrk4(v, dt);
    else
        cnab2(v, dt);
    finish_state(model_, v);
}

Field step(const Field& state, const Model& model, const IntegratorConfig& cfg, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    Stepper s(model, cfg.scheme);
    cvec v = model.prepare(state);
    s.step(v, dt);
    Field out = model.make_state(v);
    return state.rep == Representation::physical ? to_physical(out) : out;
}

void krasny_filter(cvec& v, double level) {
    if (level <= 0.0) return;
    double top = 0.0;
    for (const auto& c : v) top = std::max(top, std::abs(c));
    const double cut = level * top;
    for (auto& c : v)
        if (std::abs(c) < cut) c = 0.0;
}

double tail_fraction(const SpectralGrid& g, const cvec& v) {
    double top = 0.0, all = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double e = std::norm(v[i]);
        all += e;
        if (g.top_octave(i)) top += e;
    }
    return all > 0.0 ? top / all : 0.0;
}

GrowthFit fit_growth(const std::vector<double>& t, const std::vector<double>& values) {
    if (t.size() != values.size()) throw std::invalid_argument("fit_growth: size mismatch");
    if (t.size() < 20) throw std::invalid_argument("fit_growth: need at least 20 samples");
    for (double v : values)
        if (!(v > 0.0)) throw std::invalid_argument("fit_growth: values must be positive");
    const std::size_t n = t.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::log(values[i]);

    GrowthFit g;
    g.t_a = t.front();
    g.t_b = t.back();
    double mt = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mt += t[i];
        my += y[i];
    }
    mt /= n;
    my /= n;
    double stt = 0, sty = 0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (t[i] - mt) * (t[i] - mt);
        sty += (t[i] - mt) * (y[i] - my);
    }
    g.p = sty / stt;
    g.intercept = my - g.p * mt;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - g.intercept - g.p * t[i];
        ss += r * r;
    }
    g.residual = std::sqrt(ss / n);

    // Second divided differences; values within roundoff count as flat.
    double yscale = 0;
    for (double v : y) yscale = std::max(yscale, std::abs(v));
    int pos = 0, neg = 0, total = 0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double h1 = t[i] - t[i - 1], h2 = t[i + 1] - t[i];
        double d = ((y[i + 1] - y[i]) / h2 - (y[i] - y[i - 1]) / h1) * 2.0 / (h1 + h2);
        double tol = 1e-9 * (1.0 + yscale) / (h1 * h2);
        ++total;
        if (d > tol)
            ++pos;
        else if (d < -tol)
            ++neg;
    }
    g.convex_fraction = total ? static_cast<double>(pos) / total : 0.0;
    if (2 * pos > total)
        g.convexity = 1;
    else if (2 * neg > total)
        g.convexity = -1;

    // Quadratic least squares in normalized time.
    double span = std::max(g.t_b - g.t_a, 1e-300);
    double s[5] = {0, 0, 0, 0, 0}, r[3] = {0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        double x = (t[i] - g.t_a) / span, xp = 1.0;
        for (int k = 0; k < 5; ++k) {
            s[k] += xp;
            if (k < 3) r[k] += xp * y[i];
            xp *= x;
        }
    }
    // Solve the 3x3 normal equations by Cramer's rule.
    auto det3 = [](double a, double b, double c, double d, double e, double f, double g2, double h, double i) {
        return a * (e * i - f * h) - b * (d * i - f * g2) + c * (d * h - e * g2);
    };
    double det = det3(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
    if (std::abs(det) > 0) {
        double c2 = det3(s[0], s[1], r[0], s[1], s[2], r[1], s[2], s[3], r[2]) / det;
        g.curvature = 2.0 * c2 / (span * span);
    }
    return g;
}

BlowupFit extrapolate_blowup(const std::vector<double>& t, const std::vector<double>& norms) {
    BlowupFit best;
    const std::size_t n = t.size();
    if (n < 3) return best;
    best.window = n;
    best.r2 = -std::numeric_limits<double>::infinity();
    for (int e = -24; e <= 16; ++e) {
        double p = std::exp2(e / 8.0);
        double mt = 0, my = 0;
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = std::pow(norms[i] / norms.back(), -p);
            mt += t[i];
            my += y[i];
        }
        mt /= n;
        my /= n;
        double stt = 0, sty = 0, syy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            stt += (t[i] - mt) * (t[i] - mt);
            sty += (t[i] - mt) * (y[i] - my);
            syy += (y[i] - my) * (y[i] - my);
        }
        if (stt <= 0 || syy <= 0) continue;
        double slope = sty / stt;
        if (!(slope < 0)) continue;
        double r2 = sty * sty / (stt * syy);
        if (r2 > best.r2) {
            best.r2 = r2;
            best.exponent = p;
            best.t_star = mt - my / slope;
        }
    }
    if (!std::isfinite(best.r2)) best.r2 = 0.0;
    return best;
}

std::vector<double> RunRecord::times() const {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.t);
    return v;
}

std::vector<double> RunRecord::norms() const {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.norm);
    return v;
}

std::vector<double> RunRecord::column(const std::string& name) const {
    auto it = std::find(extra_names.begin(), extra_names.end(), name);
    if (it == extra_names.end()) throw std::out_of_range("no column " + name);
    std::size_t k = static_cast<std::size_t>(it - extra_names.begin());
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.extra.at(k));
    return v;
}

namespace {

void analyse_blowup(RunRecord& rec, double cap) {
    const auto& s = rec.samples;
    rec.t_star_lower = rec.final_time;
    for (const auto& x : s)
        if (x.norm <= cap) rec.t_star_lower = x.t;

    // Final decade of growth: the samples below the cap whose norm lies within a
    // factor 10 of the last one, extended to at least five samples.
    std::size_t end = s.size();
    while (end > 0 && !(std::isfinite(s[end - 1].norm) && s[end - 1].norm <= cap)) --end;
    std::size_t begin = end;
    if (end > 0) {
        double top = s[end - 1].norm;
        while (begin > 0 && s[begin - 1].norm >= top / 10.0 && s[begin - 1].norm <= s[begin].norm * (1 + 1e-12))
            --begin;
        if (end - begin < 5) begin = end >= 5 ? end - 5 : 0;
    }
    std::vector<double> tt, nn;
    for (std::size_t i = begin; i < end; ++i)
        if (s[i].norm > 0) {
            tt.push_back(s[i].t);
            nn.push_back(s[i].norm);
        }
    BlowupFit fit = extrapolate_blowup(tt, nn);
    rec.t_star_exponent = fit.exponent;
    rec.t_star_estimate = fit.t_star;
    if (std::isfinite(fit.t_star) && !tt.empty()) rec.t_star_estimate = std::max({fit.t_star, tt.back(), rec.t_star_lower});

    // Convexity of log|u| over the same decade, widened to at least 20 samples.
    std::size_t cend = end, cbeg = begin;
    if (cend - cbeg < 20) cbeg = cend >= 20 ? cend - 20 : 0;
    std::vector<double> ct, cn;
    for (std::size_t i = cbeg; i < cend; ++i) {
        ct.push_back(s[i].t);
        cn.push_back(s[i].norm);
    }
    if (ct.size() >= 20) {
        GrowthFit g = fit_growth(ct, cn);
        rec.log_convex = g.convexity > 0 || (g.curvature > 0 && g.p > 0);
    }
}

}  // namespace

RunRecord integrate(const Field& u0, const Model& model, const IntegratorConfig& cfg, const Observer& observer,
                    const std::vector<std::string>& extra_names) {
    cfg.validate();
    RunRecord rec;
    rec.config = cfg;
    rec.model_name = model.name();
    rec.extra_names = extra_names;

    const SpectralGrid& g = model.grid();
    cvec v = model.prepare(u0);
    krasny_filter(v, cfg.filter_level);
    const double n0 = vec_norm(g, v);
    const double cap = cfg.cap_norm > 0 ? cfg.cap_norm : 1e6 * std::max(n0, 1e-300);
    rec.config.cap_norm = cap;

    auto record = [&](double t, double dt) {
        Sample s;
        s.t = t;
        s.dt = dt;
        s.norm = vec_norm(g, v);
        double semi = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) semi += g.k2()[i] * std::norm(v[i]);
        semi *= g.length(0) * (g.dim() == 2 ? g.length(1) : 1.0);
        s.h1 = std::sqrt(s.norm * s.norm + semi);
        s.tail = tail_fraction(g, v);
        if (observer) observer(t, model.make_state(v), s.extra);
        rec.samples.push_back(std::move(s));
    };

    Stepper stepper(model, cfg.scheme);
    double t = 0.0;
    double dt = cfg.adapt ? quantize(cfg.dt0) : cfg.dt0;
    record(0.0, dt);
    const double eps_t = 1e-12 * std::max(1.0, cfg.t_end);
    bool capped = false;
    std::size_t since_record = 0;
    double last_norm = n0;

    while (t < cfg.t_end - eps_t) {
        double h = std::min({dt, cfg.dt_max, cfg.t_end - t});
        cvec next;
        if (cfg.adapt && cfg.scheme == Scheme::etdrk4) {
            cvec full = v, half = v;
            stepper.step(full, h);
            stepper.step(half, 0.5 * h);
            stepper.step(half, 0.5 * h);
            double diff = 0.0, ref = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                diff += std::norm(full[i] - half[i]);
                ref += std::norm(half[i]);
            }
            double err = std::isfinite(diff) ? std::sqrt(diff / std::max(ref, 1e-300)) : 1e300;
            double fac = err > 0 ? 0.9 * std::pow(cfg.tol_loc / err, 0.2) : 2.0;
            fac = std::clamp(fac, 0.2, 2.0);
            if (err > cfg.tol_loc && h > cfg.dt_min * (1 + 1e-12)) {
                ++rec.rejected;
                dt = std::max(quantize(h * fac), cfg.dt_min);
                continue;
            }
            if (err > cfg.tol_loc) {
                // Rejected at the floor: dt has collapsed.
                double nn = std::sqrt(spectral_norm2(g, half));
                if (nn > last_norm || !std::isfinite(nn)) {
                    rec.dt_collapsed = true;
                    break;
                }
            }
            next = std::move(half);
            if (h >= dt * (1 - 1e-12)) dt = std::max(quantize(h * fac), cfg.dt_min);
        } else {
            next = v;
            stepper.step(next, h);
        }
        krasny_filter(next, cfg.filter_level);
        double nn = vec_norm(g, next);
        ++rec.steps;
        if (!std::isfinite(nn) || nn > cap) {
            capped = true;
            if (std::isfinite(nn)) {
                v = std::move(next);
                t += h;
                record(t, h);
            }
            break;
        }
        v = std::move(next);
        t += h;
        last_norm = nn;
        if (++since_record >= static_cast<std::size_t>(cfg.record_every) || t >= cfg.t_end - eps_t) {
            record(t, h);
            since_record = 0;
        }
    }
    rec.final_time = t;
    rec.final_state = model.make_state(v);
    rec.cap_crossed = capped;

    if (!capped && !rec.dt_collapsed) {
        rec.verdict = Verdict::completed;
        return rec;
    }
    analyse_blowup(rec, cap);
    const double tail = rec.samples.empty() ? 0.0 : rec.samples.back().tail;
    int signals = (capped ? 1 : 0) + (rec.dt_collapsed ? 1 : 0) + (rec.log_convex ? 1 : 0);
    if (rec.dt_collapsed && !capped && tail > cfg.tail_threshold)
        rec.verdict = Verdict::resolution_exhausted;
    else
        rec.verdict = signals >= 2 ? Verdict::blowup : Verdict::resolution_exhausted;
    return rec;
}

void write_series_csv(const std::string& path, const RunRecord& rec) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp);
        os << "t,norm,h1,dt,tail";
        for (const auto& n : rec.extra_names) os << ',' << n;
        os << '\n';
        os << std::setprecision(17);
        for (const auto& s : rec.samples) {
            os << s.t << ',' << s.norm << ',' << s.h1 << ',' << s.dt << ',' << s.tail;
            for (double x : s.extra) os << ',' << x;
            os << '\n';
        }
        if (!os) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("rename failed: " + path);
}

}  // namespace backlab
