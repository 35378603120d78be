#include "backlab/models.hpp"

#include <cmath>

namespace backlab {

namespace {

cvec forcing_coeffs(const GridPtr& g, const std::optional<Field>& f, bool zero_mean) {
    cvec out(g->size(), 0.0);
    if (!f) return out;
    if (!f->grid->same_as(*g)) throw GridError("forcing grid mismatch");
    Field s = to_spectral(*f);
    const auto& mask = g->mask();
    for (std::size_t i = 0; i < out.size(); ++i)
        if (mask[i]) out[i] = s.values[i];
    if (zero_mean) {
        double scale = std::sqrt(spectral_norm2(*g, out)) + 1e-300;
        if (std::abs(out[0]) * std::sqrt(g->length(0)) > 1e-12 * scale)
            throw ModelError("forcing must have zero mean");
        out[0] = 0.0;
    }
    return out;
}

void check_zero_mean(const Field& u) {
    Field s = to_spectral(u);
    double scale = std::sqrt(spectral_norm2(*s.grid, s.values)) + 1e-300;
    double area = s.grid->length(0) * (s.grid->dim() == 2 ? s.grid->length(1) : 1.0);
    if (std::abs(s.values[0]) * std::sqrt(area) > 1e-10 * scale) throw ModelError("input must have zero mean");
}

// Physical values of the masked coefficients.
cvec physical_masked(const SpectralGrid& g, const cvec& uhat) {
    cvec u(uhat.size());
    const auto& mask = g.mask();
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = mask[i] ? uhat[i] : 0.0;
    fft_inverse(g, u);
    return u;
}

void mask_in_place(const SpectralGrid& g, cvec& v) {
    const auto& mask = g.mask();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!mask[i]) v[i] = 0.0;
}

// -(u u_x) for a real field via -(1/2) d/dx (u^2).
void burgers_term(const SpectralGrid& g, const cvec& uhat, cvec& out) {
    cvec u = physical_masked(g, uhat);
    for (auto& c : u) c = c.real() * c.real();
    fft_forward(g, u);
    const auto& k = g.kx();
    const auto& mask = g.mask();
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = mask[i] ? cplx(0.0, -0.5 * k[i]) * u[i] : 0.0;
    out[0] = 0.0;
}

// P(P(|u|^2) u), two masked binary products.
cvec cubic_term(const SpectralGrid& g, const cvec& uhat) {
    cvec u = physical_masked(g, uhat);
    cvec w(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) w[i] = std::norm(u[i]);
    fft_forward(g, w);
    mask_in_place(g, w);
    enforce_real(g, w);
    fft_inverse(g, w);
    for (std::size_t i = 0; i < u.size(); ++i) w[i] = w[i].real() * u[i];
    fft_forward(g, w);
    mask_in_place(g, w);
    return w;
}

}  // namespace

void Model::set_forward_symbol(const cvec& s) {
    for (std::size_t i = 0; i < s.size(); ++i) sigma_[i] = sign() * s[i];
}

void Model::nonlinear(const cvec& uhat, cvec& out) const {
    out.assign(uhat.size(), 0.0);
    forward_nonlinear(uhat, out);
    if (dir_ == Direction::backward)
        for (auto& c : out) c = -c;
    if (zero_mean_) out[0] = 0.0;
    if (kind_ == ScalarKind::real) enforce_real(*grid_, out);
}

cvec Model::prepare(const Field& u) const {
    if (!u.grid->same_as(*grid_)) throw GridError("state grid mismatch");
    Field s = to_spectral(u);
    cvec v = s.values;
    mask_in_place(*grid_, v);
    if (zero_mean_) v[0] = 0.0;
    if (kind_ == ScalarKind::real) enforce_real(*grid_, v);
    return v;
}

Field Model::make_state(const cvec& uhat) const {
    Field f(grid_, kind_, Representation::spectral, zero_mean_);
    f.values = uhat;
    return f;
}

Field Model::tendency(const Field& u) const {
    if (zero_mean_) check_zero_mean(u);
    Field s = to_spectral(u);
    cvec n;
    nonlinear(s.values, n);
    for (std::size_t i = 0; i < n.size(); ++i) n[i] += sigma_[i] * s.values[i];
    if (kind_ == ScalarKind::real) enforce_real(*grid_, n);
    Field r(grid_, kind_, Representation::spectral, zero_mean_);
    r.values = std::move(n);
    return u.rep == Representation::physical ? to_physical(r) : r;
}

KbsModel::KbsModel(GridPtr g, const KbsParams& p)
    : Model(std::move(g), ScalarKind::real, true, p.direction), p_(p) {
    if (grid_->dim() != 1) throw ModelError("KBS model is 1D");
    if (p.nu < 0.0) throw ModelError("nu must be non-negative");
    f_ = forcing_coeffs(grid_, p.forcing, true);
    cvec s(grid_->size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double k = grid_->kx()[i];
        s[i] = cplx(-p.nu * k * k + p.beta, p.gamma * k * k * k);
    }
    s[0] = 0.0;
    set_forward_symbol(s);
}

void KbsModel::forward_nonlinear(const cvec& uhat, cvec& out) const {
    burgers_term(*grid_, uhat, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += f_[i];
}

NlsModel::NlsModel(GridPtr g, const NlsParams& p)
    : Model(std::move(g), ScalarKind::complex, false, p.direction), p_(p) {
    if (grid_->dim() != 1) throw ModelError("NLS model is 1D");
    if (!(p.lambda > 0.0)) throw ModelError("lambda must be positive");
    f_ = forcing_coeffs(grid_, p.forcing, false);
    cvec s(grid_->size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double k = grid_->kx()[i];
        s[i] = cplx(-p.lambda, -k * k);
    }
    set_forward_symbol(s);
}

void NlsModel::forward_nonlinear(const cvec& uhat, cvec& out) const {
    cvec c = cubic_term(*grid_, uhat);
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = I * c[i] - I * f_[i];
}

CglModel::CglModel(GridPtr g, const CglParams& p) : Model(std::move(g), ScalarKind::complex, false, p.direction), p_(p) {
    if (grid_->dim() != 1) throw ModelError("CGL model is 1D");
    if (p.a < 0.0) throw ModelError("a must be non-negative");
    cvec s(grid_->size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double k = grid_->kx()[i];
        s[i] = -cplx(p.a, p.b) * (k * k) + p.delta;
    }
    set_forward_symbol(s);
}

void CglModel::forward_nonlinear(const cvec& uhat, cvec& out) const {
    cvec c = cubic_term(*grid_, uhat);
    const cplx coef(p_.alpha_cgl, p_.beta_cgl);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -coef * c[i];
}

HyperNsModel::HyperNsModel(GridPtr g, const HyperNsParams& p)
    : Model(std::move(g), ScalarKind::real, true, p.direction), p_(p) {
    if (grid_->dim() != 2) throw ModelError("hyperviscous NSE model is 2D");
    if (!(p.nu > 0.0)) throw ModelError("nu must be positive");
    cvec s(grid_->size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double k2 = grid_->k2()[i];
        s[i] = -p.nu * k2 * k2;
    }
    set_forward_symbol(s);
}

void HyperNsModel::forward_nonlinear(const cvec& uhat, cvec& out) const {
    const SpectralGrid& g = *grid_;
    const auto& kx = g.kx();
    const auto& ky = g.ky();
    const auto& k2 = g.k2();
    const auto& mask = g.mask();
    const std::size_t n = uhat.size();
    cvec px(n), py(n), wx(n), wy(n);
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i] || k2[i] == 0.0) {
            px[i] = py[i] = wx[i] = wy[i] = 0.0;
            continue;
        }
        cplx psi = -uhat[i] / k2[i];
        px[i] = I * kx[i] * psi;
        py[i] = I * ky[i] * psi;
        wx[i] = I * kx[i] * uhat[i];
        wy[i] = I * ky[i] * uhat[i];
    }
    fft_inverse(g, px);
    fft_inverse(g, py);
    fft_inverse(g, wx);
    fft_inverse(g, wy);
    for (std::size_t i = 0; i < n; ++i) out[i] = -(px[i].real() * wy[i].real() - py[i].real() * wx[i].real());
    fft_forward(g, out);
    mask_in_place(g, out);
    out[0] = 0.0;
}

BbmModel::BbmModel(GridPtr g, double eps, Direction dir)
    : Model(std::move(g), ScalarKind::real, true, dir), eps_(eps) {
    if (grid_->dim() != 1) throw ModelError("BBM model is 1D");
    if (eps < 0.0) throw ModelError("eps must be non-negative");
    cvec s(grid_->size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double k = grid_->kx()[i];
        s[i] = cplx(-eps * k * k, k * k * k) / (1.0 + eps * k * k);
    }
    s[0] = 0.0;
    set_forward_symbol(s);
}

void BbmModel::forward_nonlinear(const cvec& uhat, cvec& out) const {
    burgers_term(*grid_, uhat, out);
    const auto& k = grid_->kx();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= 1.0 + eps_ * k[i] * k[i];
}

KbsParams perturbed_kdv_params(const PerturbedKdv& p) {
    KbsParams k;
    k.gamma = 1.0;
    if (p.kind == PerturbedKdvKind::damped) k.beta = -p.eps;
    if (p.kind == PerturbedKdvKind::viscous) k.nu = p.eps;
    return k;
}

std::unique_ptr<Model> make_perturbed_kdv(GridPtr g, const PerturbedKdv& p, Direction dir) {
    if (!(p.eps > 0.0)) throw ModelError("eps must be positive");
    if (p.kind == PerturbedKdvKind::viscous_bbm) return std::make_unique<BbmModel>(std::move(g), p.eps, dir);
    KbsParams k = perturbed_kdv_params(p);
    k.direction = dir;
    return std::make_unique<KbsModel>(std::move(g), k);
}

Field kbs_tendency(const Field& u, const KbsParams& p) { return KbsModel(u.grid, p).tendency(u); }

Field nls_tendency(const Field& u, const NlsParams& p) {
    Field c = u;
    c.kind = ScalarKind::complex;
    return NlsModel(u.grid, p).tendency(c);
}

Field cgl_tendency(const Field& u, const CglParams& p) {
    Field c = u;
    c.kind = ScalarKind::complex;
    return CglModel(u.grid, p).tendency(c);
}

Field hyperns_tendency(const Field& omega, const HyperNsParams& p) { return HyperNsModel(omega.grid, p).tendency(omega); }

Field bbm_tendency(const Field& u, double eps) { return BbmModel(u.grid, eps).tendency(u); }

Field streamfunction(const Field& omega) {
    Field s = to_spectral(omega);
    const auto& k2 = s.grid->k2();
    for (std::size_t i = 0; i < s.size(); ++i) s.values[i] = k2[i] > 0.0 ? -s.values[i] / k2[i] : 0.0;
    s.zero_mean_required = true;
    return omega.rep == Representation::physical ? to_physical(s) : s;
}

Field jacobian(const Field& a, const Field& b) {
    Field ax = ddx(a, 1, 0), ay = ddx(a, 1, 1), bx = ddx(b, 1, 0), by = ddx(b, 1, 1);
    Field p = dealias_product(ax, by), q = dealias_product(ay, bx);
    for (std::size_t i = 0; i < p.size(); ++i) p.values[i] -= q.values[i];
    return p;
}

double hyperns_energy(const Field& omega) {
    Field s = to_spectral(omega);
    const auto& k2 = s.grid->k2();
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (k2[i] > 0.0) acc += std::norm(s.values[i]) / k2[i];
    return acc * s.grid->length(0) * s.grid->length(1);
}

double hyperns_au2(const Field& omega) {
    Field s = to_spectral(omega);
    const auto& k2 = s.grid->k2();
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += k2[i] * std::norm(s.values[i]);
    return acc * s.grid->length(0) * s.grid->length(1);
}

}  // namespace backlab
