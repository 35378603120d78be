#pragma once

#include "backlab/spectral.hpp"

#include <memory>
#include <optional>
#include <string>

namespace backlab {

enum class Direction { forward, backward };

struct ModelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// u_t = L u + N(u) with L diagonal in Fourier space. Backward models
// integrate in s = -t, so both the symbol and the remainder are negated.
class Model {
public:
    Model(GridPtr g, ScalarKind kind, bool zero_mean, Direction dir)
        : grid_(std::move(g)), kind_(kind), zero_mean_(zero_mean), dir_(dir), sigma_(grid_->size()) {}
    virtual ~Model() = default;

    const SpectralGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    ScalarKind kind() const { return kind_; }
    bool zero_mean() const { return zero_mean_; }
    Direction direction() const { return dir_; }
    double sign() const { return dir_ == Direction::forward ? 1.0 : -1.0; }

    const cvec& symbol() const { return sigma_; }
    void nonlinear(const cvec& uhat, cvec& out) const;
    Field tendency(const Field& u) const;

    // Zero-mean, masked, symmetry-enforced spectral copy of u.
    cvec prepare(const Field& u) const;
    Field make_state(const cvec& uhat) const;

    virtual std::string name() const = 0;

protected:
    virtual void forward_nonlinear(const cvec& uhat, cvec& out) const = 0;
    void set_forward_symbol(const cvec& s);

    GridPtr grid_;
    ScalarKind kind_;
    bool zero_mean_;
    Direction dir_;
    cvec sigma_;
};

struct KbsParams {
    double nu = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    std::optional<Field> forcing;
    Direction direction = Direction::forward;
};

struct NlsParams {
    double lambda = 0.1;
    std::optional<Field> forcing;
    Direction direction = Direction::forward;
};

struct CglParams {
    double a = 1.0, b = 0.0, delta = 1.0, alpha_cgl = 1.0, beta_cgl = 0.0;
    Direction direction = Direction::forward;
};

struct HyperNsParams {
    double nu = 1.0;
    Direction direction = Direction::forward;
};

enum class PerturbedKdvKind { damped, viscous, viscous_bbm };

struct PerturbedKdv {
    PerturbedKdvKind kind = PerturbedKdvKind::damped;
    double eps = 0.01;
};

class KbsModel final : public Model {
public:
    KbsModel(GridPtr g, const KbsParams& p);
    std::string name() const override { return "kbs"; }
    const KbsParams& params() const { return p_; }
    const cvec& forcing_hat() const { return f_; }

protected:
    void forward_nonlinear(const cvec& uhat, cvec& out) const override;

private:
    KbsParams p_;
    cvec f_;
};

class NlsModel final : public Model {
public:
    NlsModel(GridPtr g, const NlsParams& p);
    std::string name() const override { return "nls"; }
    const NlsParams& params() const { return p_; }
    const cvec& forcing_hat() const { return f_; }

protected:
    void forward_nonlinear(const cvec& uhat, cvec& out) const override;

private:
    NlsParams p_;
    cvec f_;
};

class CglModel final : public Model {
public:
    CglModel(GridPtr g, const CglParams& p);
    std::string name() const override { return "cgl"; }
    const CglParams& params() const { return p_; }

protected:
    void forward_nonlinear(const cvec& uhat, cvec& out) const override;

private:
    CglParams p_;
};

class HyperNsModel final : public Model {
public:
    HyperNsModel(GridPtr g, const HyperNsParams& p);
    std::string name() const override { return "hyperns"; }
    const HyperNsParams& params() const { return p_; }

protected:
    void forward_nonlinear(const cvec& uhat, cvec& out) const override;

private:
    HyperNsParams p_;
};

class BbmModel final : public Model {
public:
    BbmModel(GridPtr g, double eps, Direction dir = Direction::forward);
    std::string name() const override { return "bbm"; }
    double eps() const { return eps_; }

protected:
    void forward_nonlinear(const cvec& uhat, cvec& out) const override;

private:
    double eps_;
};

// Damped and viscous KdV are KBS special cases; the BBM variant has its own model.
std::unique_ptr<Model> make_perturbed_kdv(GridPtr g, const PerturbedKdv& p, Direction dir = Direction::forward);
KbsParams perturbed_kdv_params(const PerturbedKdv& p);

Field kbs_tendency(const Field& u, const KbsParams& p);
Field nls_tendency(const Field& u, const NlsParams& p);
Field cgl_tendency(const Field& u, const CglParams& p);
Field hyperns_tendency(const Field& omega, const HyperNsParams& p);
Field bbm_tendency(const Field& u, double eps);

// Companions of the vorticity form: |u|² and |Au|² with A = -Δ.
double hyperns_energy(const Field& omega);
double hyperns_au2(const Field& omega);
Field streamfunction(const Field& omega);
// Dealiased Jacobian J(a, b) = a_x b_y - a_y b_x.
Field jacobian(const Field& a, const Field& b);

}  // namespace backlab
