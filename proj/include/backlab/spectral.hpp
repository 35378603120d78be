#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace backlab {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

enum class ScalarKind : std::uint8_t { real = 0, complex = 1 };
enum class Representation : std::uint8_t { physical = 0, spectral = 1 };

struct GridError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Periodic grid on [-L/2, L/2)^dim. Storage is row-major with x as the slow
// index; spectral arrays use FFT-native ordering in each dimension.
class SpectralGrid {
public:
    SpectralGrid(int dim, int n, double length);
    SpectralGrid(int dim, int nx, int ny, double lx, double ly);

    int dim() const { return dim_; }
    int n(int axis = 0) const { return axis == 0 ? nx_ : ny_; }
    double length(int axis = 0) const { return axis == 0 ? lx_ : ly_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
    double dx(int axis = 0) const { return length(axis) / n(axis); }

    // Signed mode index j in {-N/2+1 .. N/2} for FFT slot i.
    int mode(int i, int axis = 0) const;
    double wavenumber(int i, int axis = 0) const;
    double x(int i, int axis = 0) const { return -0.5 * length(axis) + i * dx(axis); }

    // Per-slot arrays (length size()).
    const std::vector<double>& kx() const { return kx_; }
    const std::vector<double>& ky() const { return ky_; }
    const std::vector<double>& k2() const { return k2_; }
    const std::vector<unsigned char>& mask() const { return mask_; }
    int mask_limit(int axis = 0) const { return n(axis) / 3; }
    // Slot of the FFT array corresponding to the negated mode.
    std::size_t mirror(std::size_t idx) const;

    // Top octave of retained modes: max |j| in (jmax/2, jmax].
    bool top_octave(std::size_t idx) const;

    bool same_as(const SpectralGrid& o) const {
        return dim_ == o.dim_ && nx_ == o.nx_ && ny_ == o.ny_ && lx_ == o.lx_ && ly_ == o.ly_;
    }

private:
    void init();
    int dim_, nx_, ny_;
    double lx_, ly_;
    std::vector<double> kx_, ky_, k2_;
    std::vector<unsigned char> mask_;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

GridPtr make_grid(int dim, int n, double length);
GridPtr make_grid_2d(int nx, int ny, double lx, double ly);

// In-place FFT helpers. forward() applies the 1/N normalization so that
// spectral coefficients are Fourier-series coefficients.
void fft_forward(const SpectralGrid& g, cvec& data);
void fft_inverse(const SpectralGrid& g, cvec& data);

struct Field {
    GridPtr grid;
    cvec values;
    ScalarKind kind = ScalarKind::real;
    Representation rep = Representation::physical;
    bool zero_mean_required = false;

    Field() = default;
    Field(GridPtr g, ScalarKind k, Representation r, bool zero_mean = false)
        : grid(std::move(g)), values(grid->size()), kind(k), rep(r), zero_mean_required(zero_mean) {}

    std::size_t size() const { return values.size(); }
    cplx& operator[](std::size_t i) { return values[i]; }
    const cplx& operator[](std::size_t i) const { return values[i]; }
};

Field make_field(GridPtr g, ScalarKind kind = ScalarKind::real, bool zero_mean = false);

Field to_spectral(const Field& u);
Field to_physical(const Field& u);
Field project_zero_mean(const Field& u);
Field apply_mask(const Field& u);
void enforce_real(const SpectralGrid& g, cvec& spec);

Field ddx(const Field& u, int order, int axis = 0);
Field dealias_product(const Field& u, const Field& v);
Field conj_field(const Field& u);

cplx inner_product(const Field& u, const Field& v);
double l2_norm(const Field& u);
double semi_h1_norm(const Field& u);
double h1_norm(const Field& u);
// L² norm squared from spectral coefficients (Parseval).
double spectral_norm2(const SpectralGrid& g, const cvec& spec);
double lp_norm_p(const Field& u, int p);

template <class F>
Field sample_field(GridPtr g, F&& f, ScalarKind kind = ScalarKind::real, bool zero_mean = false) {
    Field u = make_field(g, kind, false);
    const SpectralGrid& gr = *u.grid;
    for (int i = 0; i < gr.n(0); ++i)
        for (int j = 0; j < gr.n(1); ++j) {
            std::size_t idx = static_cast<std::size_t>(i) * gr.n(1) + j;
            if constexpr (std::is_invocable_v<F, double>)
                u.values[idx] = f(gr.x(i, 0));
            else
                u.values[idx] = f(gr.x(i, 0), gr.x(j, 1));
        }
    if (zero_mean) {
        u.zero_mean_required = true;
        u = project_zero_mean(u);
    }
    return u;
}

// Binary checkpoints ("BFLB").
void write_checkpoint(const std::string& path, const Field& u);
Field read_checkpoint(const std::string& path);

}  // namespace backlab
