#include "backlab/spectral.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace backlab {

namespace {

bool pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

struct PlanCache {
    std::mutex mu;
    std::map<std::tuple<int, int, int>, fftw_plan> plans;

    fftw_plan get(int nx, int ny, int sign) {
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_tuple(nx, ny, sign);
        auto it = plans.find(key);
        if (it != plans.end()) return it->second;
        std::size_t n = static_cast<std::size_t>(nx) * ny;
        fftw_complex* buf = fftw_alloc_complex(n);
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan p = ny == 1 ? fftw_plan_dft_1d(nx, buf, buf, sign, flags)
                              : fftw_plan_dft_2d(nx, ny, buf, buf, sign, flags);
        fftw_free(buf);
        plans.emplace(key, p);
        return p;
    }
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

void execute(const SpectralGrid& g, cvec& data, int sign) {
    fftw_plan p = plan_cache().get(g.n(0), g.n(1), sign);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p, ptr, ptr);
}

void require_same(const Field& u, const Field& v) {
    if (!u.grid || !v.grid || !u.grid->same_as(*v.grid)) throw GridError("grid mismatch");
}

cvec spectral_values(const Field& u) {
    cvec s = u.values;
    if (u.rep == Representation::physical) fft_forward(*u.grid, s);
    return s;
}

}  // namespace

SpectralGrid::SpectralGrid(int dim, int n, double length)
    : SpectralGrid(dim, n, dim == 2 ? n : 1, length, dim == 2 ? length : 1.0) {}

SpectralGrid::SpectralGrid(int dim, int nx, int ny, double lx, double ly)
    : dim_(dim), nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
    if (dim != 1 && dim != 2) throw GridError("dim must be 1 or 2");
    if (nx < 16 || !pow2(nx)) throw GridError("N must be a power of two >= 16");
    if (dim == 2 && (ny < 16 || !pow2(ny))) throw GridError("N must be a power of two >= 16");
    if (!(lx > 0.0) || (dim == 2 && !(ly > 0.0))) throw GridError("L must be positive");
    init();
}

int SpectralGrid::mode(int i, int axis) const {
    int n = this->n(axis);
    if (n == 1) return 0;
    return i <= n / 2 ? i : i - n;
}

double SpectralGrid::wavenumber(int i, int axis) const {
    return 2.0 * std::numbers::pi * mode(i, axis) / length(axis);
}

void SpectralGrid::init() {
    std::size_t n = size();
    kx_.resize(n);
    ky_.resize(n);
    k2_.resize(n);
    mask_.resize(n);
    for (int i = 0; i < nx_; ++i)
        for (int j = 0; j < ny_; ++j) {
            std::size_t idx = static_cast<std::size_t>(i) * ny_ + j;
            kx_[idx] = wavenumber(i, 0);
            ky_[idx] = dim_ == 2 ? wavenumber(j, 1) : 0.0;
            k2_[idx] = kx_[idx] * kx_[idx] + ky_[idx] * ky_[idx];
            bool keep = std::abs(mode(i, 0)) <= nx_ / 3;
            if (dim_ == 2) keep = keep && std::abs(mode(j, 1)) <= ny_ / 3;
            mask_[idx] = keep ? 1 : 0;
        }
}

std::size_t SpectralGrid::mirror(std::size_t idx) const {
    std::size_t i = idx / ny_, j = idx % ny_;
    std::size_t mi = (nx_ - i) % nx_, mj = (ny_ - j) % ny_;
    return mi * ny_ + mj;
}

bool SpectralGrid::top_octave(std::size_t idx) const {
    if (!mask_[idx]) return false;
    int i = static_cast<int>(idx / ny_), j = static_cast<int>(idx % ny_);
    int ax = std::abs(mode(i, 0)), ay = dim_ == 2 ? std::abs(mode(j, 1)) : 0;
    int jx = nx_ / 3, jy = ny_ / 3;
    return 2 * ax > jx || (dim_ == 2 && 2 * ay > jy);
}

GridPtr make_grid(int dim, int n, double length) {
    return std::make_shared<const SpectralGrid>(dim, n, length);
}

GridPtr make_grid_2d(int nx, int ny, double lx, double ly) {
    return std::make_shared<const SpectralGrid>(2, nx, ny, lx, ly);
}

void fft_forward(const SpectralGrid& g, cvec& data) {
    execute(g, data, FFTW_FORWARD);
    double s = 1.0 / static_cast<double>(g.size());
    for (auto& c : data) c *= s;
}

void fft_inverse(const SpectralGrid& g, cvec& data) { execute(g, data, FFTW_BACKWARD); }

Field make_field(GridPtr g, ScalarKind kind, bool zero_mean) {
    return Field(std::move(g), kind, Representation::physical, zero_mean);
}

void enforce_real(const SpectralGrid& g, cvec& spec) {
    for (std::size_t i = 0; i < spec.size(); ++i) {
        std::size_t m = g.mirror(i);
        if (m < i) continue;
        if (m == i) {
            spec[i] = spec[i].real();
        } else {
            cplx a = 0.5 * (spec[i] + std::conj(spec[m]));
            spec[i] = a;
            spec[m] = std::conj(a);
        }
    }
}

Field to_spectral(const Field& u) {
    if (u.rep == Representation::spectral) return u;
    Field r = u;
    fft_forward(*r.grid, r.values);
    if (r.kind == ScalarKind::real) enforce_real(*r.grid, r.values);
    if (r.zero_mean_required) r.values[0] = 0.0;
    r.rep = Representation::spectral;
    return r;
}

Field to_physical(const Field& u) {
    if (u.rep == Representation::physical) return u;
    Field r = u;
    if (r.zero_mean_required) r.values[0] = 0.0;
    fft_inverse(*r.grid, r.values);
    if (r.kind == ScalarKind::real)
        for (auto& c : r.values) c = c.real();
    r.rep = Representation::physical;
    return r;
}

Field project_zero_mean(const Field& u) {
    Field r = u;
    if (r.rep == Representation::spectral) {
        r.values[0] = 0.0;
        return r;
    }
    cplx mean = 0.0;
    for (const auto& c : r.values) mean += c;
    mean /= static_cast<double>(r.size());
    for (auto& c : r.values) c -= mean;
    if (r.kind == ScalarKind::real)
        for (auto& c : r.values) c = c.real();
    return r;
}

Field apply_mask(const Field& u) {
    Field s = to_spectral(u);
    const auto& mask = s.grid->mask();
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!mask[i]) s.values[i] = 0.0;
    return u.rep == Representation::physical ? to_physical(s) : s;
}

Field ddx(const Field& u, int order, int axis) {
    if (order < 1) throw std::invalid_argument("derivative order must be positive");
    if (axis < 0 || axis >= u.grid->dim()) throw std::invalid_argument("bad axis");
    const SpectralGrid& g = *u.grid;
    Field s = to_spectral(u);
    const auto& k = axis == 0 ? g.kx() : g.ky();
    const int n = g.n(axis);
    for (std::size_t i = 0; i < s.size(); ++i) {
        int slot = axis == 0 ? static_cast<int>(i / g.n(1)) : static_cast<int>(i % g.n(1));
        if (order % 2 == 1 && slot == n / 2 && u.kind == ScalarKind::real) {
            s.values[i] = 0.0;
            continue;
        }
        cplx f = 1.0;
        for (int o = 0; o < order; ++o) f *= cplx(0.0, k[i]);
        s.values[i] *= f;
    }
    s.values[0] = 0.0;
    return u.rep == Representation::physical ? to_physical(s) : s;
}

Field dealias_product(const Field& u, const Field& v) {
    require_same(u, v);
    const SpectralGrid& g = *u.grid;
    const auto& mask = g.mask();
    cvec a = spectral_values(u), b = spectral_values(v);
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!mask[i]) a[i] = b[i] = 0.0;
    fft_inverse(g, a);
    fft_inverse(g, b);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
    fft_forward(g, a);
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!mask[i]) a[i] = 0.0;
    bool real = u.kind == ScalarKind::real && v.kind == ScalarKind::real;
    if (real) enforce_real(g, a);
    Field r(u.grid, real ? ScalarKind::real : ScalarKind::complex, Representation::spectral, false);
    r.values = std::move(a);
    return u.rep == Representation::physical ? to_physical(r) : r;
}

Field conj_field(const Field& u) {
    Field p = to_physical(u);
    for (auto& c : p.values) c = std::conj(c);
    return u.rep == Representation::spectral ? to_spectral(p) : p;
}

cplx inner_product(const Field& u, const Field& v) {
    require_same(u, v);
    const SpectralGrid& g = *u.grid;
    cplx s = 0.0;
    if (u.rep == Representation::spectral && v.rep == Representation::spectral) {
        for (std::size_t i = 0; i < u.size(); ++i) s += u.values[i] * std::conj(v.values[i]);
        return s * g.length(0) * (g.dim() == 2 ? g.length(1) : 1.0);
    }
    Field a = to_physical(u), b = to_physical(v);
    for (std::size_t i = 0; i < a.size(); ++i) s += a.values[i] * std::conj(b.values[i]);
    double w = g.dx(0) * (g.dim() == 2 ? g.dx(1) : 1.0);
    return s * w;
}

double spectral_norm2(const SpectralGrid& g, const cvec& spec) {
    double s = 0.0;
    for (const auto& c : spec) s += std::norm(c);
    return s * g.length(0) * (g.dim() == 2 ? g.length(1) : 1.0);
}

double l2_norm(const Field& u) { return std::sqrt(std::max(0.0, inner_product(u, u).real())); }

double semi_h1_norm(const Field& u) {
    Field s = to_spectral(u);
    double acc = 0.0;
    const auto& k2 = s.grid->k2();
    for (std::size_t i = 0; i < s.size(); ++i) acc += k2[i] * std::norm(s.values[i]);
    const SpectralGrid& g = *s.grid;
    return std::sqrt(acc * g.length(0) * (g.dim() == 2 ? g.length(1) : 1.0));
}

double h1_norm(const Field& u) {
    double a = l2_norm(u), b = semi_h1_norm(u);
    return std::sqrt(a * a + b * b);
}

double lp_norm_p(const Field& u, int p) {
    Field a = to_physical(u);
    const SpectralGrid& g = *a.grid;
    double s = 0.0;
    for (const auto& c : a.values) s += std::pow(std::abs(c), p);
    return s * g.dx(0) * (g.dim() == 2 ? g.dx(1) : 1.0);
}

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian host");

constexpr std::uint16_t kCheckpointVersion = 1;

template <class T>
void put(std::vector<char>& buf, std::size_t off, T v) {
    std::memcpy(buf.data() + off, &v, sizeof(T));
}

template <class T>
T get(const std::vector<char>& buf, std::size_t off) {
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const Field& u) {
    const SpectralGrid& g = *u.grid;
    const int dim = g.dim();
    const std::size_t header = dim == 1 ? 32 : 48;
    std::vector<char> buf(header, 0);
    std::memcpy(buf.data(), "BFLB", 4);
    put<std::uint16_t>(buf, 4, kCheckpointVersion);
    put<std::uint8_t>(buf, 6, static_cast<std::uint8_t>(dim));
    put<std::uint8_t>(buf, 7, static_cast<std::uint8_t>(u.kind));
    std::size_t off = 8;
    for (int a = 0; a < dim; ++a, off += 4) put<std::uint32_t>(buf, off, static_cast<std::uint32_t>(g.n(a)));
    for (int a = 0; a < dim; ++a, off += 8) put<double>(buf, off, g.length(a));
    put<std::uint8_t>(buf, off, static_cast<std::uint8_t>(u.rep));
    put<std::uint8_t>(buf, off + 1, u.zero_mean_required ? 1 : 0);

    bool interleave = u.kind == ScalarKind::complex || u.rep == Representation::spectral;
    std::vector<double> data;
    data.reserve(u.size() * (interleave ? 2 : 1));
    for (const auto& c : u.values) {
        data.push_back(c.real());
        if (interleave) data.push_back(c.imag());
    }
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp);
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!os) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("rename failed: " + path);
}

Field read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::vector<char> buf(32);
    is.read(buf.data(), 32);
    if (!is || std::memcmp(buf.data(), "BFLB", 4) != 0) throw std::runtime_error("not a BFLB checkpoint: " + path);
    if (get<std::uint16_t>(buf, 4) != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
    int dim = get<std::uint8_t>(buf, 6);
    if (dim != 1 && dim != 2) throw std::runtime_error("bad checkpoint dim");
    if (dim == 2) {
        buf.resize(48);
        is.read(buf.data() + 32, 16);
    }
    auto kind = static_cast<ScalarKind>(get<std::uint8_t>(buf, 7));
    int n[2] = {0, 0};
    double len[2] = {0, 0};
    std::size_t off = 8;
    for (int a = 0; a < dim; ++a, off += 4) n[a] = static_cast<int>(get<std::uint32_t>(buf, off));
    for (int a = 0; a < dim; ++a, off += 8) len[a] = get<double>(buf, off);
    auto rep = static_cast<Representation>(get<std::uint8_t>(buf, off));
    bool zm = get<std::uint8_t>(buf, off + 1) != 0;
    GridPtr g = dim == 1 ? make_grid(1, n[0], len[0]) : make_grid_2d(n[0], n[1], len[0], len[1]);
    Field u(g, kind, rep, zm);
    bool interleave = kind == ScalarKind::complex || rep == Representation::spectral;
    std::vector<double> data(u.size() * (interleave ? 2 : 1));
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    for (std::size_t i = 0; i < u.size(); ++i)
        u.values[i] = interleave ? cplx(data[2 * i], data[2 * i + 1]) : cplx(data[i], 0.0);
    return u;
}

}  // namespace backlab
