#include "landau/coulomb.hpp"

#include <fftw3.h>

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>

#include "landau/errors.hpp"

namespace landau {

double unit_cell_inverse_distance_integral() {
    // Split the cube into six pyramids with apex at the origin; on each the
    // substitution (y, z) = x (s, t) leaves a smooth integrand on [-1,1]^2,
    // and the radial factor integrates to 1/8.
    using boost::math::quadrature::gauss;
    auto inner = [](double s) {
        return gauss<double, 30>::integrate(
            [s](double t) { return 1.0 / std::sqrt(1.0 + s * s + t * t); }, -1.0, 1.0);
    };
    const double J = gauss<double, 30>::integrate(inner, -1.0, 1.0);
    return 6.0 * J / 8.0;
}

namespace {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
using RealBuf = std::unique_ptr<double[], FftwFree>;
using ComplexBuf = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuf alloc_real(std::size_t n) { return RealBuf(fftw_alloc_real(n)); }
ComplexBuf alloc_complex(std::size_t n) { return ComplexBuf(fftw_alloc_complex(n)); }

}  // namespace

struct CoulombOperator::Spectral {
    int P = 0;
    std::size_t real_size = 0;
    std::size_t complex_size = 0;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    std::array<ComplexBuf, 4> kernel_hat;

    ~Spectral() {
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

CoulombOperator::CoulombOperator(const Grid3& grid, Backend backend, double kernel_perturbation)
    : grid_(grid), backend_(backend), scale_(1.0 + kernel_perturbation) {
    const int n = grid_.n;
    const double h = grid_.h;
    const double four_pi = 4.0 * std::numbers::pi;
    self_cell_ = scale_ * unit_cell_inverse_distance_integral() / (four_pi * h);

    table_.assign(grid_.size(), 0.0);
    grad_table_.assign(grid_.size(), 0.0);
    const double h3 = grid_.cell_volume();
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const std::size_t idx = grid_.index(i, j, k);
                if (idx == 0) {
                    table_[0] = self_cell_ * h3;
                    continue;
                }
                const double r = std::sqrt(double(i) * i + double(j) * j + double(k) * k);
                table_[idx] = scale_ * h3 / (four_pi * h * r);
                grad_table_[idx] = scale_ * h3 / (four_pi * h * h * r * r * r);
            }

    if (backend_ != Backend::spectral) return;

    spectral_ = std::make_unique<Spectral>();
    auto& sp = *spectral_;
    sp.P = 2 * n;
    const int P = sp.P;
    sp.real_size = static_cast<std::size_t>(P) * P * P;
    sp.complex_size = static_cast<std::size_t>(P) * P * (P / 2 + 1);
    RealBuf in = alloc_real(sp.real_size);
    ComplexBuf out = alloc_complex(sp.complex_size);
    // FFTW wants the slowest dimension first; our layout is x fastest, so the
    // logical dims are (z, y, x).
    sp.forward = fftw_plan_dft_r2c_3d(P, P, P, in.get(), out.get(), FFTW_ESTIMATE);
    sp.backward = fftw_plan_dft_c2r_3d(P, P, P, out.get(), in.get(), FFTW_ESTIMATE);
    if (!sp.forward || !sp.backward) throw Error("FFTW plan creation failed");

    auto wrap = [P, n](int a) { return a < n ? a : a - P; };
    for (int kind = 0; kind < 4; ++kind) {
        for (int c = 0; c < P; ++c)
            for (int b = 0; b < P; ++b)
                for (int a = 0; a < P; ++a) {
                    const std::size_t idx = a + static_cast<std::size_t>(P) * (b + static_cast<std::size_t>(P) * c);
                    if (a == n || b == n || c == n) {
                        in[idx] = 0.0;
                        continue;
                    }
                    in[idx] = kernel_of(static_cast<KernelKind>(kind), wrap(a), wrap(b), wrap(c));
                }
        sp.kernel_hat[kind] = alloc_complex(sp.complex_size);
        fftw_execute_dft_r2c(sp.forward, in.get(), sp.kernel_hat[kind].get());
    }
}

CoulombOperator::~CoulombOperator() = default;

double CoulombOperator::kernel(int di, int dj, int dk) const {
    return kernel_of(KernelKind::potential, di, dj, dk) / grid_.cell_volume();
}

double CoulombOperator::kernel_of(KernelKind kind, int di, int dj, int dk) const {
    const std::size_t idx = grid_.index(std::abs(di), std::abs(dj), std::abs(dk));
    switch (kind) {
        case KernelKind::potential: return table_[idx];
        case KernelKind::grad_x: return -di * grad_table_[idx];
        case KernelKind::grad_y: return -dj * grad_table_[idx];
        case KernelKind::grad_z: return -dk * grad_table_[idx];
    }
    return 0.0;
}

std::vector<double> CoulombOperator::apply(const std::vector<double>& values,
                                           const std::array<int, 3>& dims,
                                           KernelKind kind) const {
    for (int d : dims)
        if (d < 1 || d > grid_.n) throw DimensionError("convolution box exceeds operator grid");
    if (values.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2])
        throw DimensionError("convolution input size does not match box");
    if (backend_ == Backend::spectral) return apply_spectral(values, dims, kind);
    return apply_direct(values, dims, kind);
}

std::vector<double> CoulombOperator::apply_direct(const std::vector<double>& values,
                                                  const std::array<int, 3>& dims,
                                                  KernelKind kind) const {
    const int nx = dims[0], ny = dims[1], nz = dims[2];
    std::vector<double> out(values.size(), 0.0);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                double acc = 0.0;
                std::size_t src = 0;
                for (int kk = 0; kk < nz; ++kk)
                    for (int jj = 0; jj < ny; ++jj)
                        for (int ii = 0; ii < nx; ++ii, ++src) {
                            const double v = values[src];
                            if (v == 0.0) continue;
                            acc += kernel_of(kind, i - ii, j - jj, k - kk) * v;
                        }
                out[i + static_cast<std::size_t>(nx) * (j + static_cast<std::size_t>(ny) * k)] = acc;
            }
    return out;
}

std::vector<double> CoulombOperator::apply_spectral(const std::vector<double>& values,
                                                    const std::array<int, 3>& dims,
                                                    KernelKind kind) const {
    const auto& sp = *spectral_;
    const int P = sp.P;
    const int nx = dims[0], ny = dims[1], nz = dims[2];
    RealBuf buf = alloc_real(sp.real_size);
    ComplexBuf spec = alloc_complex(sp.complex_size);
    std::fill(buf.get(), buf.get() + sp.real_size, 0.0);
    std::size_t src = 0;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i, ++src)
                buf[i + static_cast<std::size_t>(P) * (j + static_cast<std::size_t>(P) * k)] = values[src];
    fftw_execute_dft_r2c(sp.forward, buf.get(), spec.get());
    const fftw_complex* K = sp.kernel_hat[static_cast<int>(kind)].get();
    for (std::size_t m = 0; m < sp.complex_size; ++m) {
        const double re = spec[m][0] * K[m][0] - spec[m][1] * K[m][1];
        const double im = spec[m][0] * K[m][1] + spec[m][1] * K[m][0];
        spec[m][0] = re;
        spec[m][1] = im;
    }
    fftw_execute_dft_c2r(sp.backward, spec.get(), buf.get());
    const double norm = 1.0 / static_cast<double>(sp.real_size);
    std::vector<double> out(values.size());
    std::size_t dst = 0;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i, ++dst)
                out[dst] = buf[i + static_cast<std::size_t>(P) * (j + static_cast<std::size_t>(P) * k)] * norm;
    return out;
}

std::vector<double> CoulombOperator::convolve(const std::vector<double>& values,
                                              const std::array<int, 3>& dims) const {
    return apply(values, dims, KernelKind::potential);
}

ScalarField CoulombOperator::potential(const ScalarField& u) const {
    require_same_grid(grid_, u.grid, "potential");
    return ScalarField(grid_, apply(u.values, {grid_.n, grid_.n, grid_.n}, KernelKind::potential));
}

VectorField CoulombOperator::grad_potential(const ScalarField& u) const {
    require_same_grid(grid_, u.grid, "grad_potential");
    VectorField out(grid_);
    const std::array<int, 3> dims{grid_.n, grid_.n, grid_.n};
    out.comp[0] = apply(u.values, dims, KernelKind::grad_x);
    out.comp[1] = apply(u.values, dims, KernelKind::grad_y);
    out.comp[2] = apply(u.values, dims, KernelKind::grad_z);
    return out;
}

VectorField CoulombOperator::vector_potential(const VectorField& g) const {
    require_same_grid(grid_, g.grid, "vector_potential");
    VectorField out(grid_);
    const std::array<int, 3> dims{grid_.n, grid_.n, grid_.n};
    for (int d = 0; d < 3; ++d) out.comp[d] = apply(g.comp[d], dims, KernelKind::potential);
    return out;
}

}  // namespace landau
