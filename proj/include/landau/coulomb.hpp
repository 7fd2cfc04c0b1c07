#pragma once

#include <array>
#include <memory>
#include <vector>

#include "landau/field.hpp"

namespace landau {

enum class Backend { direct, spectral };

// Integral of 1/|x| over the unit cube [-1/2, 1/2]^3.
double unit_cell_inverse_distance_integral();

// Discrete free-space convolution with the kernel 1/(4 pi |x|). The value at
// zero separation is the cell average of the kernel over one grid cell.
class CoulombOperator {
public:
    CoulombOperator(const Grid3& grid, Backend backend, double kernel_perturbation = 0.0);
    ~CoulombOperator();
    CoulombOperator(const CoulombOperator&) = delete;
    CoulombOperator& operator=(const CoulombOperator&) = delete;

    const Grid3& grid() const { return grid_; }
    Backend backend() const { return backend_; }
    double self_cell_value() const { return self_cell_; }
    // Kernel sample K(o) for an integer offset o.
    double kernel(int di, int dj, int dk) const;

    ScalarField potential(const ScalarField& u) const;
    VectorField grad_potential(const ScalarField& u) const;
    VectorField vector_potential(const VectorField& g) const;

    // Convolution of values laid out on a box of the given dims (each <= n),
    // x fastest, with the same spacing h. Used for face lattices.
    std::vector<double> convolve(const std::vector<double>& values,
                                 const std::array<int, 3>& dims) const;

private:
    enum class KernelKind { potential, grad_x, grad_y, grad_z };
    std::vector<double> apply(const std::vector<double>& values, const std::array<int, 3>& dims,
                              KernelKind kind) const;
    std::vector<double> apply_direct(const std::vector<double>& values,
                                     const std::array<int, 3>& dims, KernelKind kind) const;
    std::vector<double> apply_spectral(const std::vector<double>& values,
                                       const std::array<int, 3>& dims, KernelKind kind) const;
    double kernel_of(KernelKind kind, int di, int dj, int dk) const;

    Grid3 grid_;
    Backend backend_;
    double scale_;
    double self_cell_;
    // Radial tables indexed by |offset| components, size n^3.
    std::vector<double> table_;
    std::vector<double> grad_table_;

    struct Spectral;
    std::unique_ptr<Spectral> spectral_;
};

}  // namespace landau
