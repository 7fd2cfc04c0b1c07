#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace landau {

// Uniform grid on [-L, L]^3 with an odd node count per axis, so the node set
// is symmetric about the origin.
struct Grid3 {
    int n = 0;
    double h = 0.0;

    Grid3() = default;
    Grid3(int n, double h);
    static Grid3 from_half_extent(int n, double L);

    double half_extent() const { return h * (n - 1) / 2.0; }
    std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }
    double cell_volume() const { return h * h * h; }
    int center() const { return (n - 1) / 2; }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(n) * (static_cast<std::size_t>(j) +
                                              static_cast<std::size_t>(n) * k);
    }
    // Index of the node at -x.
    std::size_t mirror(std::size_t idx) const { return size() - 1 - idx; }
    double coord(int i) const { return (i - center()) * h; }

    bool operator==(const Grid3& o) const { return n == o.n && h == o.h; }
    bool operator!=(const Grid3& o) const { return !(*this == o); }
};

struct ScalarField {
    Grid3 grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid3& g, double fill = 0.0)
        : grid(g), values(g.size(), fill) {}
    ScalarField(const Grid3& g, std::vector<double> v);

    static ScalarField sample(const Grid3& g,
                              const std::function<double(double, double, double)>& f);

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
    double max() const;
    double min() const;
    double max_abs() const;
};

struct VectorField {
    Grid3 grid;
    std::array<std::vector<double>, 3> comp;

    VectorField() = default;
    explicit VectorField(const Grid3& g);

    ScalarField component(int d) const { return ScalarField(grid, comp[d]); }
    double max_abs() const;
};

enum class Weight { gamma, gamma_inverse, second_moment, unit };

double weight_value(Weight w, double x, double y, double z);

VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& F, bool no_flux);
double weighted_integral(const ScalarField& f, Weight w);
ScalarField symmetrize_even(const ScalarField& f);
double parity_defect(const ScalarField& f);
// Defect of F(x) = -F(-x), maximised over components.
double odd_parity_defect(const VectorField& F);

void require_same_grid(const Grid3& a, const Grid3& b, const char* where);

// Staggered (face) lattices. The faces normal to axis d sit between nodes i
// and i + e_d, so the lattice has n-1 points along d and n along the others.
struct FaceLattice {
    std::array<int, 3> dims;
    std::size_t size() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
    }
};

FaceLattice face_lattice(const Grid3& g, int d);

using FaceValues = std::array<std::vector<double>, 3>;

// (f(i+e_d) - f(i)) / h on every face.
FaceValues face_difference(const ScalarField& f);
// (f(i+e_d) + f(i)) / 2 on every face.
FaceValues face_average(const ScalarField& f);
// Node divergence of a face flux with zero flux through the outer boundary.
ScalarField face_divergence(const Grid3& g, const FaceValues& flux);
// Squared gradient magnitude at faces: normal difference squared plus the
// squared averages of the nodal tangential differences.
FaceValues face_grad_sq(const ScalarField& w);
// Nodal tangential difference along axis d used by face_grad_sq.
std::vector<double> nodal_difference(const ScalarField& f, int d);

}  // namespace landau
