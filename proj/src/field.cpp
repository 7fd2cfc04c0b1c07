#include "landau/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "landau/errors.hpp"

namespace landau {

namespace {

std::size_t stride(const Grid3& g, int d) {
    std::size_t s = 1;
    for (int e = 0; e < d; ++e) s *= static_cast<std::size_t>(g.n);
    return s;
}

int axis_pos(const Grid3& g, std::size_t idx, int d) {
    return static_cast<int>((idx / stride(g, d)) % static_cast<std::size_t>(g.n));
}

}  // namespace

Grid3::Grid3(int n_, double h_) : n(n_), h(h_) {
    if (n < 3 || n % 2 == 0)
        throw DimensionError("grid node count must be odd and >= 3, got " + std::to_string(n));
    if (!(h > 0.0) || !std::isfinite(h))
        throw DimensionError("grid spacing must be positive");
}

Grid3 Grid3::from_half_extent(int n, double L) {
    if (n < 3 || n % 2 == 0)
        throw DimensionError("grid node count must be odd and >= 3, got " + std::to_string(n));
    return Grid3(n, 2.0 * L / (n - 1));
}

void require_same_grid(const Grid3& a, const Grid3& b, const char* where) {
    if (a != b) {
        throw DimensionError(std::string(where) + ": grid mismatch (" + std::to_string(a.n) +
                             " vs " + std::to_string(b.n) + " nodes per axis)");
    }
}

ScalarField::ScalarField(const Grid3& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != g.size()) throw DimensionError("field size does not match grid");
}

ScalarField ScalarField::sample(const Grid3& g,
                                const std::function<double(double, double, double)>& f) {
    ScalarField out(g);
    for (int k = 0; k < g.n; ++k)
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i)
                out.values[g.index(i, j, k)] = f(g.coord(i), g.coord(j), g.coord(k));
    return out;
}

double ScalarField::max() const { return *std::max_element(values.begin(), values.end()); }
double ScalarField::min() const { return *std::min_element(values.begin(), values.end()); }

double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

VectorField::VectorField(const Grid3& g) : grid(g) {
    for (auto& c : comp) c.assign(g.size(), 0.0);
}

double VectorField::max_abs() const {
    double m = 0.0;
    for (const auto& c : comp)
        for (double v : c) m = std::max(m, std::abs(v));
    return m;
}

double weight_value(Weight w, double x, double y, double z) {
    const double r2 = x * x + y * y + z * z;
    switch (w) {
        case Weight::gamma: return 1.0 / (1.0 + std::sqrt(r2));
        case Weight::gamma_inverse: return 1.0 + std::sqrt(r2);
        case Weight::second_moment: return r2;
        case Weight::unit: return 1.0;
    }
    return 1.0;
}

VectorField gradient(const ScalarField& f) {
    const Grid3& g = f.grid;
    VectorField out(g);
    const int n = g.n;
    const double inv2h = 1.0 / (2.0 * g.h);
    for (int d = 0; d < 3; ++d) {
        const std::size_t s = stride(g, d);
        auto& o = out.comp[d];
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            const int p = axis_pos(g, idx, d);
            const double* v = f.values.data();
            double diff;
            if (p == 0) {
                diff = (-3.0 * v[idx] + 4.0 * v[idx + s]) - v[idx + 2 * s];
            } else if (p == n - 1) {
                diff = (3.0 * v[idx] - 4.0 * v[idx - s]) + v[idx - 2 * s];
            } else {
                diff = v[idx + s] - v[idx - s];
            }
            o[idx] = diff * inv2h;
        }
    }
    return out;
}

ScalarField divergence(const VectorField& F, bool no_flux) {
    const Grid3& g = F.grid;
    ScalarField out(g);
    if (!no_flux) {
        for (int d = 0; d < 3; ++d) {
            VectorField part = gradient(ScalarField(g, F.comp[d]));
            for (std::size_t i = 0; i < g.size(); ++i) out.values[i] += part.comp[d][i];
        }
        return out;
    }
    // Face averages with zero normal flux through the outer faces.
    FaceValues flux;
    for (int d = 0; d < 3; ++d) flux[d] = face_average(ScalarField(g, F.comp[d]))[d];
    return face_divergence(g, flux);
}

double weighted_integral(const ScalarField& f, Weight w) {
    const Grid3& g = f.grid;
    double sum = 0.0;
    if (w == Weight::unit) {
        for (double v : f.values) sum += v;
        return sum * g.cell_volume();
    }
    for (int k = 0; k < g.n; ++k)
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i)
                sum += f.values[g.index(i, j, k)] *
                       weight_value(w, g.coord(i), g.coord(j), g.coord(k));
    return sum * g.cell_volume();
}

ScalarField symmetrize_even(const ScalarField& f) {
    ScalarField out(f.grid);
    const std::size_t N = f.size();
    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t m = f.grid.mirror(i);
        // Pair in index order so both nodes see the same rounding.
        const double a = f.values[std::min(i, m)];
        const double b = f.values[std::max(i, m)];
        out.values[i] = 0.5 * (a + b);
    }
    return out;
}

double parity_defect(const ScalarField& f) {
    double d = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        d = std::max(d, std::abs(f.values[i] - f.values[f.grid.mirror(i)]));
    return d;
}

double odd_parity_defect(const VectorField& F) {
    double d = 0.0;
    for (const auto& c : F.comp)
        for (std::size_t i = 0; i < c.size(); ++i)
            d = std::max(d, std::abs(c[i] + c[F.grid.mirror(i)]));
    return d;
}

FaceLattice face_lattice(const Grid3& g, int d) {
    FaceLattice fl{{g.n, g.n, g.n}};
    fl.dims[d] = g.n - 1;
    return fl;
}

namespace {

template <class Op>
FaceValues face_map(const ScalarField& f, Op op) {
    const Grid3& g = f.grid;
    FaceValues out;
    for (int d = 0; d < 3; ++d) {
        const FaceLattice fl = face_lattice(g, d);
        const std::size_t s = stride(g, d);
        auto& o = out[d];
        o.resize(fl.size());
        for (int k = 0; k < fl.dims[2]; ++k)
            for (int j = 0; j < fl.dims[1]; ++j)
                for (int i = 0; i < fl.dims[0]; ++i) {
                    const std::size_t left = g.index(i, j, k);
                    o[fl.index(i, j, k)] = op(f.values[left], f.values[left + s]);
                }
    }
    return out;
}

}  // namespace

FaceValues face_difference(const ScalarField& f) {
    const double inv_h = 1.0 / f.grid.h;
    return face_map(f, [inv_h](double l, double r) { return (r - l) * inv_h; });
}

FaceValues face_average(const ScalarField& f) {
    return face_map(f, [](double l, double r) { return 0.5 * (l + r); });
}

ScalarField face_divergence(const Grid3& g, const FaceValues& flux) {
    ScalarField out(g);
    const double inv_h = 1.0 / g.h;
    for (int d = 0; d < 3; ++d) {
        const FaceLattice fl = face_lattice(g, d);
        if (flux[d].size() != fl.size()) throw DimensionError("face flux size mismatch");
        const std::size_t s = stride(g, d);
        for (int k = 0; k < fl.dims[2]; ++k)
            for (int j = 0; j < fl.dims[1]; ++j)
                for (int i = 0; i < fl.dims[0]; ++i) {
                    const std::size_t left = g.index(i, j, k);
                    const double q = flux[d][fl.index(i, j, k)] * inv_h;
                    out.values[left] += q;
                    out.values[left + s] -= q;
                }
    }
    return out;
}

std::vector<double> nodal_difference(const ScalarField& f, int d) {
    const Grid3& g = f.grid;
    const std::size_t s = stride(g, d);
    const int n = g.n;
    std::vector<double> out(g.size());
    const double inv_h = 1.0 / g.h;
    const double inv2h = 0.5 * inv_h;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const int p = axis_pos(g, idx, d);
        if (p == 0)
            out[idx] = (f.values[idx + s] - f.values[idx]) * inv_h;
        else if (p == n - 1)
            out[idx] = (f.values[idx] - f.values[idx - s]) * inv_h;
        else
            out[idx] = (f.values[idx + s] - f.values[idx - s]) * inv2h;
    }
    return out;
}

FaceValues face_grad_sq(const ScalarField& w) {
    const Grid3& g = w.grid;
    FaceValues normal = face_difference(w);
    std::array<std::vector<double>, 3> tang;
    for (int d = 0; d < 3; ++d) tang[d] = nodal_difference(w, d);
    FaceValues out;
    for (int d = 0; d < 3; ++d) {
        const FaceLattice fl = face_lattice(g, d);
        const std::size_t s = stride(g, d);
        out[d].resize(fl.size());
        for (int k = 0; k < fl.dims[2]; ++k)
            for (int j = 0; j < fl.dims[1]; ++j)
                for (int i = 0; i < fl.dims[0]; ++i) {
                    const std::size_t f = fl.index(i, j, k);
                    const std::size_t left = g.index(i, j, k);
                    double acc = normal[d][f] * normal[d][f];
                    for (int e = 0; e < 3; ++e) {
                        if (e == d) continue;
                        const double t = 0.5 * (tang[e][left] + tang[e][left + s]);
                        acc += t * t;
                    }
                    out[d][f] = acc;
                }
    }
    return out;
}

}  // namespace landau
