#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "landau/errors.hpp"
#include "landau/field.hpp"

using namespace landau;

namespace {

double gaussian(double x, double y, double z, double mass, double sigma, double cx = 0.0) {
    const double r2 = (x - cx) * (x - cx) + y * y + z * z;
    return mass * std::exp(-r2 / (2 * sigma * sigma)) /
           std::pow(2 * std::numbers::pi * sigma * sigma, 1.5);
}

bool interior(const Grid3& g, int i, int j, int k) {
    return i > 0 && j > 0 && k > 0 && i < g.n - 1 && j < g.n - 1 && k < g.n - 1;
}

}  // namespace

TEST_CASE("grid rejects even node counts") {
    CHECK_THROWS_AS(Grid3(4, 0.1), DimensionError);
    CHECK_THROWS_AS(Grid3(5, -1.0), DimensionError);
    Grid3 g = Grid3::from_half_extent(9, 2.0);
    CHECK(g.half_extent() == doctest::Approx(2.0));
    CHECK(g.coord(g.center()) == 0.0);
}

TEST_CASE("gradient of a constant vanishes and is exact on linear fields") {
    Grid3 g(7, 0.3);
    auto c = gradient(ScalarField(g, 2.5));
    CHECK(c.max_abs() == 0.0);
    auto lin = gradient(ScalarField::sample(g, [](double x, double y, double z) { return x + 2 * y - z; }));
    for (int k = 0; k < g.n; ++k)
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) {
                const auto idx = g.index(i, j, k);
                CHECK(lin.comp[0][idx] == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(lin.comp[1][idx] == doctest::Approx(2.0).epsilon(1e-12));
                CHECK(lin.comp[2][idx] == doctest::Approx(-1.0).epsilon(1e-12));
            }
}

TEST_CASE("gradient of a Gaussian converges at second order") {
    auto max_err = [](int n) {
        Grid3 g = Grid3::from_half_extent(n, 3.0);
        auto f = ScalarField::sample(g, [](double x, double y, double z) { return gaussian(x, y, z, 1.0, 0.8); });
        auto G = gradient(f);
        double err = 0.0;
        for (int k = 0; k < g.n; ++k)
            for (int j = 0; j < g.n; ++j)
                for (int i = 0; i < g.n; ++i) {
                    const double x = g.coord(i), y = g.coord(j), z = g.coord(k);
                    const double v = gaussian(x, y, z, 1.0, 0.8);
                    const double exact[3] = {-x / 0.64 * v, -y / 0.64 * v, -z / 0.64 * v};
                    for (int d = 0; d < 3; ++d)
                        err = std::max(err, std::abs(G.comp[d][g.index(i, j, k)] - exact[d]));
                }
        return err;
    };
    const double e17 = max_err(17), e33 = max_err(33);
    CHECK(e33 < e17);
    CHECK(e17 / e33 > 3.5);
}

TEST_CASE("gradient of an even field is odd") {
    Grid3 g(11, 0.25);
    auto f = symmetrize_even(ScalarField::sample(g, [](double x, double y, double z) {
        return std::exp(-(x - 0.3) * (x - 0.3) - 2 * y * y - z * z) + 0.1 * x * y * z;
    }));
    auto G = gradient(f);
    CHECK(odd_parity_defect(G) <= 1e-12 * G.max_abs());
}

TEST_CASE("divergence") {
    Grid3 g(9, 0.2);
    VectorField zero(g);
    CHECK(divergence(zero, true).max_abs() == 0.0);
    CHECK(divergence(zero, false).max_abs() == 0.0);

    VectorField F(g);
    for (int k = 0; k < g.n; ++k)
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) {
                const auto idx = g.index(i, j, k);
                F.comp[0][idx] = g.coord(i);
                F.comp[1][idx] = g.coord(j);
                F.comp[2][idx] = g.coord(k);
            }
    auto div = divergence(F, false);
    auto div_nf = divergence(F, true);
    for (int k = 0; k < g.n; ++k)
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i)
                if (interior(g, i, j, k)) {
                    CHECK(div[g.index(i, j, k)] == doctest::Approx(3.0).epsilon(1e-12));
                    CHECK(div_nf[g.index(i, j, k)] == doctest::Approx(3.0).epsilon(1e-12));
                }
}

TEST_CASE("no-flux divergence integrates to zero for random fields") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Grid3 g(9, 0.37);
    for (int trial = 0; trial < 20; ++trial) {
        VectorField F(g);
        double l1 = 0.0;
        for (auto& c : F.comp)
            for (auto& v : c) {
                v = U(rng) * 100.0;
                l1 += std::abs(v);
            }
        const double total = weighted_integral(divergence(F, true), Weight::unit);
        CHECK(std::abs(total) <= 1e-12 * l1);
    }
}

TEST_CASE("summation by parts on the face lattice") {
    // sum_i w_i div(F)_i h^3 = -sum_f F_f (Dw)_f h^3
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Grid3 g(7, 0.3);
    ScalarField w(g);
    for (auto& v : w.values) v = U(rng);
    FaceValues flux;
    for (int d = 0; d < 3; ++d) {
        flux[d].resize(face_lattice(g, d).size());
        for (auto& v : flux[d]) v = U(rng);
    }
    auto div = face_divergence(g, flux);
    auto dw = face_difference(w);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) lhs += w[i] * div[i];
    for (int d = 0; d < 3; ++d)
        for (std::size_t f = 0; f < flux[d].size(); ++f) rhs -= flux[d][f] * dw[d][f];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("weighted integrals") {
    Grid3 g5(5, 0.4);
    CHECK(weighted_integral(ScalarField(g5, 1.0), Weight::unit) ==
          doctest::Approx(std::pow(5 * 0.4, 3)).epsilon(1e-14));

    const double sigma = 0.5;
    Grid3 g = Grid3::from_half_extent(33, 6 * sigma);
    auto f = ScalarField::sample(g, [&](double x, double y, double z) { return gaussian(x, y, z, 1.0, sigma); });
    CHECK(std::abs(weighted_integral(f, Weight::unit) - 1.0) <= 1e-6);
    CHECK(weighted_integral(f, Weight::second_moment) ==
          doctest::Approx(3 * sigma * sigma).epsilon(1e-4));

    // Weights are positive and gamma lies in (0, 1].
    CHECK(weight_value(Weight::gamma, 0, 0, 0) == 1.0);
    CHECK(weight_value(Weight::gamma, 3, 4, 0) == doctest::Approx(1.0 / 6.0));
    CHECK(weight_value(Weight::second_moment, 1, 2, 2) == doctest::Approx(9.0));

    // Monotone and linear in f.
    auto f2 = f;
    for (auto& v : f2.values) v = 2 * v + 1e-3;
    CHECK(weighted_integral(f2, Weight::gamma) > weighted_integral(f, Weight::gamma));
}

TEST_CASE("symmetrize_even and parity_defect") {
    Grid3 g(9, 0.3);
    auto even = ScalarField::sample(g, [](double x, double y, double z) { return std::cos(x) * (1 + y * y) + z * z; });
    auto s = symmetrize_even(even);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(s[i] == doctest::Approx(even[i]).epsilon(1e-15));
    CHECK(parity_defect(even) <= 1e-15);

    auto odd = ScalarField::sample(g, [](double x, double, double) { return x; });
    CHECK(symmetrize_even(odd).max_abs() <= 1e-15);
    CHECK(parity_defect(odd) == doctest::Approx(2 * g.half_extent()).epsilon(1e-14));

    auto shifted = ScalarField::sample(g, [&](double x, double y, double z) { return gaussian(x, y, z, 1.0, 0.4, g.h); });
    auto sym = symmetrize_even(shifted);
    CHECK(parity_defect(sym) == 0.0);
    for (int k = 0; k < g.n; ++k)
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) {
                const double x = g.coord(i), y = g.coord(j), z = g.coord(k);
                const double expect = 0.5 * (gaussian(x, y, z, 1.0, 0.4, g.h) + gaussian(x, y, z, 1.0, 0.4, -g.h));
                CHECK(sym[g.index(i, j, k)] == doctest::Approx(expect).epsilon(1e-13));
            }
}
