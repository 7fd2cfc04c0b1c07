#include <cmath>
#include <numbers>

#include "doctest.h"
#include "landau/coulomb.hpp"
#include "landau/diagnostics.hpp"
#include "landau/errors.hpp"
#include "landau/regularity.hpp"

using namespace landau;

namespace {

ScalarField even_gaussian(const Grid3& g, double mass, double sigma) {
    return symmetrize_even(ScalarField::sample(g, [&](double x, double y, double z) {
        const double r2 = x * x + y * y + z * z;
        return mass * std::exp(-r2 / (2 * sigma * sigma)) / std::pow(2 * std::numbers::pi * sigma * sigma, 1.5);
    }));
}

// Volume fraction of the ball |x| < R0 in each cell, by 6^3 subsampling.
ScalarField ball_fractions(const Grid3& g, double R0) {
    const int sub = 6;
    return ScalarField::sample(g, [&](double x, double y, double z) {
        int inside = 0;
        for (int a = 0; a < sub; ++a)
            for (int b = 0; b < sub; ++b)
                for (int c = 0; c < sub; ++c) {
                    const double px = x + g.h * ((a + 0.5) / sub - 0.5);
                    const double py = y + g.h * ((b + 0.5) / sub - 0.5);
                    const double pz = z + g.h * ((c + 0.5) / sub - 0.5);
                    inside += px * px + py * py + pz * pz < R0 * R0;
                }
        return double(inside) / (sub * sub * sub);
    });
}

std::vector<StepState> reference_trajectory() {
    SchemeParams p;
    Grid3 g = Grid3::from_half_extent(17, p.default_half_extent());
    CoulombOperator op(g, Backend::spectral);
    std::vector<StepState> tr{make_initial_state(even_gaussian(g, 20.0, 1.5), op, p)};
    const int steps = static_cast<int>(std::lround(p.T_final / p.tau));
    for (int k = 0; k < steps; ++k) tr.push_back(implicit_step(tr.back(), p, op));
    return tr;
}

// Trajectory of constant fields u = c, a = ca on a grid, at times 0, tau, ..., T.
std::vector<StepState> constant_trajectory(const Grid3& g, double c, double ca, double tau, int steps) {
    std::vector<StepState> tr;
    for (int k = 0; k <= steps; ++k) {
        StepState s;
        s.k = k;
        s.t = k * tau;
        s.u = ScalarField(g, c);
        s.w = ScalarField(g, std::log(c));
        s.a = ScalarField(g, ca);
        tr.push_back(s);
    }
    return tr;
}

}  // namespace

TEST_CASE("small-P ratio: zero density, homogeneity and cube size") {
    Grid3 g = Grid3::from_half_extent(17, 2.0);
    PoincareParams pp;
    pp.cube_size = 4 * g.h;
    auto u = even_gaussian(g, 3.0, 0.8);
    CoulombOperator op(g, Backend::spectral);
    auto a = op.potential(u);

    auto zero = small_p_ratio(ScalarField(g, 0.0), a, pp);
    CHECK(zero.cubes.size() == 64);
    for (const auto& c : zero.cubes) {
        CHECK(c.ratio == 0.0);
        CHECK(c.mass_moment_ratio == 0.0);
    }

    auto base = small_p_ratio(u, a, pp);
    ScalarField u2 = u, a2 = a;
    for (auto& v : u2.values) v *= 7.5;
    for (auto& v : a2.values) v *= 7.5;
    auto scaled = small_p_ratio(u2, a2, pp);
    for (std::size_t i = 0; i < base.cubes.size(); ++i) {
        CHECK(scaled.cubes[i].ratio == doctest::Approx(base.cubes[i].ratio).epsilon(1e-12));
        CHECK(scaled.cubes[i].mass_moment_ratio == doctest::Approx(base.cubes[i].mass_moment_ratio).epsilon(1e-12));
        CHECK(base.cubes[i].ratio >= 0.0);
    }

    // Pointwise increase of u with a fixed cannot lower any ratio.
    ScalarField u3 = u;
    for (std::size_t i = 0; i < u3.size(); ++i) u3[i] += 0.01 * (1.0 + std::sin(double(i)));
    auto bigger = small_p_ratio(u3, a, pp);
    for (std::size_t i = 0; i < base.cubes.size(); ++i) CHECK(bigger.cubes[i].ratio >= base.cubes[i].ratio);

    pp.cube_size = 1.5 * g.h;
    CHECK_THROWS_AS(small_p_ratio(u, a, pp), CubeTooSmall);
    pp.cube_size = 4 * g.h;
    CHECK_THROWS_AS(small_p_ratio(u, ScalarField(g, 0.0), pp), Error);
}

TEST_CASE("small-P ratio on a single cube matches direct averaging") {
    Grid3 g(5, 0.5);
    auto u = ScalarField::sample(g, [](double x, double y, double z) { return 2.0 + x * x + 0.5 * y + z * z * z; });
    auto a = ScalarField::sample(g, [](double x, double y, double z) { return 2.0 + std::cos(x + y + z); });
    PoincareParams pp;
    pp.cube_size = 5 * g.h;
    pp.r = 3.0;
    auto rep = small_p_ratio(u, a, pp);
    REQUIRE(rep.cubes.size() == 1);
    double su = 0, sa = 0, mu = 0, ma = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        su += std::pow(u[i], 3.0);
        sa += std::pow(a[i], -3.0);
        mu += u[i];
        ma += a[i];
    }
    const double N = double(g.size()), side = 5 * g.h;
    CHECK(rep.max_ratio == doctest::Approx(side * side * std::cbrt(su / N) * std::cbrt(sa / N)).epsilon(1e-13));
    CHECK(rep.max_mass_moment_ratio == doctest::Approx(side * side * (mu / N) / (ma / N)).epsilon(1e-13));
}

TEST_CASE("small-P ratio table on the even Gaussian at 33^3") {
    SchemeParams sp;
    Grid3 g = Grid3::from_half_extent(33, sp.default_half_extent());
    auto u = even_gaussian(g, 20.0, 1.5);
    CoulombOperator op(g, Backend::spectral);
    auto a = op.potential(u);
    PoincareParams pp;
    pp.cube_size = g.half_extent() / 4;
    pp.r = 2.0;
    auto rep = small_p_ratio(u, a, pp);
    CHECK(rep.cube_nodes == 4);
    CHECK(rep.cubes.size() == 512);
    // Golden values from the first build.
    CHECK(rep.max_ratio == doctest::Approx(0.111893).epsilon(1e-5));
    CHECK(rep.max_mass_moment_ratio == doctest::Approx(0.111877).epsilon(1e-5));
}

TEST_CASE("eps-Poincare constant: constant test function and disjoint support") {
    Grid3 g = Grid3::from_half_extent(13, 1.5);
    auto u = even_gaussian(g, 2.0, 0.5);
    CoulombOperator op(g, Backend::spectral);
    auto a = op.potential(u);

    auto one = poincare_constant(u, a, ScalarField(g, 1.0), 0.1);
    double mean = 0.0;
    for (double v : u.values) mean += v;
    mean /= double(g.size());
    CHECK(one.a_grad_phi2 == 0.0);
    CHECK(one.c_min == doctest::Approx(mean).epsilon(1e-13));

    // u vanishes on the x < 0 half; phi lives there.
    ScalarField half = u;
    for (int k = 0; k < g.n; ++k)
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i)
                if (g.coord(i) < 0.0) half[g.index(i, j, k)] = 0.0;
    auto phi = ScalarField::sample(g, [](double x, double y, double z) {
        return x < -0.5 ? std::exp(-((x + 1) * (x + 1) + y * y + z * z)) : 0.0;
    });
    CHECK(poincare_constant(half, a, phi, 0.1).c_min == 0.0);

    PoincareParams pp;
    pp.epsilon = 0.1;
    pp.family_count = 16;
    auto rep = eps_poincare_test(u, a, pp);
    CHECK(rep.tests.size() == 16);
    CHECK(rep.tests.front().kind == "constant");
    CHECK(rep.c_eps >= one.c_min);
    auto again = eps_poincare_test(u, a, pp);
    for (std::size_t i = 0; i < rep.tests.size(); ++i) CHECK(again.tests[i].c_min == rep.tests[i].c_min);

    // Fixed phi: the minimal constant grows with u.
    ScalarField u2 = u;
    for (auto& v : u2.values) v += 0.05;
    for (const auto& t : {phi, ScalarField(g, 1.0)})
        CHECK(poincare_constant(u2, a, t, 0.1).c_min >= poincare_constant(u, a, t, 0.1).c_min);
}

TEST_CASE("weighted gradient norm of a: zero, homogeneity, uniform ball") {
    {
        Grid3 g = Grid3::from_half_extent(13, 1.5);
        CoulombOperator op(g, Backend::spectral);
        auto u = even_gaussian(g, 1.0, 0.4);
        CHECK(weighted_grad_a_norm(ScalarField(g, 0.0), op.potential(ScalarField(g, 0.0)), 4.0) == 0.0);
        ScalarField u3 = u;
        for (auto& v : u3.values) v *= 3.0;
        CHECK(weighted_grad_a_norm(u3, op.potential(u3), 4.0) ==
              doctest::Approx(3.0 * weighted_grad_a_norm(u, op.potential(u), 4.0)).epsilon(1e-12));
        CHECK_THROWS_AS(weighted_grad_a_norm(u, op.potential(u), 3.0), Error);
    }

    const int n = 65;
    const double L = 2.0, R0 = 0.8, q = 4.0;
    Grid3 g = Grid3::from_half_extent(n, L);
    auto u = ball_fractions(g, R0);
    const double mass = weighted_integral(u, Weight::unit);
    for (auto& v : u.values) v /= mass;
    CoulombOperator op(g, Backend::spectral);
    const double measured = weighted_grad_a_norm(u, op.potential(u), q);

    // Shell theorem field of a unit-mass ball, integrated over the node cells.
    const int fine = 4 * n;
    const double H = 2.0 * (L + g.h / 2) / fine;
    double sum = 0.0;
    for (int k = 0; k < fine; ++k)
        for (int j = 0; j < fine; ++j)
            for (int i = 0; i < fine; ++i) {
                const double x = -L - g.h / 2 + (i + 0.5) * H;
                const double y = -L - g.h / 2 + (j + 0.5) * H;
                const double z = -L - g.h / 2 + (k + 0.5) * H;
                const double r = std::sqrt(x * x + y * y + z * z);
                const double field = r < R0 ? r / (4 * std::numbers::pi * R0 * R0 * R0)
                                            : 1.0 / (4 * std::numbers::pi * r * r);
                sum += std::pow((1.0 + r) * field, q);
            }
    const double exact = std::pow(sum * H * H * H, 1.0 / q);
    CHECK(std::abs(measured - exact) <= 1e-2 * exact);
}

TEST_CASE("Moser exponents, cutoff and degenerate q") {
    CHECK(moser_exponent(10.0 / 9.0, 3.0, 0) == doctest::Approx(10.0 / 9.0));
    CHECK(moser_exponent(10.0 / 9.0, 3.0, 2) == doctest::Approx(10.0 / 9.0 * 2.25));
    for (int n = 0; n < 8; ++n) CHECK(moser_exponent(1.05, 2.0, n) == 1.05);
    MoserParams mp;
    CHECK(mp.p * mp.q_prime() == doctest::Approx(5.0 / 3.0));
    CHECK(cutoff(0.5, 1.0, 2.0) == 1.0);
    CHECK(cutoff(2.5, 1.0, 2.0) == 0.0);
    CHECK(cutoff(1.5, 1.0, 2.0) == doctest::Approx(0.5));
    // Recorded constants: maxima of |eta'| and |eta''| on a unit transition.
    double g1 = 0.0, g2 = 0.0;
    const double d = 1e-4;
    for (double r = 1.0 + d; r < 2.0 - d; r += d) {
        g1 = std::max(g1, std::abs(cutoff(r + d, 1.0, 2.0) - cutoff(r - d, 1.0, 2.0)) / (2 * d));
        g2 = std::max(g2, std::abs(cutoff(r + d, 1.0, 2.0) - 2 * cutoff(r, 1.0, 2.0) + cutoff(r - d, 1.0, 2.0)) / (d * d));
    }
    CHECK(g1 == doctest::Approx(kCutoffGradConstant).epsilon(1e-6));
    CHECK(g2 == doctest::Approx(kCutoffLapConstant).epsilon(1e-4));

    mp.q = 10.0 / 3.0;
    CHECK_THROWS_AS(mp.validate(), Error);
    mp.q = 3.0;
    mp.p = 1.2;
    CHECK_THROWS_AS(mp.validate(), Error);
}

TEST_CASE("Moser sequence for constant fields has the closed form") {
    Grid3 g = Grid3::from_half_extent(9, 1.0);
    const double c = 0.7, ca = 1.3, tau = 0.05;
    auto tr = constant_trajectory(g, c, ca, tau, 8);
    MoserParams mp;
    mp.R = 1.0;
    auto rep = moser_sequence(tr, mp);
    const double T = 8 * tau;
    REQUIRE(rep.E.size() == 7);
    for (int n = 0; n <= 6; ++n) {
        const double P = mp.p * std::pow(mp.q / 2.0, n);
        const double Rn = 0.5 * (1.0 + std::pow(0.5, n)), Rn1 = 0.5 * (1.0 + std::pow(0.5, n + 1));
        const double Tn = T / 4.0 * (2.0 - std::pow(0.5, n));
        double eta_sum = 0.0;
        for (int k = 0; k < g.n; ++k)
            for (int j = 0; j < g.n; ++j)
                for (int i = 0; i < g.n; ++i) {
                    const double r = std::sqrt(g.coord(i) * g.coord(i) + g.coord(j) * g.coord(j) + g.coord(k) * g.coord(k));
                    double eta = 1.0;
                    if (r >= Rn) eta = 0.0;
                    else if (r > Rn1) {
                        const double s = (Rn - r) / (Rn - Rn1);
                        eta = s * s * s * (6 * s * s - 15 * s + 10);
                    }
                    eta_sum += std::pow(eta, mp.q);
                }
        const double expected = c * std::pow(ca * (T - Tn) * eta_sum * g.cell_volume(), 1.0 / P);
        CHECK(rep.E[n] == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(rep.measured_sup == c);
    CHECK(rep.alpha == doctest::Approx(2.7));

    // Scaling the cutoff by lambda multiplies E_n by lambda^{(q/p)(2/q)^n}.
    mp.eta_scale = 1.7;
    auto scaled = moser_sequence(tr, mp);
    for (int n = 0; n <= 6; ++n)
        CHECK(scaled.E[n] == doctest::Approx(rep.E[n] * std::pow(1.7, mp.q / mp.p * std::pow(2.0 / mp.q, n))).epsilon(1e-12));
}

TEST_CASE("Moser sequence reports the last representable level") {
    Grid3 g = Grid3::from_half_extent(5, 1.0);
    auto tr = constant_trajectory(g, 1e200, 1.0, 0.1, 4);
    try {
        moser_sequence(tr, MoserParams{});
        FAIL("expected ExponentOverflow");
    } catch (const ExponentOverflow& e) {
        CHECK(e.last_valid_n == 0);
    }
}

TEST_CASE("reference run: Moser bound, Poincare baselines") {
    auto tr = reference_trajectory();
    MoserParams mp;
    auto rep = moser_sequence(tr, mp);
    REQUIRE(rep.E.size() == 7);
    for (double e : rep.E) {
        CHECK(std::isfinite(e));
        CHECK(e >= 0.0);
    }
    for (double b : rep.level_bounds) CHECK(rep.measured_sup <= b);
    CHECK(rep.margin > 0.0);

    PoincareParams pp;
    pp.epsilon = 0.1;
    pp.family_count = 64;
    const auto& last = tr.back();
    auto eps = eps_poincare_test(last.u, last.a, pp);
    // Golden value from the first build.
    CHECK(eps.c_eps == doctest::Approx(0.252591).epsilon(1e-5));

    // Mass-moment ratio stays bounded along the run.
    pp.cube_size = 4 * last.u.grid.h;
    double worst = 0.0;
    for (const auto& s : tr) worst = std::max(worst, small_p_ratio(s.u, s.a, pp).max_mass_moment_ratio);
    CHECK(worst < 1.0);
}
