#include "landau/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "landau/coulomb.hpp"
#include "landau/diagnostics.hpp"
#include "landau/errors.hpp"
#include "landau/scheme.hpp"

namespace landau {

namespace {

using Clock = std::chrono::steady_clock;

double gaussian(double x, double y, double z, double mass, double sigma) {
    const double r2 = x * x + y * y + z * z;
    return mass * std::exp(-r2 / (2 * sigma * sigma)) / std::pow(2 * std::numbers::pi * sigma * sigma, 1.5);
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return den > 0 ? num / den : num;
}

template <class F>
CheckResult timed(F f) {
    const auto t0 = Clock::now();
    CheckResult r = f();
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return r;
}

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

}  // namespace

CheckResult check_ball_potential(int n, double kernel_perturbation) {
    return timed([&] {
        const double L = 2.0, R0 = 0.8;
        Grid3 g = Grid3::from_half_extent(n, L);
        const int sub = 8;
        auto u = ScalarField::sample(g, [&](double x, double y, double z) {
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
        const double m = weighted_integral(u, Weight::unit);
        CoulombOperator op(g, Backend::spectral, kernel_perturbation);
        const auto a = op.potential(u);
        const auto ga = op.grad_potential(u);
        double pot = 0.0, field = 0.0;
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const double x = g.coord(i), y = g.coord(j), z = g.coord(k);
                    const double r = std::sqrt(x * x + y * y + z * z);
                    if (r < R0) continue;
                    const auto idx = g.index(i, j, k);
                    const double exact = m / (4 * std::numbers::pi * r);
                    pot = std::max(pot, std::abs(a[idx] - exact) / exact);
                    if (r < R0 + g.h) continue;
                    const double gm = std::sqrt(ga.comp[0][idx] * ga.comp[0][idx] + ga.comp[1][idx] * ga.comp[1][idx] +
                                                ga.comp[2][idx] * ga.comp[2][idx]);
                    field = std::max(field, std::abs(gm - exact / r) / (exact / r));
                }
        CheckResult c;
        c.name = "ball_exterior_potential";
        c.value = pot;
        c.tolerance = 1e-3;
        c.pass = pot <= 1e-3 && field <= 5e-3;
        c.detail = fmt("n=%.0f, field error %.3g (tolerance 5e-3)", n, field);
        return c;
    });
}

CheckResult check_gaussian_potential(int n, double kernel_perturbation) {
    return timed([&] {
        const double sigma = 0.5, mass = 1.0;
        Grid3 g = Grid3::from_half_extent(n, 4 * sigma);
        auto u = ScalarField::sample(g, [&](double x, double y, double z) { return gaussian(x, y, z, mass, sigma); });
        CoulombOperator op(g, Backend::spectral, kernel_perturbation);
        const auto a = op.potential(u);
        double err = 0.0;
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const double x = g.coord(i), y = g.coord(j), z = g.coord(k);
                    const double r = std::sqrt(x * x + y * y + z * z);
                    const double exact = r == 0.0 ? mass / (4 * std::numbers::pi) * std::sqrt(2.0 / std::numbers::pi) / sigma
                                                  : mass * std::erf(r / (sigma * std::sqrt(2.0))) / (4 * std::numbers::pi * r);
                    err = std::max(err, std::abs(a[g.index(i, j, k)] - exact) / exact);
                }
        CheckResult c;
        c.name = "gaussian_erf_potential";
        c.value = err;
        c.tolerance = 1e-3;
        c.pass = err <= c.tolerance;
        c.detail = fmt("n=%.0f, h/sigma=%.3g", n, g.h / sigma);
        return c;
    });
}

CheckResult check_backend_equivalence(int n, double kernel_perturbation) {
    return timed([&] {
        const double sigma = 0.6;
        Grid3 g = Grid3::from_half_extent(n, 6 * sigma);
        auto u = symmetrize_even(ScalarField::sample(
            g, [&](double x, double y, double z) { return gaussian(x - 0.3, y, z, 2.0, sigma); }));
        CoulombOperator direct(g, Backend::direct, kernel_perturbation);
        CoulombOperator spectral(g, Backend::spectral, kernel_perturbation);
        double err = max_rel_diff(spectral.potential(u).values, direct.potential(u).values);
        VectorField v(g);
        for (int d = 0; d < 3; ++d)
            for (std::size_t i = 0; i < g.size(); ++i) v.comp[d][i] = u[i] * (d + 1) * std::sin(double(i));
        const auto bs = spectral.vector_potential(v), bd = direct.vector_potential(v);
        const auto gs = spectral.grad_potential(u), gd = direct.grad_potential(u);
        for (int d = 0; d < 3; ++d) {
            err = std::max(err, max_rel_diff(bs.comp[d], bd.comp[d]));
            err = std::max(err, max_rel_diff(gs.comp[d], gd.comp[d]));
        }
        CheckResult c;
        c.name = "backend_equivalence";
        c.value = err;
        c.tolerance = 1e-10;
        c.pass = err <= c.tolerance;
        c.detail = fmt("n=%.0f, potential, gradient and vector potential", n);
        return c;
    });
}

CheckResult check_dissipation(int n, int cases, unsigned long long seed) {
    return timed([&] {
        Grid3 g = Grid3::from_half_extent(n, 1.5);
        CoulombOperator spectral(g, Backend::spectral), direct(g, Backend::direct);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        double worst = 0.0, most_negative = 0.0;
        for (int t = 0; t < cases; ++t) {
            double c[5][5];
            for (auto& m : c)
                for (auto& v : m) v = U(rng);
            const double sigma = 0.45 * (1.5 + U(rng));
            auto u = ScalarField::sample(g, [&](double x, double y, double z) {
                double s = 0.0;
                for (auto& m : c)
                    s += 0.3 * m[0] * std::sin(std::numbers::pi / 1.5 * (m[1] * x + m[2] * y + m[3] * z) + 3 * m[4]);
                return std::exp(s - (x * x + y * y + z * z) / (2 * sigma * sigma));
            });
            const double ds = dissipation(u, direct, DissipationMethod::double_sum);
            const double cv = dissipation(u, spectral, DissipationMethod::convolution);
            const double scale = dissipation_scale(u, spectral);
            worst = std::max(worst, std::abs(ds - cv) / std::abs(ds));
            most_negative = std::min({most_negative, ds / scale, cv / scale});
        }
        CheckResult c;
        c.name = "dissipation_double_sum_vs_convolution";
        c.value = worst;
        c.tolerance = 1e-8;
        c.pass = worst <= c.tolerance && most_negative >= -1e-10;
        c.detail = fmt("n=%.0f, most negative D/scale %.3g", n, most_negative);
        return c;
    });
}

CheckResult check_parity(int n) {
    return timed([&] {
        SchemeParams p;
        Grid3 g = Grid3::from_half_extent(n, p.default_half_extent());
        CoulombOperator op(g, Backend::spectral);
        auto u0 = symmetrize_even(
            ScalarField::sample(g, [&](double x, double y, double z) { return gaussian(x - 0.2, y, z, 20.0, 1.5); }));
        auto s0 = make_initial_state(u0, op, p);
        auto s1 = implicit_step(s0, p, op);
        const double defect = parity_defect(s1.u) / s1.u.max();
        const double odd = odd_integral_norm(s1.u) / (moments(s1.u).m / g.half_extent());
        CheckResult c;
        c.name = "parity_preservation";
        c.value = defect;
        c.tolerance = 1e-12;
        c.pass = defect <= 1e-12 && odd <= 1e-10;
        c.detail = fmt("n=%.0f, odd integral relative to m/L %.3g (tolerance 1e-10)", n, odd);
        return c;
    });
}

CheckResult check_manufactured(int n, unsigned long long seed) {
    return timed([&] {
        SchemeParams p;
        Grid3 g = Grid3::from_half_extent(n, 1.2);
        CoulombOperator op(g, Backend::spectral);
        auto u0 = symmetrize_even(
            ScalarField::sample(g, [&](double x, double y, double z) { return gaussian(x, y, z, 5.0, 0.8); }));
        auto prev = make_initial_state(u0, op, p);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        double c[4][5];
        for (auto& m : c)
            for (auto& v : m) v = U(rng);
        const double L = g.half_extent();
        auto w_star = ScalarField::sample(g, [&](double x, double y, double z) {
            double s = 0.0;
            for (auto& m : c) s += 0.05 * m[0] * std::cos(std::numbers::pi / L * (m[1] * x + m[2] * y + m[3] * z) + 3 * m[4]);
            return s;
        });
        for (std::size_t i = 0; i < g.size(); ++i) w_star[i] += prev.w[i];
        const auto f = full_residual(prev, w_star, op, p);
        CheckResult r;
        r.name = "manufactured_solution";
        r.tolerance = p.newton_tol;
        try {
            auto next = implicit_step_with_source(prev, p, op, f);
            for (std::size_t i = 0; i < g.size(); ++i) r.value = std::max(r.value, std::abs(next.w[i] - w_star[i]));
            r.pass = r.value <= r.tolerance;
            r.detail = fmt("n=%.0f, final residual %.3g", n, next.stats.residual);
        } catch (const Error& e) {
            r.pass = false;
            r.value = INFINITY;
            r.detail = e.what();
        }
        return r;
    });
}

bool VerifyReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string VerifyReport::text() const {
    std::ostringstream o;
    char buf[256];
    for (const auto& c : checks) {
        std::snprintf(buf, sizeof buf, "%-40s %s  error %.3e  tolerance %.1e  %.2fs  %s\n", c.name.c_str(),
                      c.pass ? "PASS" : "FAIL", c.value, c.tolerance, c.seconds, c.detail.c_str());
        o << buf;
    }
    std::snprintf(buf, sizeof buf, "%s in %.2fs\n", ok() ? "all checks passed" : "verification FAILED", seconds);
    o << buf;
    return o.str();
}

VerifyReport verify(const VerifyOptions& opt) {
    if (opt.size < 5 || opt.size % 2 == 0) throw DimensionError("verify size must be odd and at least 5");
    if (opt.size > 25) throw GridTooLarge("verify size is limited to 25 (direct summation)");
    const auto t0 = Clock::now();
    VerifyReport rep;
    rep.checks.push_back(check_ball_potential(opt.closed_form_size, opt.kernel_perturbation));
    rep.checks.push_back(check_gaussian_potential(opt.closed_form_size, opt.kernel_perturbation));
    rep.checks.push_back(check_backend_equivalence(opt.size, opt.kernel_perturbation));
    rep.checks.push_back(check_dissipation(std::min(opt.size, 13), opt.dissipation_cases, opt.seed));
    rep.checks.push_back(check_parity(opt.size));
    rep.checks.push_back(check_manufactured(opt.size, opt.seed));
    rep.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return rep;
}

}  // namespace landau
