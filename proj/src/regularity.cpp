#include "landau/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "landau/errors.hpp"

namespace landau {

namespace {

// Uniform double in [0, 1) from a 64-bit draw; fixed across standard libraries.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double radius(const Grid3& g, int i, int j, int k) {
    double x = g.coord(i), y = g.coord(j), z = g.coord(k);
    return std::sqrt(x * x + y * y + z * z);
}

}  // namespace

void PoincareParams::validate(const Grid3& g) const {
    if (!(cube_size >= 2.0 * g.h))
        throw CubeTooSmall("cube size " + std::to_string(cube_size) + " below two grid spacings");
    if (cube_size > 2.0 * g.half_extent() + g.h)
        throw DimensionError("cube size exceeds the domain");
    if (!(r > 1.0)) throw Error("averaging exponent must exceed 1");
    if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
    if (family_count < 1) throw Error("family count must be positive");
    if (!(smoothness > 0.0)) throw Error("smoothness must be positive");
}

PoincareReport small_p_ratio(const ScalarField& u, const ScalarField& a, const PoincareParams& params) {
    const Grid3& g = u.grid;
    require_same_grid(g, a.grid, "small_p_ratio");
    params.validate(g);
    for (double v : a.values)
        if (!(v > 0.0)) throw Error("small_p_ratio needs a > 0 on every node");

    const int b = std::max(2, static_cast<int>(std::lround(params.cube_size / g.h)));
    const int per_axis = g.n / b;
    if (per_axis < 1) throw CubeTooSmall("cube does not fit in the grid");
    const int offset = (g.n - per_axis * b) / 2;
    const double side = b * g.h;
    const double area = std::pow(side * side * side, 2.0 / 3.0);
    const double r = params.r;
    const double count = static_cast<double>(b) * b * b;

    PoincareReport rep;
    rep.cube_nodes = b;
    rep.epsilon = params.epsilon;
    for (int ck = 0; ck < per_axis; ++ck)
        for (int cj = 0; cj < per_axis; ++cj)
            for (int ci = 0; ci < per_axis; ++ci) {
                std::array<int, 3> o{offset + ci * b, offset + cj * b, offset + ck * b};
                double ur = 0, ainv = 0, um = 0, am = 0;
                for (int k = o[2]; k < o[2] + b; ++k)
                    for (int j = o[1]; j < o[1] + b; ++j)
                        for (int i = o[0]; i < o[0] + b; ++i) {
                            std::size_t idx = g.index(i, j, k);
                            double uv = std::max(u[idx], 0.0);
                            ur += std::pow(uv, r);
                            ainv += std::pow(a[idx], -r);
                            um += uv;
                            am += a[idx];
                        }
                CubeRatio c;
                c.origin = o;
                if (ur > 0.0)
                    c.ratio = area * std::pow(ur / count, 1.0 / r) * std::pow(ainv / count, 1.0 / r);
                if (um > 0.0) c.mass_moment_ratio = area * (um / count) / (am / count);
                rep.max_ratio = std::max(rep.max_ratio, c.ratio);
                rep.max_mass_moment_ratio = std::max(rep.max_mass_moment_ratio, c.mass_moment_ratio);
                rep.cubes.push_back(c);
            }
    return rep;
}

TestFunctionResult poincare_constant(const ScalarField& u, const ScalarField& a, const ScalarField& phi,
                                     double epsilon, std::string kind) {
    const Grid3& g = u.grid;
    require_same_grid(g, a.grid, "poincare_constant");
    require_same_grid(g, phi.grid, "poincare_constant");
    VectorField gp = gradient(phi);
    const double hv = g.cell_volume();
    TestFunctionResult t;
    t.kind = std::move(kind);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double p2 = phi[i] * phi[i];
        double gg = gp.comp[0][i] * gp.comp[0][i] + gp.comp[1][i] * gp.comp[1][i] + gp.comp[2][i] * gp.comp[2][i];
        t.u_phi2 += u[i] * p2 * hv;
        t.a_grad_phi2 += a[i] * gg * hv;
        t.phi2 += p2 * hv;
    }
    if (t.phi2 > 0.0) t.c_min = std::max(0.0, t.u_phi2 - epsilon * t.a_grad_phi2) / t.phi2;
    return t;
}

PoincareReport eps_poincare_test(const ScalarField& u, const ScalarField& a, const PoincareParams& params) {
    const Grid3& g = u.grid;
    require_same_grid(g, a.grid, "eps_poincare_test");
    if (!(params.epsilon > 0.0)) throw Error("epsilon must be positive");
    if (params.family_count < 1) throw Error("family count must be positive");

    PoincareReport rep;
    rep.epsilon = params.epsilon;
    const double L = g.half_extent();
    std::mt19937_64 rng(params.seed);

    auto add = [&](const ScalarField& phi, const char* kind) {
        rep.tests.push_back(poincare_constant(u, a, phi, params.epsilon, kind));
        rep.c_eps = std::max(rep.c_eps, rep.tests.back().c_min);
    };

    add(ScalarField(g, 1.0), "constant");
    for (double p : {1.0, 2.0, 3.0}) {
        if (static_cast<int>(rep.tests.size()) >= params.family_count) break;
        ScalarField phi(g);
        for (std::size_t i = 0; i < g.size(); ++i) phi[i] = std::pow(std::max(u[i], 0.0), p / 2.0);
        add(phi, "density_power");
    }
    while (static_cast<int>(rep.tests.size()) < params.family_count) {
        double cx = uniform(rng, -L / 2, L / 2), cy = uniform(rng, -L / 2, L / 2), cz = uniform(rng, -L / 2, L / 2);
        double width = params.smoothness * L * uniform(rng, 0.5, 1.5);
        bool wave = rep.tests.size() % 2 == 1;
        double kmax = M_PI / (4.0 * g.h);
        double kx = uniform(rng, -kmax, kmax), ky = uniform(rng, -kmax, kmax), kz = uniform(rng, -kmax, kmax);
        double phase = uniform(rng, 0.0, 2.0 * M_PI);
        ScalarField phi = ScalarField::sample(g, [&](double x, double y, double z) {
            double dx = x - cx, dy = y - cy, dz = z - cz;
            double bump = std::exp(-(dx * dx + dy * dy + dz * dz) / (2.0 * width * width));
            return wave ? bump * std::cos(kx * x + ky * y + kz * z + phase) : bump;
        });
        add(phi, wave ? "plane_wave_bump" : "bump");
    }
    return rep;
}

double weighted_grad_a_norm(const ScalarField& u, const ScalarField& a, double q) {
    const Grid3& g = a.grid;
    require_same_grid(u.grid, g, "weighted_grad_a_norm");
    if (!(q > 3.0)) throw Error("weighted gradient norm needs q > 3");
    VectorField ga = gradient(a);
    double sum = 0.0;
    for (int k = 0; k < g.n; ++k)
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) {
                std::size_t idx = g.index(i, j, k);
                double gg = std::sqrt(ga.comp[0][idx] * ga.comp[0][idx] + ga.comp[1][idx] * ga.comp[1][idx] +
                                      ga.comp[2][idx] * ga.comp[2][idx]);
                sum += std::pow((1.0 + radius(g, i, j, k)) * gg, q);
            }
    return std::pow(sum * g.cell_volume(), 1.0 / q);
}

void MoserParams::validate() const {
    if (!(p > 1.0 && p <= 10.0 / 9.0 + 1e-15)) throw Error("Moser exponent p must lie in (1, 10/9]");
    if (!(q > 2.0 && q < 10.0 / 3.0)) throw Error("Moser exponent q must lie in (2, 10/3)");
    if (R < 0.0 || T < 0.0) throw Error("Moser radius and horizon must be nonnegative");
    if (n_max < 0) throw Error("n_max must be nonnegative");
    if (!(eta_scale > 0.0)) throw Error("cutoff scale must be positive");
}

double moser_exponent(double p, double q, int n) { return p * std::pow(q / 2.0, n); }

double cutoff(double r, double inner, double outer) {
    if (r <= inner) return 1.0;
    if (r >= outer) return 0.0;
    double s = (outer - r) / (outer - inner);
    return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

MoserReport moser_sequence(const std::vector<StepState>& trajectory, const MoserParams& params) {
    params.validate();
    if (trajectory.size() < 2) throw Error("Moser sequence needs at least two trajectory states");
    const Grid3& g = trajectory.front().u.grid;
    for (const auto& s : trajectory) {
        require_same_grid(g, s.u.grid, "moser_sequence");
        require_same_grid(g, s.a.grid, "moser_sequence");
    }

    MoserReport rep;
    rep.p = params.p;
    rep.q = params.q;
    rep.R = params.R > 0.0 ? params.R : g.half_extent();
    rep.T = params.T > 0.0 ? params.T : trajectory.back().t;
    const double p = params.p, q = params.q, R = rep.R, T = rep.T;
    const double hv = g.cell_volume();
    const int N = params.n_max;

    // Radii of the nodes, reused for every level.
    std::vector<double> rad(g.size());
    for (int k = 0; k < g.n; ++k)
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i) rad[g.index(i, j, k)] = radius(g, i, j, k);

    double umax = 0.0;
    for (const auto& s : trajectory) umax = std::max(umax, s.u.max());
    const double log_max = std::log(std::numeric_limits<double>::max());
    const double log_min = std::log(std::numeric_limits<double>::min());

    for (int n = 0; n <= N + 1; ++n) {
        const double P = moser_exponent(p, q, n);
        // u^P must be representable at the largest density value.
        if (umax > 0.0 && (P * std::log(umax) > log_max || P * std::log(umax) < log_min))
            throw ExponentOverflow("u^" + std::to_string(P) + " leaves the double range", n - 1);
        const double Rn = 0.5 * R * (1.0 + std::ldexp(1.0, -n));
        const double Rn1 = 0.5 * R * (1.0 + std::ldexp(1.0, -(n + 1)));
        const double Tn = 0.25 * T * (2.0 - std::ldexp(1.0, -n));

        // Scaled by umax so small densities do not underflow.
        double sum = 0.0;
        for (std::size_t s = 1; s < trajectory.size(); ++s) {
            double t0 = trajectory[s - 1].t, t1 = trajectory[s].t;
            double overlap = std::min(t1, T) - std::max(t0, Tn);
            if (overlap <= 0.0) continue;
            const auto& u = trajectory[s].u;
            const auto& a = trajectory[s].a;
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                double eta = params.eta_scale * cutoff(rad[i], Rn1, Rn);
                if (eta == 0.0 || u[i] <= 0.0) continue;
                acc += a[i] * std::pow(eta, q) * std::pow(u[i] / umax, P);
            }
            sum += overlap * acc * hv;
        }
        if (n <= N) {
            rep.exponents.push_back(P);
            rep.radii.push_back(Rn);
            rep.times.push_back(Tn);
        }
        rep.E.push_back(umax * std::pow(sum, 1.0 / P));
    }

    const double time_factor = 1.0 / T + 1.0;
    rep.C_R = 1.0;
    for (int n = 0; n < N + 1; ++n) {
        double c = rep.E[n] > 0.0
                       ? std::pow(rep.E[n + 1] / rep.E[n], rep.exponents[n]) / (std::ldexp(1.0, n) * time_factor)
                       : 0.0;
        rep.recursion_constants.push_back(c);
        rep.C_R = std::max(rep.C_R, c);
    }
    rep.E.resize(N + 1);

    // Tail sums over j >= n of 1/P_j = rho^j / p and j/P_j, rho = 2/q.
    const double rho = 2.0 / q;
    rep.alpha = 1.0 / (p * (1.0 - rho));
    rep.geometric_sum = rho / ((1.0 - rho) * (1.0 - rho)) / p;
    rep.margin = std::numeric_limits<double>::infinity();
    for (int n = 0; n <= N; ++n) {
        double rn = std::pow(rho, n);
        double s0 = rn / (p * (1.0 - rho));
        double s1 = rn * (n * (1.0 - rho) + rho) / ((1.0 - rho) * (1.0 - rho)) / p;
        rep.level_bounds.push_back(rep.E[n] * std::pow(2.0, s1) * std::pow(rep.C_R * time_factor, s0));
    }
    rep.predicted_bound = rep.level_bounds.front();
    rep.C_of_R = rep.predicted_bound / std::pow(time_factor, rep.alpha);

    for (std::size_t s = 1; s < trajectory.size(); ++s) {
        double t0 = trajectory[s - 1].t, t1 = trajectory[s].t;
        if (t1 <= T / 2 || t0 >= T) continue;
        const auto& u = trajectory[s].u;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (rad[i] <= R / 2) rep.measured_sup = std::max(rep.measured_sup, u[i]);
    }
    for (double b : rep.level_bounds) rep.margin = std::min(rep.margin, b - rep.measured_sup);

    const double tau = trajectory[1].t - trajectory[0].t;
    for (int i = 1; i <= N; ++i) rep.tau_remainder += std::pow(tau, 1.0 / moser_exponent(p, q, i));
    return rep;
}

}  // namespace landau
