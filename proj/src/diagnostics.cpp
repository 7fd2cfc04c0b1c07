#include "landau/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "landau/errors.hpp"

namespace landau {

Moments moments(const ScalarField& u) {
    Moments mo;
    mo.m = weighted_integral(u, Weight::unit);
    if (mo.m == 0.0) throw ZeroMass("density has zero mass");
    mo.E = weighted_integral(u, Weight::second_moment);
    mo.R = std::min(std::sqrt(2.0 * mo.E / mo.m), u.grid.half_extent());
    return mo;
}

Entropy entropy(const ScalarField& u) {
    double h = 0.0, hp = 0.0;
    for (double v : u.values) {
        if (v <= 0.0) continue;
        const double l = std::log(v);
        h += v * (l - 1.0);
        hp += v * l;
    }
    const double vol = u.grid.cell_volume();
    return {h * vol, hp * vol};
}

namespace {

VectorField log_gradient(const ScalarField& u) {
    ScalarField w(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) w[i] = std::log(u[i]);
    return gradient(w);
}

// Calls f(idx, x, y, z) for every node.
template <class F>
void for_each_node(const Grid3& g, F f) {
    std::size_t idx = 0;
    for (int k = 0; k < g.n; ++k)
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i, ++idx) f(idx, g.coord(i), g.coord(j), g.coord(k));
}

}  // namespace

double dissipation_scale(const ScalarField& u, const CoulombOperator& op) {
    const VectorField G = log_gradient(u);
    const ScalarField a = op.potential(u);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double g2 = G.comp[0][i] * G.comp[0][i] + G.comp[1][i] * G.comp[1][i] + G.comp[2][i] * G.comp[2][i];
        s += u[i] * g2 * a[i];
    }
    return s * u.grid.cell_volume();
}

double dissipation(const ScalarField& u, const CoulombOperator& op, DissipationMethod method) {
    require_same_grid(op.grid(), u.grid, "dissipation");
    const Grid3& g = u.grid;
    const VectorField G = log_gradient(u);
    const double h3 = g.cell_volume();
    if (method == DissipationMethod::double_sum) {
        if (static_cast<long>(g.size()) > kDoubleSumMaxNodes)
            throw GridTooLarge("double-sum dissipation is limited to 25^3 nodes");
        double total = 0.0;
        for (int k = 0; k < g.n; ++k)
            for (int j = 0; j < g.n; ++j)
                for (int i = 0; i < g.n; ++i) {
                    const std::size_t x = g.index(i, j, k);
                    double row = 0.0;
                    for (int kk = 0; kk < g.n; ++kk)
                        for (int jj = 0; jj < g.n; ++jj)
                            for (int ii = 0; ii < g.n; ++ii) {
                                const std::size_t y = g.index(ii, jj, kk);
                                double d2 = 0.0;
                                for (int c = 0; c < 3; ++c) {
                                    const double d = G.comp[c][x] - G.comp[c][y];
                                    d2 += d * d;
                                }
                                row += op.kernel(i - ii, j - jj, k - kk) * u[y] * d2;
                            }
                    total += u[x] * row;
                }
        return 0.5 * total * h3 * h3;
    }
    const ScalarField a = op.potential(u);
    VectorField ug(g);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < g.size(); ++i) ug.comp[c][i] = u[i] * G.comp[c][i];
    const VectorField b = op.vector_potential(ug);
    double first = 0.0, second = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double g2 = 0.0, gb = 0.0;
        for (int c = 0; c < 3; ++c) {
            g2 += G.comp[c][i] * G.comp[c][i];
            gb += G.comp[c][i] * b.comp[c][i];
        }
        first += u[i] * g2 * a[i];
        second += u[i] * gb;
    }
    return (first - second) * h3;
}

double fisher_weighted(const ScalarField& u) {
    ScalarField s(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) s[i] = std::sqrt(std::max(u[i], 0.0));
    const VectorField G = gradient(s);
    ScalarField g2(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i)
        g2[i] = G.comp[0][i] * G.comp[0][i] + G.comp[1][i] * G.comp[1][i] + G.comp[2][i] * G.comp[2][i];
    return weighted_integral(g2, Weight::gamma);
}

double odd_integral_norm(const ScalarField& u) {
    const VectorField G = gradient(u);
    double n2 = 0.0;
    for (int c = 0; c < 3; ++c) n2 += std::pow(weighted_integral(G.component(c), Weight::gamma), 2);
    return std::sqrt(n2);
}

double mass_inside(const ScalarField& u, double R) {
    double s = 0.0;
    for_each_node(u.grid, [&](std::size_t i, double x, double y, double z) {
        if (x * x + y * y + z * z < R * R) s += u[i];
    });
    return s * u.grid.cell_volume();
}

const AuditResult* DiagnosticsRecord::audit(const std::string& name) const {
    for (const auto& a : audits)
        if (a.name == name) return &a;
    return nullptr;
}

namespace {

AuditResult make_audit(std::string name, double lhs, double rhs) {
    AuditResult a;
    a.name = std::move(name);
    a.lhs = lhs;
    a.rhs = rhs;
    a.slack = rhs - lhs;
    a.pass = a.slack >= 0.0;
    return a;
}

// Fields of the record that depend on a single state.
void static_part(DiagnosticsRecord& r, const StepState& s, const CoulombOperator& op, const AuditConfig& cfg) {
    const ScalarField& u = s.u;
    const Grid3& g = u.grid;
    const double h3 = g.cell_volume();
    const double L = g.half_extent();
    r.step = s.k;
    r.t = s.t;
    const Moments mo = moments(u);
    r.m = mo.m;
    r.E = mo.E;
    r.R = mo.R;
    const Entropy en = entropy(u);
    r.H = en.H;
    r.H_plain = en.H_plain;
    r.D = dissipation(u, op, cfg.method);
    r.fisher = fisher_weighted(u);
    r.min_u = u.min();
    r.max_u = u.max();
    r.parity_defect = parity_defect(u) / r.max_u;
    r.odd_integral = odd_integral_norm(u);
    // R is capped by the circumscribed radius sqrt(3) L of the cube, so the
    // ball |x| < R still covers the domain when the cap is active.
    r.R_audit = std::min(std::sqrt(2.0 * r.E / r.m), std::sqrt(3.0) * L);
    r.mass_inside_R = mass_inside(u, r.R_audit);

    // Lower bound on a by the mass inside the radius R.
    const double four_pi = 4.0 * std::numbers::pi;
    double amin = INFINITY;
    for_each_node(g, [&](std::size_t i, double x, double y, double z) {
        amin = std::min(amin, four_pi * s.a[i] * (r.R_audit + std::sqrt(x * x + y * y + z * z)));
    });
    r.a_min_margin = amin - 0.5 * r.m;

    // Local norms of a and grad a on the reference ball.
    const double rr = cfg.reference_radius_fraction * L;
    const VectorField ga = op.grad_potential(u);
    double a3 = 0.0, ga32 = 0.0;
    for_each_node(g, [&](std::size_t i, double x, double y, double z) {
        if (x * x + y * y + z * z >= rr * rr) return;
        a3 += std::pow(std::abs(s.a[i]), 3.0);
        const double gm = std::sqrt(ga.comp[0][i] * ga.comp[0][i] + ga.comp[1][i] * ga.comp[1][i] +
                                    ga.comp[2][i] * ga.comp[2][i]);
        ga32 += std::pow(gm, 1.5);
    });
    r.a_L3_local = std::cbrt(a3 * h3);
    r.grad_a_L32_local = std::pow(ga32 * h3, 2.0 / 3.0);

    r.outer_iterations = s.stats.outer_iterations;
    r.newton_iterations = s.stats.newton_iterations;
    r.residual = s.stats.residual;
    r.clamp_count = s.stats.clamp_count;
    r.regularization_mass = s.stats.regularization_mass;
    r.w4 = s.stats.w4_term;
    r.scheme_dissipation = s.stats.scheme_dissipation;

    if (cfg.odd_integral) r.audits.push_back(make_audit("odd_integral", r.odd_integral, 1e-10 * r.m / L));

    if (cfg.entropy_lower) {
        // Explicit Hoelder chain: with beta = (1 - eps)/eps,
        //   -sum_{u<1} u log u <= (2/(e eps)) sqrt(m) [(m+E)^(1-eps) S^eps]^(1/2),
        //   S = sum (1+|x|^2)^(-beta) h^3,
        // using s^(eps/2) log(1/s) <= 2/(e eps) on (0,1).
        const double eps = cfg.epsilon;
        const double beta = (1.0 - eps) / eps;
        double S = 0.0, low = 0.0;
        for_each_node(g, [&](std::size_t i, double x, double y, double z) {
            S += std::pow(1.0 + x * x + y * y + z * z, -beta);
            if (u[i] < 1.0 && u[i] > 0.0) low -= u[i] * std::log(u[i]);
        });
        S *= h3;
        low *= h3;
        const double bound =
            2.0 / (std::numbers::e * eps) * std::sqrt(r.m) * std::sqrt(std::pow(r.m + r.E, 1.0 - eps) * std::pow(S, eps));
        r.c_eps = bound / std::pow(1.0 + r.E, (1.0 - eps) / 2.0);
        // -H_plain <= -sum_{u<1} u log u holds termwise; audit the whole chain.
        AuditResult a = make_audit("entropy_lower", -r.H_plain, bound);
        if (-r.H_plain > low * (1.0 + 1e-14) + 1e-300) a.pass = false;
        r.audits.push_back(a);
    }

    if (cfg.a_lower) {
        r.audits.push_back(make_audit("half_mass_radius", 0.5 * r.m, r.mass_inside_R));
        r.audits.push_back(make_audit("a_lower", 0.5 * r.m, amin));
    }
}

}  // namespace

DiagnosticsRecord initial_record(const StepState& s, const CoulombOperator& op, const AuditConfig& cfg) {
    DiagnosticsRecord r;
    static_part(r, s, op, cfg);
    return r;
}

DiagnosticsRecord audit_step(const DiagnosticsRecord& prev_rec, const StepState& prev, const StepState& cur,
                             const CoulombOperator& op, const SchemeParams& params, const AuditConfig& cfg) {
    if (cur.k != prev.k + 1) throw Error("audit_step needs consecutive states");
    DiagnosticsRecord r;
    static_part(r, cur, op, cfg);
    const Grid3& g = cur.u.grid;
    const double h3 = g.cell_volume();
    const double tau = params.tau;

    // Running space-time integrals, u piecewise constant on ((k-1) tau, k tau].
    double l3 = 0.0, l53 = 0.0;
    for_each_node(g, [&](std::size_t i, double x, double y, double z) {
        const double gam = 1.0 / (1.0 + std::sqrt(x * x + y * y + z * z));
        l3 += std::pow(cur.u[i] * gam, 3.0);
        l53 += std::pow(gam, -1.0 / 3.0) * std::pow(cur.u[i], 5.0 / 3.0);
    });
    r.L1L3_running = prev_rec.L1L3_running + tau * std::cbrt(l3 * h3);
    r.L53_running = prev_rec.L53_running + tau * l53 * h3;

    if (cfg.entropy_chain) {
        // D_tau H + tau W4 + (c_low * 4 F - odd^2) / (4 pi) <= 0 with
        // c_low = (m/2)/(1+R) bounding the gamma-weighted mass from below.
        const double c_low = 0.5 * r.m / (1.0 + r.R_audit);
        const double lower = (c_low * 4.0 * r.fisher - r.odd_integral * r.odd_integral) / (4.0 * std::numbers::pi);
        const double lhs = (r.H - prev_rec.H) / tau + tau * r.w4 + lower;
        AuditResult a = make_audit("entropy_chain", lhs, 0.0);
        // The weighted mass bound itself must hold.
        if (weighted_integral(cur.u, Weight::gamma) < r.mass_inside_R / (1.0 + r.R_audit)) a.pass = false;
        r.audits.push_back(a);
    }

    if (cfg.second_moment) {
        // D_tau E <= C_reg + 4 sum a u h^3, where C_reg bounds the two
        // regularization terms tested against |x|^2.
        double w3x = 0.0, au = 0.0;
        for_each_node(g, [&](std::size_t i, double x, double y, double z) {
            w3x += (x * x + y * y + z * z) * std::pow(cur.w[i], 3.0);
            au += cur.a[i] * cur.u[i];
        });
        w3x *= h3;
        au *= h3;
        const FaceValues gsq = face_grad_sq(cur.w);
        const FaceValues gw = face_difference(cur.w);
        double phi_term = 0.0;
        for (int d = 0; d < 3; ++d) {
            const FaceLattice fl = face_lattice(g, d);
            std::size_t f = 0;
            for (int k = 0; k < fl.dims[2]; ++k)
                for (int j = 0; j < fl.dims[1]; ++j)
                    for (int i = 0; i < fl.dims[0]; ++i, ++f) {
                        const int pos = d == 0 ? i : d == 1 ? j : k;
                        const double xf = g.coord(pos) + 0.5 * g.h;
                        phi_term += gsq[d][f] * gw[d][f] * 2.0 * xf;
                    }
        }
        phi_term *= h3;
        const double c_reg = tau * std::abs(w3x) + tau * std::abs(phi_term);
        const double lhs = (r.E - prev_rec.E) / tau;
        r.audits.push_back(make_audit("second_moment_step", lhs, c_reg + 4.0 * au));
        r.second_moment_literal_slack = c_reg + 2.0 * au - lhs;
    }
    return r;
}

std::vector<std::string> csv_columns() {
    return {"step", "t", "m", "E", "H", "H_plain", "D", "fisher", "min_u", "max_u", "R", "R_audit",
            "mass_inside_R", "a_min_margin", "odd_integral", "a_L3_local", "grad_a_L32_local",
            "parity_defect", "regularization_mass", "W4", "D_scheme", "c_eps", "L1L3_running",
            "L53_running", "slack_entropy_chain", "slack_odd_integral", "slack_second_moment",
            "slack_second_moment_literal", "slack_entropy_lower", "slack_half_mass",
            "slack_a_lower", "outer_iterations", "newton_iterations", "residual", "clamp_count"};
}

std::vector<double> csv_values(const DiagnosticsRecord& r) {
    auto slack = [&](const char* name) {
        const AuditResult* a = r.audit(name);
        return a ? a->slack : std::nan("");
    };
    return {static_cast<double>(r.step), r.t, r.m, r.E, r.H, r.H_plain, r.D, r.fisher, r.min_u, r.max_u,
            r.R, r.R_audit, r.mass_inside_R, r.a_min_margin, r.odd_integral, r.a_L3_local, r.grad_a_L32_local,
            r.parity_defect, r.regularization_mass, r.w4, r.scheme_dissipation, r.c_eps, r.L1L3_running,
            r.L53_running, slack("entropy_chain"), slack("odd_integral"), slack("second_moment_step"),
            r.step > 0 ? r.second_moment_literal_slack : std::nan(""), slack("entropy_lower"),
            slack("half_mass_radius"), slack("a_lower"), static_cast<double>(r.outer_iterations),
            static_cast<double>(r.newton_iterations), r.residual, static_cast<double>(r.clamp_count)};
}

}  // namespace landau
