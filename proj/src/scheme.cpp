#include "landau/scheme.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>

#include "landau/errors.hpp"

namespace landau {

void SchemeParams::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw Error("tau must be positive");
    if (!(alpha > 0.0) || alpha > 1.0 / 11.0 + 1e-15) throw Error("alpha must lie in (0, 1/11]");
    if (!(u_floor > 0.0)) throw Error("u_floor must be positive");
    if (!(outer_tol > 0.0) || !(newton_tol > 0.0)) throw Error("solver tolerances must be positive");
    if (outer_max < 1 || newton_max < 1) throw Error("iteration caps must be at least 1");
    if (!(T_final >= 0.0)) throw Error("T_final must be nonnegative");
}

double SchemeParams::default_half_extent() const { return std::pow(tau, -alpha); }

namespace {

std::size_t stride(const Grid3& g, int d) {
    return d == 0 ? 1 : d == 1 ? static_cast<std::size_t>(g.n) : static_cast<std::size_t>(g.n) * g.n;
}

// Nodes and weight of the nodal difference along e: (w[q] - w[p]) * coef.
struct Tangent {
    std::size_t p, q;
    double coef;
};

Tangent tangent(const Grid3& g, std::size_t node, int e) {
    const std::size_t s = stride(g, e);
    const int pos = static_cast<int>((node / s) % static_cast<std::size_t>(g.n));
    if (pos == 0) return {node, node + s, 1.0 / g.h};
    if (pos == g.n - 1) return {node - s, node, 1.0 / g.h};
    return {node - s, node + s, 0.5 / g.h};
}

template <class Visit>
void for_each_face(const Grid3& g, Visit visit) {
    for (int d = 0; d < 3; ++d) {
        const FaceLattice fl = face_lattice(g, d);
        const std::size_t s = stride(g, d);
        std::size_t f = 0;
        for (int k = 0; k < fl.dims[2]; ++k)
            for (int j = 0; j < fl.dims[1]; ++j)
                for (int i = 0; i < fl.dims[0]; ++i, ++f) {
                    const std::size_t left = g.index(i, j, k);
                    visit(d, f, left, left + s);
                }
    }
}

double tangential_sq(const Grid3& g, const std::vector<double>& w, int d, std::size_t l, std::size_t r) {
    double acc = 0.0;
    for (int e = 0; e < 3; ++e) {
        if (e == d) continue;
        const Tangent tl = tangent(g, l, e), tr = tangent(g, r, e);
        const double t = 0.5 * ((w[tl.q] - w[tl.p]) * tl.coef + (w[tr.q] - w[tr.p]) * tr.coef);
        acc += t * t;
    }
    return acc;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm_inf(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

using SpMat = Eigen::SparseMatrix<double>;

SpMat jacobian(const InnerProblem& P, const std::vector<double>& w) {
    const Grid3& g = P.grid;
    const double inv_h = 1.0 / g.h;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g.size() * 40);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double diag = 3.0 * P.tau * w[i] * w[i];
        if (P.time_term) diag += std::exp(w[i]) / P.tau;
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
    }
    std::vector<std::pair<std::size_t, double>> dflux;
    for_each_face(g, [&](int d, std::size_t f, std::size_t l, std::size_t r) {
        dflux.clear();
        const double gf = (w[r] - w[l]) * inv_h;
        double tsq = 0.0;
        Tangent tl[3], tr[3];
        double t[3] = {0, 0, 0};
        for (int e = 0; e < 3; ++e) {
            if (e == d) continue;
            tl[e] = tangent(g, l, e);
            tr[e] = tangent(g, r, e);
            t[e] = 0.5 * ((w[tl[e].q] - w[tl[e].p]) * tl[e].coef + (w[tr[e].q] - w[tr[e].p]) * tr[e].coef);
            tsq += t[e] * t[e];
        }
        const double G = gf * gf + tsq;
        // Regularization flux tau * G * g.
        const double dg_coef = P.tau * (G + 2.0 * gf * gf);
        dflux.emplace_back(l, -dg_coef * inv_h);
        dflux.emplace_back(r, dg_coef * inv_h);
        for (int e = 0; e < 3; ++e) {
            if (e == d) continue;
            const double c = P.tau * 2.0 * gf * t[e] * 0.5;
            dflux.emplace_back(tl[e].q, c * tl[e].coef);
            dflux.emplace_back(tl[e].p, -c * tl[e].coef);
            dflux.emplace_back(tr[e].q, c * tr[e].coef);
            dflux.emplace_back(tr[e].p, -c * tr[e].coef);
        }
        if (P.drift) {
            const double A = P.frozen.drift_a[d][f], B = P.frozen.drift_b[d][f];
            const double el = std::exp(w[l]), er = std::exp(w[r]);
            const double U = 0.5 * (el + er);
            const double q = A * gf - B;
            dflux.emplace_back(l, 0.5 * el * q - U * A * inv_h);
            dflux.emplace_back(r, 0.5 * er * q + U * A * inv_h);
        } else {
            const double c = P.diffusion[d][f];
            dflux.emplace_back(l, -c * inv_h);
            dflux.emplace_back(r, c * inv_h);
        }
        for (const auto& [col, v] : dflux) {
            trip.emplace_back(static_cast<int>(l), static_cast<int>(col), -v * inv_h);
            trip.emplace_back(static_cast<int>(r), static_cast<int>(col), v * inv_h);
        }
    });
    const int N = static_cast<int>(g.size());
    SpMat J(N, N);
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    return J;
}

// Krylov solve with a Jacobi preconditioner; the time term makes the step
// Jacobian well conditioned. Falls back to sparse LU, with a small diagonal
// shift if the matrix is singular.
Eigen::VectorXd linear_solve(SpMat& J, const Eigen::VectorXd& b) {
    Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> krylov;
    krylov.setTolerance(1e-13);
    krylov.setMaxIterations(400);
    krylov.compute(J);
    Eigen::VectorXd x = krylov.solve(b);
    if (krylov.info() == Eigen::Success && x.allFinite()) return x;

    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(J);
    lu.factorize(J);
    if (lu.info() != Eigen::Success) {
        const int N = static_cast<int>(J.rows());
        double dmax = 0.0;
        for (int i = 0; i < N; ++i) dmax = std::max(dmax, std::abs(J.coeff(i, i)));
        SpMat I(N, N);
        I.setIdentity();
        J += (1e-10 * std::max(dmax, 1.0)) * I;
        lu.factorize(J);
        if (lu.info() != Eigen::Success) return Eigen::VectorXd::Constant(N, std::nan(""));
    }
    return lu.solve(b);
}

}  // namespace

ScalarField InnerProblem::apply(const ScalarField& wf) const {
    require_same_grid(grid, wf.grid, "inner problem");
    const Grid3& g = grid;
    const auto& w = wf.values;
    const double inv_h = 1.0 / g.h;
    ScalarField out(g);
    auto& v = out.values;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double val = tau * w[i] * w[i] * w[i];
        if (time_term) val += (std::exp(w[i]) - u_prev[i]) / tau;
        if (!rhs.empty()) val -= rhs[i];
        v[i] = val;
    }
    for_each_face(g, [&](int d, std::size_t f, std::size_t l, std::size_t r) {
        const double gf = (w[r] - w[l]) * inv_h;
        const double G = gf * gf + tangential_sq(g, w, d, l, r);
        double flux = tau * G * gf;
        if (drift) {
            const double U = 0.5 * (std::exp(w[l]) + std::exp(w[r]));
            flux += U * (frozen.drift_a[d][f] * gf - frozen.drift_b[d][f]);
        } else {
            flux += diffusion[d][f] * gf;
        }
        v[l] -= flux * inv_h;
        v[r] += flux * inv_h;
    });
    return out;
}

InnerProblem InnerProblem::monotone(const ScalarField& a_frozen, const ScalarField& z, double tau) {
    require_same_grid(a_frozen.grid, z.grid, "monotone problem");
    InnerProblem P;
    P.grid = z.grid;
    P.tau = tau;
    ScalarField ez(z.grid);
    for (std::size_t i = 0; i < z.size(); ++i) ez[i] = std::exp(z[i]);
    FaceValues aa = face_average(a_frozen), ea = face_average(ez);
    for (int d = 0; d < 3; ++d) {
        P.diffusion[d].resize(aa[d].size());
        for (std::size_t f = 0; f < aa[d].size(); ++f) P.diffusion[d][f] = aa[d][f] * ea[d][f];
    }
    return P;
}

FrozenCoefficients FrozenCoefficients::from_density(const CoulombOperator& op, const ScalarField& z) {
    require_same_grid(op.grid(), z.grid, "frozen coefficients");
    const Grid3& g = z.grid;
    ScalarField ez(g);
    for (std::size_t i = 0; i < z.size(); ++i) ez[i] = std::exp(z[i]);
    FaceValues U = face_average(ez);
    FaceValues G = face_difference(z);
    FrozenCoefficients fc;
    for (int d = 0; d < 3; ++d) {
        const FaceLattice fl = face_lattice(g, d);
        std::vector<double> ug(U[d].size());
        for (std::size_t f = 0; f < ug.size(); ++f) ug[f] = U[d][f] * G[d][f];
        fc.drift_a[d] = op.convolve(U[d], fl.dims);
        fc.drift_b[d] = op.convolve(ug, fl.dims);
    }
    return fc;
}

FrozenCoefficients FrozenCoefficients::from_potential(const ScalarField& a) {
    FrozenCoefficients fc;
    fc.drift_a = face_average(a);
    fc.drift_b = face_difference(a);
    return fc;
}

namespace {

InnerProblem step_problem(const StepState& prev, const FrozenCoefficients& frozen, double tau) {
    InnerProblem P;
    P.grid = prev.u.grid;
    P.tau = tau;
    P.time_term = true;
    P.u_prev = prev.u.values;
    P.drift = true;
    P.frozen = frozen;
    return P;
}

}  // namespace

ScalarField residual(const StepState& prev, const ScalarField& w, const FrozenCoefficients& frozen,
                     const SchemeParams& params) {
    return step_problem(prev, frozen, params.tau).apply(w);
}

ScalarField residual(const StepState& prev, const ScalarField& w, const ScalarField& a_frozen,
                     const SchemeParams& params) {
    require_same_grid(a_frozen.grid, w.grid, "residual");
    return residual(prev, w, FrozenCoefficients::from_potential(a_frozen), params);
}

ScalarField full_residual(const StepState& prev, const ScalarField& w, const CoulombOperator& op,
                          const SchemeParams& params) {
    return residual(prev, w, FrozenCoefficients::from_density(op, w), params);
}

InnerResult solve_inner(const InnerProblem& P, const ScalarField& w0, const SchemeParams& params) {
    InnerResult res;
    res.w = w0;
    ScalarField r = P.apply(res.w);
    double n2 = norm2(r.values);
    res.residual_history.push_back(n2);
    res.residual_inf = norm_inf(r.values);
    if (!std::isfinite(n2))
        throw NonConvergence("inner solve: nonfinite residual at the initial guess", res.w.values,
                             res.residual_history);

    const int N = static_cast<int>(P.grid.size());
    for (int it = 0; it < params.newton_max; ++it) {
        if (res.residual_inf <= params.newton_tol) return res;
        const SpMat J = jacobian(P, res.w.values);
        Eigen::Map<const Eigen::VectorXd> rv(r.values.data(), N);

        // A failed line search is retried with a growing diagonal shift. The
        // monotone operator has a singular Jacobian at w = 0 (constants are in
        // the kernel of the no-flux diffusion), which the shift regularizes.
        double dmax = 0.0;
        for (int i = 0; i < N; ++i) dmax = std::max(dmax, std::abs(J.coeff(i, i)));
        bool accepted = false;
        for (double shift : {0.0, 1e-6, 1e-4, 1e-2, 1.0, 1e2}) {
            SpMat Js = J;
            if (shift > 0.0) {
                SpMat I(N, N);
                I.setIdentity();
                Js += (shift * std::max(dmax, 1.0)) * I;
            }
            Eigen::VectorXd dw = linear_solve(Js, -rv);
            if (!dw.allFinite()) continue;
            double lambda = 1.0;
            for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
                ScalarField trial = res.w;
                for (int i = 0; i < N; ++i) trial.values[i] += lambda * dw[i];
                if (!all_finite(trial.values)) continue;
                ScalarField rt = P.apply(trial);
                const double nt = norm2(rt.values);
                if (std::isfinite(nt) && nt < (1.0 - 1e-4 * lambda) * n2) {
                    res.w = std::move(trial);
                    r = std::move(rt);
                    n2 = nt;
                    accepted = true;
                    break;
                }
            }
            if (accepted) break;
        }
        ++res.iterations;
        if (!accepted) break;
        res.residual_history.push_back(n2);
        res.residual_inf = norm_inf(r.values);
    }
    if (res.residual_inf <= params.newton_tol) return res;
    throw NonConvergence("inner solve: residual " + std::to_string(res.residual_inf) + " above tolerance after " +
                             std::to_string(res.iterations) + " Newton iterations",
                         res.w.values, res.residual_history);
}

double entropy_functional(const ScalarField& u) {
    double s = 0.0;
    for (double v : u.values)
        if (v > 0.0) s += v * (std::log(v) - 1.0);
    return s * u.grid.cell_volume();
}

double w4_term(const ScalarField& w) {
    const Grid3& g = w.grid;
    double bulk = 0.0;
    for (double v : w.values) bulk += v * v * v * v;
    double grad = 0.0;
    const double inv_h = 1.0 / g.h;
    for_each_face(g, [&](int d, std::size_t, std::size_t l, std::size_t r) {
        const double gf = (w.values[r] - w.values[l]) * inv_h;
        grad += (gf * gf + tangential_sq(g, w.values, d, l, r)) * gf * gf;
    });
    return (bulk + grad) * g.cell_volume();
}

double scheme_dissipation(const ScalarField& w, const FrozenCoefficients& frozen) {
    const Grid3& g = w.grid;
    const double inv_h = 1.0 / g.h;
    double s = 0.0;
    for_each_face(g, [&](int d, std::size_t f, std::size_t l, std::size_t r) {
        const double gf = (w.values[r] - w.values[l]) * inv_h;
        const double U = 0.5 * (std::exp(w.values[l]) + std::exp(w.values[r]));
        s += U * (frozen.drift_a[d][f] * gf - frozen.drift_b[d][f]) * gf;
    });
    return s * g.cell_volume();
}

StepState make_initial_state(const ScalarField& u0, const CoulombOperator& op, const SchemeParams& params,
                             long k) {
    require_same_grid(op.grid(), u0.grid, "initial state");
    StepState s;
    s.k = k;
    s.t = static_cast<double>(k) * params.tau;
    s.u = u0;
    s.w = ScalarField(u0.grid);
    for (std::size_t i = 0; i < u0.size(); ++i) {
        if (!std::isfinite(u0[i])) throw Error("initial density is not finite");
        if (s.u[i] < params.u_floor) {
            s.u[i] = params.u_floor;
            ++s.stats.clamp_count;
        }
        s.w[i] = std::log(s.u[i]);
    }
    s.a = op.potential(s.u);
    return s;
}

namespace {

StepState step_impl(const StepState& prev, const SchemeParams& params, const CoulombOperator& op,
                    const ScalarField* source) {
    require_same_grid(op.grid(), prev.u.grid, "implicit step");
    const Grid3& g = prev.u.grid;
    StepState next;
    next.k = prev.k + 1;
    next.t = static_cast<double>(next.k) * params.tau;

    ScalarField z(g);
    for (std::size_t i = 0; i < g.size(); ++i) z[i] = std::log(prev.u[i]);

    FrozenCoefficients frozen = FrozenCoefficients::from_density(op, z);
    bool done = false;
    double full_res = 0.0;
    for (int outer = 0; outer < params.outer_max && !done; ++outer) {
        InnerProblem P = step_problem(prev, frozen, params.tau);
        if (source) P.rhs = source->values;
        InnerResult inner;
        try {
            inner = solve_inner(P, z, params);
        } catch (NonConvergence& e) {
            throw NonConvergence(std::string(e.what()) + " (outer iteration " + std::to_string(outer) + ")",
                                 std::move(e.best_iterate), std::move(e.residual_history), next.k);
        }
        next.stats.newton_iterations += inner.iterations;
        next.stats.outer_iterations = outer + 1;
        double diff = 0.0, scale = 1.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            diff = std::max(diff, std::abs(inner.w[i] - z[i]));
            scale = std::max(scale, std::abs(inner.w[i]));
        }
        next.stats.outer_change = diff / scale;
        z = std::move(inner.w);
        frozen = FrozenCoefficients::from_density(op, z);
        if (next.stats.outer_change <= params.outer_tol) {
            InnerProblem Q = step_problem(prev, frozen, params.tau);
            if (source) Q.rhs = source->values;
            full_res = norm_inf(Q.apply(z).values);
            done = full_res <= 10.0 * params.newton_tol;
        }
    }
    if (!done)
        throw NonConvergence("outer fixed-point loop did not converge (relative change " +
                                 std::to_string(next.stats.outer_change) + ")",
                             z.values, {}, next.k);
    next.stats.residual = full_res;

    next.u = ScalarField(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double v = std::exp(z[i]);
        if (v < params.u_floor) {
            v = params.u_floor;
            z[i] = std::log(v);
            ++next.stats.clamp_count;
        }
        next.u[i] = v;
    }
    next.w = z;
    next.a = op.potential(next.u);

    double w3 = 0.0;
    for (double v : z.values) w3 += v * v * v;
    next.stats.regularization_mass = -params.tau * params.tau * w3 * g.cell_volume();
    next.stats.w4_term = w4_term(z);
    next.stats.scheme_dissipation = scheme_dissipation(z, frozen);
    const double H_prev = entropy_functional(prev.u);
    const double H = entropy_functional(next.u);
    next.stats.entropy_excess = H - H_prev + params.tau * params.tau * next.stats.w4_term +
                                params.tau * next.stats.scheme_dissipation;
    if (!source) {
        const double slack = 1e-8 * std::abs(H_prev);
        if (next.stats.entropy_excess > slack)
            throw EntropyViolation("discrete entropy inequality violated at step " + std::to_string(next.k) +
                                       ": excess " + std::to_string(next.stats.entropy_excess),
                                   next.stats.entropy_excess);
    }
    return next;
}

}  // namespace

StepState implicit_step(const StepState& prev, const SchemeParams& params, const CoulombOperator& op) {
    return step_impl(prev, params, op, nullptr);
}

StepState implicit_step_with_source(const StepState& prev, const SchemeParams& params,
                                    const CoulombOperator& op, const ScalarField& source) {
    return step_impl(prev, params, op, &source);
}

}  // namespace landau
