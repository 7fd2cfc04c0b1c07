#pragma once

#include <vector>

#include "landau/coulomb.hpp"
#include "landau/field.hpp"

namespace landau {

struct SchemeParams {
    double tau = 1.0 / 64.0;
    double alpha = 1.0 / 11.0;
    double u_floor = 1e-300;
    double outer_tol = 1e-10;
    double newton_tol = 1e-10;
    int outer_max = 60;
    int newton_max = 40;
    double T_final = 0.25;

    void validate() const;
    // Half extent tau^(-alpha) of the computational cube.
    double default_half_extent() const;
};

struct SolverStats {
    int outer_iterations = 0;
    int newton_iterations = 0;
    double outer_change = 0.0;
    double residual = 0.0;          // max-norm of the full nonlinear residual
    long clamp_count = 0;
    double regularization_mass = 0.0;  // -tau^2 sum w^3 h^3
    double w4_term = 0.0;              // sum w^4 h^3 + sum_f |grad w|^2 g^2 h^3
    double scheme_dissipation = 0.0;   // sum_f F_f g_f h^3
    double entropy_excess = 0.0;       // H_k - H_{k-1} + tau^2 W4 + tau D
};

struct StepState {
    long k = 0;
    double t = 0.0;
    ScalarField u;
    ScalarField w;
    ScalarField a;
    SolverStats stats;
};

StepState make_initial_state(const ScalarField& u0, const CoulombOperator& op,
                             const SchemeParams& params, long k = 0);

// Face coefficients frozen for one inner solve. The face flux is
// U_f (drift_a_f g_f - drift_b_f) with U_f the face mean of e^w and g_f the
// face difference of w.
struct FrozenCoefficients {
    FaceValues drift_a;
    FaceValues drift_b;

    // Nonlocal coefficients of the density e^z: drift_a = K * U, drift_b = K * (U g)
    // convolved on each face lattice. This makes the discrete dissipation an
    // exact nonnegative quadratic form.
    static FrozenCoefficients from_density(const CoulombOperator& op, const ScalarField& z);
    // Coefficients from a given node potential: face average and face difference.
    static FrozenCoefficients from_potential(const ScalarField& a);
};

ScalarField residual(const StepState& prev, const ScalarField& w, const FrozenCoefficients& frozen,
                     const SchemeParams& params);
ScalarField residual(const StepState& prev, const ScalarField& w, const ScalarField& a_frozen,
                     const SchemeParams& params);
// Residual with coefficients taken from w itself.
ScalarField full_residual(const StepState& prev, const ScalarField& w, const CoulombOperator& op,
                          const SchemeParams& params);

// Nonlinear problem handled by the damped Newton solver:
//   [time_term] (e^w - u_prev)/tau + tau (w^3 - div(|grad w|^2 grad w)) - div(flux) = rhs
// where flux is c_f g_f (linear diffusion) or the drift form of FrozenCoefficients.
struct InnerProblem {
    Grid3 grid;
    double tau = 0.0;
    bool time_term = false;
    std::vector<double> u_prev;
    bool drift = false;
    FaceValues diffusion;        // used when drift == false
    FrozenCoefficients frozen;   // used when drift == true
    std::vector<double> rhs;     // empty means zero

    // The operator of the existence argument: regularization plus linear
    // diffusion with coefficient face_avg(a) * face_avg(e^z).
    static InnerProblem monotone(const ScalarField& a_frozen, const ScalarField& z, double tau);

    ScalarField apply(const ScalarField& w) const;  // operator minus rhs
};

struct InnerResult {
    ScalarField w;
    int iterations = 0;
    double residual_inf = 0.0;
    std::vector<double> residual_history;  // 2-norms of accepted iterates
};

InnerResult solve_inner(const InnerProblem& problem, const ScalarField& w0, const SchemeParams& params);

StepState implicit_step(const StepState& prev, const SchemeParams& params, const CoulombOperator& op);
// Same step with an extra source on the right-hand side; the entropy audit is
// skipped because the source feeds entropy.
StepState implicit_step_with_source(const StepState& prev, const SchemeParams& params,
                                    const CoulombOperator& op, const ScalarField& source);

double entropy_functional(const ScalarField& u);
double w4_term(const ScalarField& w);
double scheme_dissipation(const ScalarField& w, const FrozenCoefficients& frozen);

}  // namespace landau
