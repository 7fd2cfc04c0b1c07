#pragma once

#include <string>
#include <vector>

#include "landau/coulomb.hpp"
#include "landau/field.hpp"
#include "landau/scheme.hpp"

namespace landau {

struct Moments {
    double m = 0.0;
    double E = 0.0;
    double R = 0.0;  // min(sqrt(2E/m), L)
};

struct Entropy {
    double H = 0.0;        // sum u (log u - 1) h^3
    double H_plain = 0.0;  // sum u log u h^3
};

enum class DissipationMethod { double_sum, convolution };

Moments moments(const ScalarField& u);
Entropy entropy(const ScalarField& u);
// Nodal gradients of log u; kernel 1/(4 pi |x - y|).
double dissipation(const ScalarField& u, const CoulombOperator& op, DissipationMethod method);
// Scale used for relative tolerances on D: sum u |grad log u|^2 a h^3.
double dissipation_scale(const ScalarField& u, const CoulombOperator& op);
double fisher_weighted(const ScalarField& u);
// |sum grad u gamma h^3|
double odd_integral_norm(const ScalarField& u);
// Mass on nodes with |x| < R.
double mass_inside(const ScalarField& u, double R);

inline constexpr long kDoubleSumMaxNodes = 25L * 25L * 25L;

struct AuditResult {
    std::string name;
    bool pass = true;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // rhs - lhs
};

struct AuditConfig {
    bool entropy_chain = true;
    bool odd_integral = true;
    bool second_moment = true;
    bool entropy_lower = true;
    bool a_lower = true;
    double epsilon = 0.2;                  // entropy lower bound exponent
    double reference_radius_fraction = 0.5;  // local norms on |x| < fraction * L
    DissipationMethod method = DissipationMethod::convolution;
};

struct DiagnosticsRecord {
    long step = 0;
    double t = 0.0;
    double m = 0.0, E = 0.0, R = 0.0;
    double R_audit = 0.0;  // min(sqrt(2E/m), sqrt(3) L)
    double H = 0.0, H_plain = 0.0;
    double D = 0.0;
    double fisher = 0.0;
    double min_u = 0.0, max_u = 0.0;
    double mass_inside_R = 0.0;  // mass on |x| < R_audit
    double a_min_margin = 0.0;   // min 4 pi a(x)(R_audit+|x|) - m/2
    double odd_integral = 0.0;
    double a_L3_local = 0.0;
    double grad_a_L32_local = 0.0;
    double parity_defect = 0.0;  // relative to max u
    double regularization_mass = 0.0;
    double w4 = 0.0;
    double scheme_dissipation = 0.0;
    double c_eps = 0.0;  // constant of the entropy lower bound
    double second_moment_literal_slack = 0.0;  // with the coefficient 2 in place of 4
    double L1L3_running = 0.0;   // running integral of (sum u^3 gamma^3 h^3)^(1/3) dt
    double L53_running = 0.0;    // running integral of sum gamma^-1/3 u^(5/3) h^3 dt
    int outer_iterations = 0, newton_iterations = 0;
    double residual = 0.0;
    long clamp_count = 0;
    std::vector<AuditResult> audits;

    const AuditResult* audit(const std::string& name) const;
};

DiagnosticsRecord initial_record(const StepState& s, const CoulombOperator& op, const AuditConfig& cfg);
DiagnosticsRecord audit_step(const DiagnosticsRecord& prev_rec, const StepState& prev, const StepState& cur,
                             const CoulombOperator& op, const SchemeParams& params, const AuditConfig& cfg);

// Column names of the diagnostics CSV, in order, and one row of values.
std::vector<std::string> csv_columns();
std::vector<double> csv_values(const DiagnosticsRecord& r);

}  // namespace landau
