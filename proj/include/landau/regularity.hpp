#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "landau/field.hpp"
#include "landau/scheme.hpp"

namespace landau {

struct PoincareParams {
    double cube_size = 0.0;  // side R of the tiling cubes
    double r = 2.0;          // averaging exponent
    double epsilon = 0.1;
    int family_count = 64;
    std::uint64_t seed = 1234;
    double smoothness = 0.25;  // bump width as a fraction of L

    void validate(const Grid3& g) const;
};

struct CubeRatio {
    std::array<int, 3> origin;  // first node of the cube
    double ratio = 0.0;
    double mass_moment_ratio = 0.0;
};

struct TestFunctionResult {
    std::string kind;
    double u_phi2 = 0.0;      // sum u phi^2 h^3
    double a_grad_phi2 = 0.0;  // sum a |grad phi|^2 h^3
    double phi2 = 0.0;        // sum phi^2 h^3
    double c_min = 0.0;       // (u_phi2 - eps a_grad_phi2)_+ / phi2
};

struct PoincareReport {
    int cube_nodes = 0;
    std::vector<CubeRatio> cubes;
    double max_ratio = 0.0;
    double max_mass_moment_ratio = 0.0;
    double epsilon = 0.0;
    std::vector<TestFunctionResult> tests;
    double c_eps = 0.0;  // max c_min over the family
};

PoincareReport small_p_ratio(const ScalarField& u, const ScalarField& a, const PoincareParams& params);
PoincareReport eps_poincare_test(const ScalarField& u, const ScalarField& a, const PoincareParams& params);
// Minimal constant for one test function.
TestFunctionResult poincare_constant(const ScalarField& u, const ScalarField& a, const ScalarField& phi,
                                     double epsilon, std::string kind = "custom");

// || (1+|x|) grad a ||_q with the nodal gradient of a.
double weighted_grad_a_norm(const ScalarField& u, const ScalarField& a, double q);

struct MoserParams {
    double p = 10.0 / 9.0;
    double q = 3.0;
    double R = 0.0;  // ball radius; 0 means the cube half extent
    double T = 0.0;  // horizon; 0 means the last trajectory time
    int n_max = 6;
    double eta_scale = 1.0;  // multiplies every cutoff

    void validate() const;
    // Conjugate exponent paired with p so that p q' = 5/3.
    double q_prime() const { return 5.0 / (3.0 * p); }
};

// p (q/2)^n
double moser_exponent(double p, double q, int n);

// Radial C^2 cutoff: 1 on |x| <= inner, 0 on |x| >= outer, quintic between.
double cutoff(double r, double inner, double outer);
inline constexpr double kCutoffGradConstant = 15.0 / 8.0;  // max |eta'| (outer - inner)
inline constexpr double kCutoffLapConstant = 5.773502691896258;  // max |eta''| (outer - inner)^2 = 10/sqrt(3)

struct MoserReport {
    double p = 0.0, q = 0.0, R = 0.0, T = 0.0;
    std::vector<double> exponents;     // P_n
    std::vector<double> radii;         // R_n
    std::vector<double> times;         // T_n
    std::vector<double> E;             // E_n
    std::vector<double> recursion_constants;  // (E_{n+1}/E_n)^{P_n} / (2^n (1/T + 1))
    double C_R = 1.0;                  // max(1, recursion constants)
    double alpha = 0.0;                // sum_j 1/P_j = q / (p (q - 2))
    double geometric_sum = 0.0;        // sum_j j / P_j
    std::vector<double> level_bounds;  // E_n prod_{j>=n} (2^j C_R (1/T+1))^{1/P_j}
    double predicted_bound = 0.0;      // level_bounds[0]
    double C_of_R = 0.0;               // predicted_bound / (1/T + 1)^alpha
    double measured_sup = 0.0;         // max u over |x| <= R/2, (T/2, T)
    double margin = 0.0;               // min_n level_bounds[n] - measured_sup
    double tau_remainder = 0.0;        // sum_{i=1}^{n_max} tau^{1/P_i}, reported separately
    double cutoff_grad_constant = kCutoffGradConstant;
    double cutoff_lap_constant = kCutoffLapConstant;
};

MoserReport moser_sequence(const std::vector<StepState>& trajectory, const MoserParams& params);

}  // namespace landau
