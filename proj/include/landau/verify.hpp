#pragma once

#include <string>
#include <vector>

namespace landau {

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;      // measured error
    double tolerance = 0.0;
    double seconds = 0.0;
    std::string detail;
};

struct VerifyOptions {
    int size = 9;                   // grid for equivalence, parity and solver checks
    int closed_form_size = 65;      // grid for the closed-form potentials
    double kernel_perturbation = 0.0;  // test hook: scales the Coulomb kernel by 1 + this
    int dissipation_cases = 10;
    unsigned long long seed = 1;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    double seconds = 0.0;
    bool ok() const;
    std::string text() const;
};

// Exterior potential of a uniform ball against m / (4 pi |x|), and its field
// against m x / (4 pi |x|^3) one cell away from the surface.
CheckResult check_ball_potential(int n, double kernel_perturbation = 0.0);
// Potential of a Gaussian against m erf(r / (sigma sqrt 2)) / (4 pi r).
CheckResult check_gaussian_potential(int n, double kernel_perturbation = 0.0);
// Direct summation against the spectral backend: potential, its gradient
// and the vector potential.
CheckResult check_backend_equivalence(int n, double kernel_perturbation = 0.0);
// Double-sum against convolution evaluation of the dissipation on random fields.
CheckResult check_dissipation(int n, int cases, unsigned long long seed);
// One implicit step from an even Gaussian keeps the density even.
CheckResult check_parity(int n);
// Recovery of a manufactured log-density through the full step.
CheckResult check_manufactured(int n, unsigned long long seed);

VerifyReport verify(const VerifyOptions& opt);

}  // namespace landau
