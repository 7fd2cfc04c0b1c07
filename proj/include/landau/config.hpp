#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "landau/coulomb.hpp"
#include "landau/diagnostics.hpp"
#include "landau/regularity.hpp"
#include "landau/scheme.hpp"

namespace landau {

enum class InitialKind { gaussian, ball, double_bump, file };

struct InitialSpec {
    InitialKind kind = InitialKind::gaussian;
    double mass = 20.0;
    double sigma = 1.5;
    std::array<double, 3> center{0.0, 0.0, 0.0};
    double radius = 1.0;  // ball
    double offset = 0.5;  // double_bump: centers at +-offset along x
    std::string file;     // snapshot holding u
};

struct RunConfig {
    int n = 17;
    double L = 0.0;  // 0 means tau^-alpha
    double h = 0.0;  // alternative to L; at most one of them is set
    SchemeParams scheme;
    bool u_floor_auto = true;  // 1e-12 m / L^3 from the initial mass
    InitialSpec initial;
    Backend backend = Backend::spectral;
    int cadence = 1;  // diagnostics rows every cadence steps
    AuditConfig audits;
    bool poincare = true;
    PoincareParams poincare_params;  // cube_size 0 means max(L/4, 2h)
    bool moser = true;
    MoserParams moser_params;
    std::string output_dir = "landau_out";
    std::uint64_t seed = 1;

    Grid3 grid() const;
    long total_steps() const;
    // Canonical key = value text; equal configs give equal text.
    std::string canonical() const;
    std::string hash() const;
};

// Parses the sectioned key = value format. Unknown sections or keys,
// duplicates, malformed values and constraint violations raise ConfigError
// with the offending line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace landau
