#pragma once

#include <map>
#include <optional>
#include <string>

#include "landau/config.hpp"
#include "landau/diagnostics.hpp"
#include "landau/regularity.hpp"

namespace landau {

// Environment variable that replaces the configured output directory.
inline constexpr const char* kOutputDirEnv = "LANDAU_OUTPUT_DIR";

struct AuditTally {
    long evaluated = 0;
    long passed = 0;
    double worst_slack = 0.0;
    long worst_step = -1;
    long first_failure_step = -1;
};

struct RunSummary {
    std::string config_hash;
    std::string output_dir;
    long steps_completed = 0;
    long total_steps = 0;
    bool complete = false;
    double u_floor = 0.0;
    std::map<std::string, AuditTally> audits;
    DiagnosticsRecord initial;
    DiagnosticsRecord final_record;
    double max_mass_moment_ratio = 0.0;  // over all steps
    long outer_iterations_total = 0;
    long newton_iterations_total = 0;
    double wall_clock_seconds = 0.0;
    std::optional<MoserReport> moser;
    std::optional<PoincareReport> poincare;

    bool all_audits_pass() const;
};

struct RunOptions {
    long stop_after = -1;  // stop once this step is written; negative runs to the end
};

std::string resolve_output_dir(const RunConfig& cfg);
// Initial density on the configured grid, symmetrized to be even.
ScalarField initial_density(const RunConfig& cfg);

// config_text is stored verbatim next to the outputs so resume can reload it.
RunSummary run(const RunConfig& cfg, const std::string& config_text, const RunOptions& opt = {});
RunSummary resume(const std::string& output_dir, const RunOptions& opt = {});

std::string summary_json(const RunSummary& s);
// One CSV row, numbers printed with 17 significant digits.
std::string csv_row(const DiagnosticsRecord& r);
std::string csv_header();

std::string snapshot_path(const std::string& dir, long k);

}  // namespace landau
