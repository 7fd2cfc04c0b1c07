#include "landau/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "landau/errors.hpp"
#include "landau/snapshot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace landau {

namespace {

constexpr const char* kConfigName = "config.ini";
constexpr const char* kCsvName = "diagnostics.csv";
constexpr const char* kSummaryName = "summary.json";
constexpr const char* kSnapshotDir = "snapshots";

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

json record_json(const DiagnosticsRecord& r) {
    json o = json::object();
    const auto cols = csv_columns();
    const auto vals = csv_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) o[cols[i]] = number(vals[i]);
    return o;
}

json full_record_json(const DiagnosticsRecord& r) {
    json j = record_json(r);
    json a = json::array();
    for (const auto& x : r.audits)
        a.push_back({{"name", x.name}, {"pass", x.pass}, {"lhs", number(x.lhs)}, {"rhs", number(x.rhs)},
                     {"slack", number(x.slack)}});
    j["audits"] = a;
    j["second_moment_literal_slack"] = number(r.second_moment_literal_slack);
    return j;
}

DiagnosticsRecord record_from_json(const json& j) {
    DiagnosticsRecord r;
    auto d = [&](const char* key) { return number_or_nan(j.at(key)); };
    r.step = j.at("step").get<long>();
    r.t = d("t");
    r.m = d("m");
    r.E = d("E");
    r.H = d("H");
    r.H_plain = d("H_plain");
    r.D = d("D");
    r.fisher = d("fisher");
    r.min_u = d("min_u");
    r.max_u = d("max_u");
    r.R = d("R");
    r.R_audit = d("R_audit");
    r.mass_inside_R = d("mass_inside_R");
    r.a_min_margin = d("a_min_margin");
    r.odd_integral = d("odd_integral");
    r.a_L3_local = d("a_L3_local");
    r.grad_a_L32_local = d("grad_a_L32_local");
    r.parity_defect = d("parity_defect");
    r.regularization_mass = d("regularization_mass");
    r.w4 = d("W4");
    r.scheme_dissipation = d("D_scheme");
    r.c_eps = d("c_eps");
    r.L1L3_running = d("L1L3_running");
    r.L53_running = d("L53_running");
    r.second_moment_literal_slack = d("second_moment_literal_slack");
    r.outer_iterations = j.at("outer_iterations").get<int>();
    r.newton_iterations = j.at("newton_iterations").get<int>();
    r.residual = d("residual");
    r.clamp_count = j.at("clamp_count").get<long>();
    for (const auto& a : j.at("audits")) {
        AuditResult x;
        x.name = a.at("name").get<std::string>();
        x.pass = a.at("pass").get<bool>();
        x.lhs = number_or_nan(a.at("lhs"));
        x.rhs = number_or_nan(a.at("rhs"));
        x.slack = number_or_nan(a.at("slack"));
        r.audits.push_back(x);
    }
    return r;
}

// Everything beyond the density that a resumed run needs.
struct RunState {
    long k = 0;
    double t = 0.0;
    double u_floor = 0.0;
    double L1L3_running = 0.0;
    double L53_running = 0.0;
    long outer_total = 0;
    long newton_total = 0;
    double max_mass_moment_ratio = 0.0;
    std::map<std::string, AuditTally> audits;
};

json state_json(const RunState& s, const DiagnosticsRecord& rec, const std::string& hash) {
    json j;
    j["record"] = full_record_json(rec);
    j["config_hash"] = hash;
    j["k"] = s.k;
    j["t"] = s.t;
    j["u_floor"] = s.u_floor;
    j["L1L3_running"] = s.L1L3_running;
    j["L53_running"] = s.L53_running;
    j["outer_iterations_total"] = s.outer_total;
    j["newton_iterations_total"] = s.newton_total;
    j["max_mass_moment_ratio"] = s.max_mass_moment_ratio;
    json a = json::object();
    for (const auto& [name, t] : s.audits)
        a[name] = {{"evaluated", t.evaluated},         {"passed", t.passed},
                   {"worst_slack", number(t.worst_slack)}, {"worst_step", t.worst_step},
                   {"first_failure_step", t.first_failure_step}};
    j["audits"] = a;
    return j;
}

RunState state_from_json(const json& j) {
    RunState s;
    s.k = j.at("k").get<long>();
    s.t = j.at("t").get<double>();
    s.u_floor = j.at("u_floor").get<double>();
    s.L1L3_running = j.at("L1L3_running").get<double>();
    s.L53_running = j.at("L53_running").get<double>();
    s.outer_total = j.at("outer_iterations_total").get<long>();
    s.newton_total = j.at("newton_iterations_total").get<long>();
    s.max_mass_moment_ratio = j.at("max_mass_moment_ratio").get<double>();
    for (const auto& [name, t] : j.at("audits").items()) {
        AuditTally a;
        a.evaluated = t.at("evaluated").get<long>();
        a.passed = t.at("passed").get<long>();
        a.worst_slack = number_or_nan(t.at("worst_slack"));
        a.worst_step = t.at("worst_step").get<long>();
        a.first_failure_step = t.at("first_failure_step").get<long>();
        s.audits[name] = a;
    }
    return s;
}

void tally(RunState& st, const DiagnosticsRecord& r) {
    for (const auto& a : r.audits) {
        AuditTally& t = st.audits[a.name];
        if (t.evaluated == 0 || a.slack < t.worst_slack) {
            t.worst_slack = a.slack;
            t.worst_step = r.step;
        }
        ++t.evaluated;
        if (a.pass) ++t.passed;
        else if (t.first_failure_step < 0) t.first_failure_step = r.step;
    }
}

std::string sidecar_path(const std::string& snap) { return snap + ".json"; }

void persist(const std::string& dir, const StepState& s, const RunState& st, const DiagnosticsRecord& rec,
             const std::string& hash) {
    const std::string path = snapshot_path(dir, s.k);
    // The sidecar goes first: a snapshot without its sidecar is never visible.
    write_file_atomic(sidecar_path(path), state_json(st, rec, hash).dump(2) + "\n");
    write_snapshot(path, Snapshot{s.u.grid, s.k, s.t, s.u.values});
}

void append(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::app);
    if (!f) throw Error("cannot append to " + path);
    f << text;
}

SchemeParams scheme_params(const RunConfig& cfg, double u_floor) {
    SchemeParams p = cfg.scheme;
    p.u_floor = u_floor;
    return p;
}

void add_regularity(RunSummary& s, const RunConfig& cfg, const std::vector<StepState>& trajectory) {
    const StepState& last = trajectory.back();
    if (cfg.moser && trajectory.size() >= 2) s.moser = moser_sequence(trajectory, cfg.moser_params);
    if (cfg.poincare) {
        PoincareReport rep = small_p_ratio(last.u, last.a, cfg.poincare_params);
        PoincareReport eps = eps_poincare_test(last.u, last.a, cfg.poincare_params);
        rep.tests = std::move(eps.tests);
        rep.c_eps = eps.c_eps;
        s.poincare = std::move(rep);
    }
}

// Runs steps k+1 .. N from the given state and writes all outputs.
RunSummary drive(const RunConfig& cfg, const std::string& dir, StepState state, DiagnosticsRecord rec,
                 RunState st, std::vector<StepState> trajectory, const DiagnosticsRecord& initial,
                 const CoulombOperator& op, const RunOptions& opt, std::chrono::steady_clock::time_point start) {
    const SchemeParams params = scheme_params(cfg, st.u_floor);
    const long N = cfg.total_steps();
    const std::string csv = (fs::path(dir) / kCsvName).string();
    const std::string hash = cfg.hash();
    bool stopped = false;
    while (state.k < N) {
        if (opt.stop_after >= 0 && state.k >= opt.stop_after) {
            stopped = true;
            break;
        }
        StepState next;
        try {
            next = implicit_step(state, params, op);
        } catch (NonConvergence& e) {
            throw NonConvergence(std::string(e.what()) + "; last good snapshot " + snapshot_path(dir, state.k),
                                 std::move(e.best_iterate), std::move(e.residual_history), state.k + 1);
        }
        DiagnosticsRecord r = audit_step(rec, state, next, op, params, cfg.audits);
        tally(st, r);
        st.k = next.k;
        st.t = next.t;
        st.L1L3_running = r.L1L3_running;
        st.L53_running = r.L53_running;
        st.outer_total += next.stats.outer_iterations;
        st.newton_total += next.stats.newton_iterations;
        if (cfg.poincare)
            st.max_mass_moment_ratio = std::max(
                st.max_mass_moment_ratio, small_p_ratio(next.u, next.a, cfg.poincare_params).max_mass_moment_ratio);
        if (next.k % cfg.cadence == 0 || next.k == N) append(csv, csv_row(r));
        persist(dir, next, st, r, hash);
        if (cfg.moser) trajectory.push_back(next);
        state = std::move(next);
        rec = std::move(r);
    }

    RunSummary s;
    s.config_hash = hash;
    s.output_dir = dir;
    s.steps_completed = state.k;
    s.total_steps = N;
    s.complete = !stopped && state.k == N;
    s.u_floor = st.u_floor;
    s.audits = st.audits;
    s.initial = initial;
    s.final_record = rec;
    s.max_mass_moment_ratio = st.max_mass_moment_ratio;
    s.outer_iterations_total = st.outer_total;
    s.newton_iterations_total = st.newton_total;
    if (s.complete) {
        if (!cfg.moser) trajectory = {state};
        add_regularity(s, cfg, trajectory);
    }
    s.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file_atomic((fs::path(dir) / kSummaryName).string(), summary_json(s));
    return s;
}

ScalarField ball_fractions(const Grid3& g, double R0) {
    const int sub = 4;
    return ScalarField::sample(g, [&](double x, double y, double z) {
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
}

double gaussian(double x, double y, double z, double mass, double sigma) {
    const double r2 = x * x + y * y + z * z;
    return mass * std::exp(-r2 / (2 * sigma * sigma)) / std::pow(2 * std::numbers::pi * sigma * sigma, 1.5);
}

}  // namespace

bool RunSummary::all_audits_pass() const {
    for (const auto& [name, t] : audits)
        if (t.passed != t.evaluated) return false;
    return true;
}

std::string resolve_output_dir(const RunConfig& cfg) {
    const char* env = std::getenv(kOutputDirEnv);
    if (env && *env) return env;
    return cfg.output_dir;
}

std::string snapshot_path(const std::string& dir, long k) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%08ld.snap", k);
    return (fs::path(dir) / kSnapshotDir / name).string();
}

ScalarField initial_density(const RunConfig& cfg) {
    const Grid3 g = cfg.grid();
    const InitialSpec& ic = cfg.initial;
    ScalarField u;
    switch (ic.kind) {
        case InitialKind::gaussian:
            u = ScalarField::sample(g, [&](double x, double y, double z) {
                return gaussian(x - ic.center[0], y - ic.center[1], z - ic.center[2], ic.mass, ic.sigma);
            });
            break;
        case InitialKind::double_bump:
            u = ScalarField::sample(g, [&](double x, double y, double z) {
                return gaussian(x - ic.offset, y, z, 0.5 * ic.mass, ic.sigma) +
                       gaussian(x + ic.offset, y, z, 0.5 * ic.mass, ic.sigma);
            });
            break;
        case InitialKind::ball: {
            u = ball_fractions(g, ic.radius);
            const double density = ic.mass / (4.0 / 3.0 * std::numbers::pi * std::pow(ic.radius, 3));
            for (auto& v : u.values) v *= density;
            break;
        }
        case InitialKind::file: {
            Snapshot s = read_snapshot(ic.file);
            if (s.grid != g) throw DimensionError("initial density file " + ic.file + " has a different grid");
            u = s.field();
            break;
        }
    }
    for (double v : u.values)
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error("initial density must be finite and nonnegative");
    return symmetrize_even(u);
}

std::string csv_header() {
    std::string out;
    const auto cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    return out + "\n";
}

std::string csv_row(const DiagnosticsRecord& r) {
    std::string out;
    char buf[40];
    const auto vals = csv_values(r);
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (std::isnan(vals[i])) std::snprintf(buf, sizeof buf, "nan");
        else std::snprintf(buf, sizeof buf, "%.17g", vals[i]);
        if (i) out += ",";
        out += buf;
    }
    return out + "\n";
}

RunSummary run(const RunConfig& cfg, const std::string& config_text, const RunOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    const std::string dir = resolve_output_dir(cfg);
    fs::create_directories(fs::path(dir) / kSnapshotDir);
    for (const auto& e : fs::directory_iterator(fs::path(dir) / kSnapshotDir)) fs::remove(e.path());
    fs::remove(fs::path(dir) / kSummaryName);
    write_file_atomic((fs::path(dir) / kConfigName).string(), config_text);

    const Grid3 g = cfg.grid();
    CoulombOperator op(g, cfg.backend);
    const ScalarField u0 = initial_density(cfg);
    RunState st;
    st.u_floor = cfg.scheme.u_floor;
    if (cfg.u_floor_auto) {
        const double m = weighted_integral(u0, Weight::unit);
        if (!(m > 0.0)) throw ZeroMass("initial density has zero mass");
        st.u_floor = 1e-12 * m / std::pow(g.half_extent(), 3);
    }
    StepState s0 = make_initial_state(u0, op, scheme_params(cfg, st.u_floor));
    DiagnosticsRecord r0 = initial_record(s0, op, cfg.audits);
    tally(st, r0);
    if (cfg.poincare)
        st.max_mass_moment_ratio = small_p_ratio(s0.u, s0.a, cfg.poincare_params).max_mass_moment_ratio;

    write_file_atomic((fs::path(dir) / kCsvName).string(), csv_header() + csv_row(r0));
    persist(dir, s0, st, r0, cfg.hash());
    std::vector<StepState> trajectory;
    if (cfg.moser) trajectory.push_back(s0);
    return drive(cfg, dir, std::move(s0), r0, std::move(st), std::move(trajectory), r0, op, opt, start);
}

RunSummary resume(const std::string& dir, const RunOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    const RunConfig cfg = load_config((fs::path(dir) / kConfigName).string());
    const Grid3 g = cfg.grid();
    const std::string hash = cfg.hash();

    long last = -1;
    const fs::path snaps = fs::path(dir) / kSnapshotDir;
    if (!fs::is_directory(snaps)) throw CorruptSnapshot("no snapshots in " + dir);
    for (const auto& e : fs::directory_iterator(snaps)) {
        const std::string name = e.path().filename().string();
        long k = -1;
        if (name.size() == 18 && name.rfind("step_", 0) == 0 && name.substr(13) == ".snap")
            k = std::strtol(name.substr(5, 8).c_str(), nullptr, 10);
        last = std::max(last, k);
    }
    if (last < 0) throw CorruptSnapshot("no snapshots in " + dir);

    auto load = [&](long k) {
        const std::string path = snapshot_path(dir, k);
        Snapshot s = read_snapshot(path);
        if (s.grid != g) throw CorruptSnapshot(path + ": grid does not match the configuration");
        if (s.k != k) throw CorruptSnapshot(path + ": step index does not match the file name");
        json side;
        try {
            side = json::parse(read_file(sidecar_path(path)));
        } catch (const std::exception& e) {
            throw CorruptSnapshot(path + ": unreadable sidecar (" + e.what() + ")");
        }
        if (side.value("config_hash", "") != hash)
            throw CorruptSnapshot(path + ": written by a different configuration");
        return std::make_tuple(std::move(s), state_from_json(side), record_from_json(side.at("record")));
    };

    auto [snap, st, rec] = load(last);
    CoulombOperator op(g, cfg.backend);
    const SchemeParams params = scheme_params(cfg, st.u_floor);
    StepState state = make_initial_state(snap.field(), op, params, snap.k);
    if (state.t != snap.t) throw CorruptSnapshot("snapshot time does not match its step index");

    // Initial record and the trajectory for the regularity monitors.
    auto [snap0, st0, initial] = load(0);
    std::vector<StepState> trajectory;
    if (cfg.moser) {
        trajectory.push_back(make_initial_state(snap0.field(), op, params, 0));
        for (long k = 1; k < last; ++k)
            trajectory.push_back(make_initial_state(std::get<0>(load(k)).field(), op, params, k));
        if (last > 0) trajectory.push_back(state);
    }

    // Drop rows written after the snapshot we resume from.
    const std::string csv = (fs::path(dir) / kCsvName).string();
    std::istringstream in(read_file(csv));
    std::string line, kept;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!header && std::strtol(line.c_str(), nullptr, 10) > last) continue;
        kept += line + "\n";
        header = false;
    }
    write_file_atomic(csv, kept);

    return drive(cfg, dir, std::move(state), rec, std::move(st), std::move(trajectory), initial, op, opt, start);
}

std::string summary_json(const RunSummary& s) {
    json j;
    j["config_hash"] = s.config_hash;
    j["steps_completed"] = s.steps_completed;
    j["total_steps"] = s.total_steps;
    j["complete"] = s.complete;
    j["all_audits_pass"] = s.all_audits_pass();
    j["u_floor"] = s.u_floor;
    json a = json::object();
    for (const auto& [name, t] : s.audits)
        a[name] = {{"evaluated", t.evaluated},
                   {"passed", t.passed},
                   {"worst_slack", number(t.worst_slack)},
                   {"worst_step", t.worst_step},
                   {"first_failure_step", t.first_failure_step}};
    j["audits"] = a;
    j["initial"] = record_json(s.initial);
    j["final"] = record_json(s.final_record);
    j["max_mass_moment_ratio"] = s.max_mass_moment_ratio;
    j["outer_iterations_total"] = s.outer_iterations_total;
    j["newton_iterations_total"] = s.newton_iterations_total;
    if (s.moser) {
        const MoserReport& m = *s.moser;
        j["moser"] = {{"p", m.p},
                      {"q", m.q},
                      {"R", m.R},
                      {"T", m.T},
                      {"exponents", m.exponents},
                      {"radii", m.radii},
                      {"times", m.times},
                      {"E", m.E},
                      {"recursion_constants", m.recursion_constants},
                      {"C_R", m.C_R},
                      {"alpha", m.alpha},
                      {"geometric_sum", m.geometric_sum},
                      {"level_bounds", m.level_bounds},
                      {"predicted_bound", number(m.predicted_bound)},
                      {"C_of_R", number(m.C_of_R)},
                      {"measured_sup", m.measured_sup},
                      {"margin", number(m.margin)},
                      {"tau_remainder", m.tau_remainder},
                      {"cutoff_grad_constant", m.cutoff_grad_constant},
                      {"cutoff_lap_constant", m.cutoff_lap_constant}};
    }
    if (s.poincare) {
        const PoincareReport& p = *s.poincare;
        json tests = json::array();
        for (const auto& t : p.tests)
            tests.push_back({{"kind", t.kind},
                             {"u_phi2", t.u_phi2},
                             {"rhs", p.epsilon * t.a_grad_phi2 + p.c_eps * t.phi2},
                             {"c_min", t.c_min}});
        json cubes = json::array();
        for (const auto& c : p.cubes)
            cubes.push_back({{"origin", c.origin}, {"ratio", c.ratio}, {"mass_moment_ratio", c.mass_moment_ratio}});
        j["poincare"] = {{"cube_nodes", p.cube_nodes},
                         {"max_ratio", p.max_ratio},
                         {"max_mass_moment_ratio", p.max_mass_moment_ratio},
                         {"epsilon", p.epsilon},
                         {"c_eps", p.c_eps},
                         {"cubes", cubes},
                         {"tests", tests}};
    }
    j["wall_clock_seconds"] = s.wall_clock_seconds;
    return j.dump(2) + "\n";
}

}  // namespace landau
