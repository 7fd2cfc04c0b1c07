#include "landau/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include <zlib.h>

#include "landau/errors.hpp"

namespace landau {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_plain_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

// A number, optionally written as a ratio "p/q".
double to_double(const std::string& v, int line, const std::string& key) {
    double out = 0.0;
    const auto slash = v.find('/');
    if (slash == std::string::npos) {
        if (parse_plain_double(v, out)) return out;
    } else {
        double num = 0.0, den = 0.0;
        if (parse_plain_double(trim(v.substr(0, slash)), num) && parse_plain_double(trim(v.substr(slash + 1)), den) &&
            den != 0.0)
            return num / den;
    }
    throw ConfigError(key + ": expected a number, got '" + v + "'", line);
}

long long to_integer(const std::string& v, int line, const std::string& key) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(key + ": expected an integer, got '" + v + "'", line);
    return out;
}

bool to_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'", line);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Entry {
    std::string value;
    int line = 0;
};

using Handler = std::function<void(RunConfig&, const std::string& value, int line, const std::string& key)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> table = [] {
        std::map<std::string, Handler> t;
        t["grid.n"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.n = static_cast<int>(to_integer(v, l, k));
        };
        t["grid.L"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) { c.L = to_double(v, l, k); };
        t["grid.h"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) { c.h = to_double(v, l, k); };
        t["time.tau"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.scheme.tau = to_double(v, l, k);
        };
        t["time.alpha"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.scheme.alpha = to_double(v, l, k);
        };
        t["time.T_final"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.scheme.T_final = to_double(v, l, k);
        };
        t["initial.kind"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            if (v == "gaussian") c.initial.kind = InitialKind::gaussian;
            else if (v == "ball") c.initial.kind = InitialKind::ball;
            else if (v == "double_bump") c.initial.kind = InitialKind::double_bump;
            else if (v == "file") c.initial.kind = InitialKind::file;
            else throw ConfigError(k + ": unknown initial condition '" + v + "'", l);
        };
        t["initial.mass"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.initial.mass = to_double(v, l, k);
        };
        t["initial.sigma"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.initial.sigma = to_double(v, l, k);
        };
        t["initial.center"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            std::istringstream in(v);
            std::string tok;
            int i = 0;
            while (in >> tok) {
                if (i == 3) throw ConfigError(k + ": expected three coordinates", l);
                c.initial.center[i++] = to_double(tok, l, k);
            }
            if (i != 3) throw ConfigError(k + ": expected three coordinates", l);
        };
        t["initial.radius"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.initial.radius = to_double(v, l, k);
        };
        t["initial.offset"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.initial.offset = to_double(v, l, k);
        };
        t["initial.file"] = [](RunConfig& c, const std::string& v, int, const std::string&) { c.initial.file = v; };
        t["coulomb.backend"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            if (v == "direct") c.backend = Backend::direct;
            else if (v == "spectral") c.backend = Backend::spectral;
            else throw ConfigError(k + ": backend must be direct or spectral, got '" + v + "'", l);
        };
        t["solver.u_floor"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            if (v == "auto") {
                c.u_floor_auto = true;
            } else {
                c.u_floor_auto = false;
                c.scheme.u_floor = to_double(v, l, k);
            }
        };
        t["solver.outer_tol"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.scheme.outer_tol = to_double(v, l, k);
        };
        t["solver.newton_tol"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.scheme.newton_tol = to_double(v, l, k);
        };
        t["solver.outer_max"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.scheme.outer_max = static_cast<int>(to_integer(v, l, k));
        };
        t["solver.newton_max"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.scheme.newton_max = static_cast<int>(to_integer(v, l, k));
        };
        t["diagnostics.cadence"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.cadence = static_cast<int>(to_integer(v, l, k));
        };
        for (auto [name, field] : std::initializer_list<std::pair<const char*, bool AuditConfig::*>>{
                 {"entropy_chain", &AuditConfig::entropy_chain},
                 {"odd_integral", &AuditConfig::odd_integral},
                 {"second_moment", &AuditConfig::second_moment},
                 {"entropy_lower", &AuditConfig::entropy_lower},
                 {"a_lower", &AuditConfig::a_lower}}) {
            t[std::string("diagnostics.") + name] = [field](RunConfig& c, const std::string& v, int l,
                                                            const std::string& k) {
                c.audits.*field = to_bool(v, l, k);
            };
        }
        t["diagnostics.epsilon"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.audits.epsilon = to_double(v, l, k);
        };
        t["diagnostics.reference_radius_fraction"] = [](RunConfig& c, const std::string& v, int l,
                                                         const std::string& k) {
            c.audits.reference_radius_fraction = to_double(v, l, k);
        };
        t["diagnostics.dissipation"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            if (v == "convolution") c.audits.method = DissipationMethod::convolution;
            else if (v == "double_sum") c.audits.method = DissipationMethod::double_sum;
            else throw ConfigError(k + ": dissipation must be convolution or double_sum, got '" + v + "'", l);
        };
        t["regularity.poincare"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.poincare = to_bool(v, l, k);
        };
        t["regularity.poincare_cube_size"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.poincare_params.cube_size = to_double(v, l, k);
        };
        t["regularity.poincare_r"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.poincare_params.r = to_double(v, l, k);
        };
        t["regularity.poincare_epsilon"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.poincare_params.epsilon = to_double(v, l, k);
        };
        t["regularity.poincare_family_count"] = [](RunConfig& c, const std::string& v, int l,
                                                    const std::string& k) {
            c.poincare_params.family_count = static_cast<int>(to_integer(v, l, k));
        };
        t["regularity.poincare_smoothness"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.poincare_params.smoothness = to_double(v, l, k);
        };
        t["regularity.moser"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.moser = to_bool(v, l, k);
        };
        t["regularity.moser_p"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.moser_params.p = to_double(v, l, k);
        };
        t["regularity.moser_q"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.moser_params.q = to_double(v, l, k);
        };
        t["regularity.moser_R"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.moser_params.R = to_double(v, l, k);
        };
        t["regularity.moser_T"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.moser_params.T = to_double(v, l, k);
        };
        t["regularity.moser_n_max"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            c.moser_params.n_max = static_cast<int>(to_integer(v, l, k));
        };
        t["output.dir"] = [](RunConfig& c, const std::string& v, int, const std::string&) { c.output_dir = v; };
        t["run.seed"] = [](RunConfig& c, const std::string& v, int l, const std::string& k) {
            const long long s = to_integer(v, l, k);
            if (s < 0) throw ConfigError(k + ": seed must be nonnegative", l);
            c.seed = static_cast<std::uint64_t>(s);
        };
        return t;
    }();
    return table;
}

void validate(RunConfig& c, const std::map<std::string, Entry>& seen) {
    auto line = [&](const char* key) {
        auto it = seen.find(key);
        return it == seen.end() ? 0 : it->second.line;
    };
    auto require = [&](bool ok, const char* key, const std::string& msg) {
        if (!ok) throw ConfigError(std::string(key) + ": " + msg, line(key));
    };

    require(c.n >= 3 && c.n % 2 == 1, "grid.n", "node count must be odd and at least 3");
    require(!(seen.count("grid.L") && seen.count("grid.h")), "grid.h", "set either L or h, not both");
    require(c.L >= 0.0 && (!seen.count("grid.L") || c.L > 0.0), "grid.L", "half extent must be positive");
    require(c.h >= 0.0 && (!seen.count("grid.h") || c.h > 0.0), "grid.h", "spacing must be positive");

    const SchemeParams& s = c.scheme;
    require(s.tau > 0.0, "time.tau", "must be positive");
    require(s.alpha > 0.0 && s.alpha <= 1.0 / 11.0 + 1e-15, "time.alpha", "must lie in (0, 1/11]");
    require(s.T_final >= 0.0, "time.T_final", "must be nonnegative");
    const double steps = s.T_final / s.tau;
    require(std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, steps), "time.T_final",
            "must be an integer multiple of tau");
    require(c.u_floor_auto || s.u_floor > 0.0, "solver.u_floor", "must be positive or auto");
    require(s.outer_tol > 0.0, "solver.outer_tol", "must be positive");
    require(s.newton_tol > 0.0, "solver.newton_tol", "must be positive");
    require(s.outer_max >= 1, "solver.outer_max", "must be at least 1");
    require(s.newton_max >= 1, "solver.newton_max", "must be at least 1");

    const Grid3 g = c.grid();
    const double L = g.half_extent();
    const InitialSpec& ic = c.initial;
    require(ic.mass > 0.0, "initial.mass", "must be positive");
    require(ic.sigma > 0.0, "initial.sigma", "must be positive");
    require(ic.radius >= g.h, "initial.radius", "ball must cover at least one grid spacing");
    require(ic.offset >= 0.0 && ic.offset < L, "initial.offset", "must lie in [0, L)");
    for (double x : ic.center) require(std::abs(x) < L, "initial.center", "center must lie inside the cube");
    require(ic.kind != InitialKind::file || !ic.file.empty(), "initial.file", "file initial condition needs a path");

    require(c.cadence >= 1, "diagnostics.cadence", "must be at least 1");
    require(c.audits.epsilon > 0.0 && c.audits.epsilon < 0.4, "diagnostics.epsilon", "must lie in (0, 2/5)");
    require(c.audits.reference_radius_fraction > 0.0 && c.audits.reference_radius_fraction <= 1.0,
            "diagnostics.reference_radius_fraction", "must lie in (0, 1]");
    require(c.audits.method != DissipationMethod::double_sum || static_cast<long>(g.size()) <= kDoubleSumMaxNodes,
            "diagnostics.dissipation", "double_sum is limited to 25^3 nodes");

    PoincareParams& pp = c.poincare_params;
    pp.seed = c.seed;
    if (pp.cube_size == 0.0) pp.cube_size = std::max(L / 4.0, 2.0 * g.h);
    require(pp.cube_size >= 2.0 * g.h, "regularity.poincare_cube_size", "cube must span at least two grid spacings");
    require(pp.cube_size <= 2.0 * L, "regularity.poincare_cube_size", "cube must fit inside the domain");
    require(pp.r > 1.0, "regularity.poincare_r", "must exceed 1");
    require(pp.epsilon > 0.0, "regularity.poincare_epsilon", "must be positive");
    require(pp.family_count >= 1, "regularity.poincare_family_count", "must be at least 1");
    require(pp.smoothness > 0.0, "regularity.poincare_smoothness", "must be positive");

    const MoserParams& mp = c.moser_params;
    require(mp.p > 1.0 && mp.p <= 10.0 / 9.0 + 1e-15, "regularity.moser_p", "must lie in (1, 10/9]");
    require(mp.q > 2.0 && mp.q < 10.0 / 3.0, "regularity.moser_q", "must lie in (2, 10/3)");
    require(mp.R >= 0.0 && mp.R <= L, "regularity.moser_R", "must lie in [0, L]; 0 selects L");
    require(mp.T >= 0.0 && mp.T <= s.T_final, "regularity.moser_T", "must lie in [0, T_final]; 0 selects T_final");
    require(mp.n_max >= 0 && mp.n_max <= 30, "regularity.moser_n_max", "must lie in [0, 30]");

    require(!c.output_dir.empty(), "output.dir", "must not be empty");
}

}  // namespace

Grid3 RunConfig::grid() const {
    if (h > 0.0) return Grid3(n, h);
    return Grid3::from_half_extent(n, L > 0.0 ? L : scheme.default_half_extent());
}

long RunConfig::total_steps() const { return std::lround(scheme.T_final / scheme.tau); }

std::string RunConfig::canonical() const {
    std::ostringstream o;
    const Grid3 g = grid();
    o << "grid.n=" << g.n << "\ngrid.h=" << fmt(g.h) << "\n";
    o << "time.tau=" << fmt(scheme.tau) << "\ntime.alpha=" << fmt(scheme.alpha) << "\ntime.T_final="
      << fmt(scheme.T_final) << "\n";
    static const char* kinds[] = {"gaussian", "ball", "double_bump", "file"};
    o << "initial.kind=" << kinds[static_cast<int>(initial.kind)] << "\ninitial.mass=" << fmt(initial.mass)
      << "\ninitial.sigma=" << fmt(initial.sigma) << "\ninitial.center=" << fmt(initial.center[0]) << " "
      << fmt(initial.center[1]) << " " << fmt(initial.center[2]) << "\ninitial.radius=" << fmt(initial.radius)
      << "\ninitial.offset=" << fmt(initial.offset) << "\ninitial.file=" << initial.file << "\n";
    o << "coulomb.backend=" << (backend == Backend::direct ? "direct" : "spectral") << "\n";
    o << "solver.u_floor=" << (u_floor_auto ? std::string("auto") : fmt(scheme.u_floor))
      << "\nsolver.outer_tol=" << fmt(scheme.outer_tol) << "\nsolver.newton_tol=" << fmt(scheme.newton_tol)
      << "\nsolver.outer_max=" << scheme.outer_max << "\nsolver.newton_max=" << scheme.newton_max << "\n";
    o << "diagnostics.cadence=" << cadence << "\ndiagnostics.entropy_chain=" << audits.entropy_chain
      << "\ndiagnostics.odd_integral=" << audits.odd_integral << "\ndiagnostics.second_moment="
      << audits.second_moment << "\ndiagnostics.entropy_lower=" << audits.entropy_lower
      << "\ndiagnostics.a_lower=" << audits.a_lower << "\ndiagnostics.epsilon=" << fmt(audits.epsilon)
      << "\ndiagnostics.reference_radius_fraction=" << fmt(audits.reference_radius_fraction)
      << "\ndiagnostics.dissipation="
      << (audits.method == DissipationMethod::double_sum ? "double_sum" : "convolution") << "\n";
    o << "regularity.poincare=" << poincare << "\nregularity.poincare_cube_size="
      << fmt(poincare_params.cube_size) << "\nregularity.poincare_r=" << fmt(poincare_params.r)
      << "\nregularity.poincare_epsilon=" << fmt(poincare_params.epsilon)
      << "\nregularity.poincare_family_count=" << poincare_params.family_count
      << "\nregularity.poincare_smoothness=" << fmt(poincare_params.smoothness) << "\n";
    o << "regularity.moser=" << moser << "\nregularity.moser_p=" << fmt(moser_params.p)
      << "\nregularity.moser_q=" << fmt(moser_params.q) << "\nregularity.moser_R=" << fmt(moser_params.R)
      << "\nregularity.moser_T=" << fmt(moser_params.T) << "\nregularity.moser_n_max=" << moser_params.n_max
      << "\n";
    o << "run.seed=" << seed << "\n";
    return o.str();
}

std::string RunConfig::hash() const {
    const std::string text = canonical();
    const uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::map<std::string, Entry> seen;
    std::istringstream in(text);
    std::string raw, section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header '" + line + "'", lineno);
            section = trim(line.substr(1, line.size() - 2));
            static const std::vector<std::string> sections = {"grid",        "time",       "initial", "coulomb",
                                                              "solver",      "diagnostics", "regularity",
                                                              "output",      "run"};
            if (std::find(sections.begin(), sections.end(), section) == sections.end())
                throw ConfigError("unknown section [" + section + "]", lineno);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value, got '" + line + "'", lineno);
        if (section.empty()) throw ConfigError("key outside of any section", lineno);
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) throw ConfigError(key + ": missing value", lineno);
        auto it = handlers().find(key);
        if (it == handlers().end()) throw ConfigError("unknown key " + key, lineno);
        if (seen.count(key))
            throw ConfigError(key + ": duplicate key (first set on line " + std::to_string(seen[key].line) + ")",
                              lineno);
        seen[key] = {value, lineno};
        it->second(c, value, lineno, key);
    }
    validate(c, seen);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file " + path, 0);
    std::ostringstream s;
    s << f.rdbuf();
    return parse_config(s.str());
}

}  // namespace landau
