// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "landau/config.hpp"
#include "landau/diagnostics.hpp"
#include "landau/errors.hpp"
#include "landau/run.hpp"
#include "landau/scheme.hpp"
#include "landau/snapshot.hpp"
#include "landau/verify.hpp"

using namespace landau;
namespace fs = std::filesystem;

namespace {

constexpr double kEntropyRelTol = 1e-8;
constexpr double kParityTol = 1e-12;
constexpr double kOddTol = 1e-10;
constexpr double kResumeTol = 1e-12;
constexpr double kCoulombBudget = 30.0;
constexpr double kReferenceBudget = 120.0;
constexpr double kSecondMomentFactor = 2.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Csv {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    double at(std::size_t row, const std::string& col) const {
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (columns[j] == col) return rows[row][j];
        throw Error("no CSV column " + col);
    }
};

Csv read_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    Csv csv;
    std::string line, cell;
    std::getline(in, line);
    std::istringstream head(line);
    while (std::getline(head, cell, ',')) csv.columns.push_back(cell);
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream cells(line);
        while (std::getline(cells, cell, ',')) row.push_back(cell == "nan" ? NAN : std::stod(cell));
        csv.rows.push_back(row);
    }
    return csv;
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

const fs::path& scratch() {
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / ("landau_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

// Reference run: 17^3, tau = 1/64, T = 0.25, even Gaussian of mass 20 and sigma 1.5.
std::string reference_text(const std::string& out) {
    return "[grid]\nn = 17\n[time]\ntau = 1/64\nT_final = 1/4\n"
           "[initial]\nkind = gaussian\nmass = 20\nsigma = 1.5\n"
           "[regularity]\nmoser_p = 10/9\nmoser_q = 3\nmoser_n_max = 6\n"
           "[output]\ndir = " + out + "\n";
}

struct Reference {
    RunSummary summary;
    Csv csv;
    double seconds = 0.0;
};

const Reference& reference() {
    static const Reference ref = [] {
        Reference r;
        const auto out = (scratch() / "reference").string();
        const auto text = reference_text(out);
        const auto t0 = std::chrono::steady_clock::now();
        r.summary = run(parse_config(text), text);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        r.csv = read_csv(out + "/diagnostics.csv");
        return r;
    }();
    return ref;
}

Outcome coulomb() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ball = check_ball_potential(65);
    const auto gauss = check_gaussian_potential(65);
    const auto equiv = check_backend_equivalence(17);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {ball.pass && gauss.pass && equiv.pass && secs < kCoulombBudget,
            fmt("ball %.2e, erf %.2e, ", ball.value, gauss.value) + fmt("direct/spectral %.2e, %.1fs", equiv.value, secs)};
}

Outcome entropy_monotone() {
    const auto& ref = reference();
    double worst = -INFINITY;
    long worst_step = -1;
    for (std::size_t k = 1; k < ref.csv.rows.size(); ++k) {
        const double prev = ref.csv.at(k - 1, "H"), cur = ref.csv.at(k, "H");
        const double excess = (cur - prev) / (kEntropyRelTol * std::abs(prev));
        if (excess > worst) worst = excess, worst_step = static_cast<long>(k);
    }
    return {ref.summary.complete && worst <= 1.0 && ref.seconds < kReferenceBudget,
            fmt("max (H_k - H_k-1)/(1e-8 |H_k-1|) = %.3g at step %.0f, run %.1fs", worst, double(worst_step),
                ref.seconds)};
}

Outcome mass_drift() {
    const double alpha = 1.0 / 11.0;
    std::vector<double> taus, drifts;
    for (int e = 4; e <= 7; ++e) {
        const auto out = (scratch() / ("sweep_" + std::to_string(e))).string();
        std::string text = reference_text(out);
        text.replace(text.find("tau = 1/64"), 10, "tau = 1/" + std::to_string(1 << e));
        RunConfig cfg = parse_config(text);
        cfg.moser = false;
        cfg.poincare = false;
        const auto s = run(cfg, text);
        taus.push_back(std::ldexp(1.0, -e));
        drifts.push_back(std::abs(s.final_record.m - s.initial.m));
    }
    bool monotone = true;
    for (std::size_t i = 1; i < drifts.size(); ++i) monotone &= drifts[i] < drifts[i - 1];
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double nn = static_cast<double>(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double x = std::log(taus[i]), y = std::log(drifts[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    const double required = (1.0 - alpha) / 4.0 - 0.1;
    std::string detail = "drifts";
    for (double d : drifts) detail += fmt(" %.3e", d);
    detail += fmt(", slope %.3f (required %.3f)", slope, required);
    return {monotone && slope >= required, detail};
}

Outcome parity() {
    const auto& ref = reference();
    double worst_parity = 0.0, worst_odd = 0.0;
    const double L = parse_config(reference_text("x")).grid().half_extent();
    for (std::size_t k = 0; k < ref.csv.rows.size(); ++k) {
        worst_parity = std::max(worst_parity, ref.csv.at(k, "parity_defect"));
        worst_odd = std::max(worst_odd, ref.csv.at(k, "odd_integral") / (ref.csv.at(k, "m") / L));
    }
    return {worst_parity <= kParityTol && worst_odd <= kOddTol,
            fmt("max parity defect / max u %.2e, max odd integral / (m/L) %.2e", worst_parity, worst_odd)};
}

Outcome dissipation_identity() {
    const auto random_cases = check_dissipation(13, 100, 7);
    Grid3 g = Grid3::from_half_extent(13, 1.5);
    CoulombOperator spectral(g, Backend::spectral), direct(g, Backend::direct);
    auto u = ScalarField::sample(g, [](double x, double y, double z) { return std::exp(0.3 - 0.4 * x + 0.2 * y + 0.7 * z); });
    const double scale = dissipation_scale(u, spectral);
    const double affine = std::max(std::abs(dissipation(u, spectral, DissipationMethod::convolution)),
                                   std::abs(dissipation(u, direct, DissipationMethod::double_sum))) /
                          scale;
    return {random_cases.pass && affine <= 1e-12,
            fmt("100 cases: max rel diff %.2e; log-affine |D|/scale %.2e", random_cases.value, affine) + "; " +
                random_cases.detail};
}

Outcome audits() {
    const auto& ref = reference();
    const char* cols[] = {"slack_entropy_chain", "slack_second_moment", "slack_entropy_lower", "slack_a_lower",
                          "slack_half_mass", "slack_odd_integral"};
    std::string detail;
    bool ok = true;
    for (const char* col : cols) {
        double worst = INFINITY;
        long step = -1;
        for (std::size_t k = 0; k < ref.csv.rows.size(); ++k) {
            const double s = ref.csv.at(k, col);
            if (std::isnan(s)) continue;
            if (s < worst) worst = s, step = static_cast<long>(k);
        }
        ok &= worst >= 0.0;
        detail += std::string(col + 6) + fmt(" %.2e@%.0f ", worst, double(step));
    }
    for (const auto& [name, t] : ref.summary.audits) {
        ok &= t.passed == t.evaluated;
        if (t.first_failure_step >= 0) detail += name + fmt(" first failure at step %.0f ", double(t.first_failure_step));
    }
    return {ok, detail};
}

Outcome second_moment() {
    const auto& ref = reference();
    const double E0 = ref.csv.at(0, "E");
    double Emax = E0;
    for (std::size_t k = 0; k < ref.csv.rows.size(); ++k) Emax = std::max(Emax, ref.csv.at(k, "E"));
    return {Emax < kSecondMomentFactor * E0, fmt("E0 %.6g, max E %.6g, ratio %.6f", E0, Emax, Emax / E0)};
}

Outcome moser() {
    const auto& ref = reference();
    if (!ref.summary.moser) return {false, "no Moser report"};
    const auto& m = *ref.summary.moser;
    bool finite = m.E.size() >= 7;
    for (double e : m.E) finite &= std::isfinite(e);
    for (double b : m.level_bounds) finite &= std::isfinite(b);
    return {finite && m.measured_sup <= m.predicted_bound,
            fmt("measured sup %.4g, predicted bound %.4g, E_6 %.4g", m.measured_sup, m.predicted_bound,
                m.E.size() > 6 ? m.E[6] : NAN)};
}

Outcome solver_contract() {
    const auto manufactured = check_manufactured(9, 3);
    std::mt19937_64 rng(2025);
    std::uniform_real_distribution<double> U(0.0, 1.0), V(-1.0, 1.0);
    Grid3 g(9, 0.3);
    CoulombOperator op(g, Backend::spectral);
    auto smooth = [&](double offset, double amp) {
        double c[4][5];
        for (auto& row : c)
            for (auto& v : row) v = V(rng);
        const double L = g.half_extent();
        return ScalarField::sample(g, [&](double x, double y, double z) {
            double s = offset;
            for (auto& row : c)
                s += amp * row[0] * std::cos(std::numbers::pi / L * (row[1] * x + row[2] * y + row[3] * z) + 3 * row[4]);
            return s;
        });
    };
    int monotone = 0, converged = 0;
    for (int trial = 0; trial < 100; ++trial) {
        SchemeParams p;
        p.tau = std::pow(2.0, -2.0 - 6.0 * U(rng));
        const auto z = smooth(-2.0 + 2.0 * U(rng), 0.5);
        ScalarField ez(g);
        for (std::size_t i = 0; i < g.size(); ++i) ez[i] = std::exp(z[i]);
        InnerProblem P = InnerProblem::monotone(op.potential(ez), z, p.tau);
        P.rhs = P.apply(smooth(-1.0, 1.0)).values;
        try {
            const auto res = solve_inner(P, smooth(-1.0, 1.5), p);
            converged += res.residual_inf <= p.newton_tol;
            bool dec = true;
            for (std::size_t i = 1; i < res.residual_history.size(); ++i)
                dec &= res.residual_history[i] < res.residual_history[i - 1];
            monotone += dec;
        } catch (const NonConvergence&) {
        }
    }
    return {manufactured.pass && monotone == 100 && converged == 100,
            fmt("manufactured error %.2e; %.0f/100 converged, %.0f/100 strictly decreasing", manufactured.value,
                converged, monotone)};
}

Outcome reproducibility() {
    const auto& ref = reference();
    const auto a = (scratch() / "reference").string();
    const auto b = (scratch() / "repeat").string();
    const auto c = (scratch() / "resumed").string();
    const auto tb = reference_text(b), tc = reference_text(c);
    run(parse_config(tb), tb);
    bool identical = read_file(a + "/diagnostics.csv") == read_file(b + "/diagnostics.csv");
    for (long k = 0; k <= ref.summary.total_steps; ++k)
        identical &= read_file(snapshot_path(a, k)) == read_file(snapshot_path(b, k));

    run(parse_config(tc), tc, RunOptions{7});
    resume(c);
    const auto rc = read_csv(c + "/diagnostics.csv");
    double worst = rc.rows.size() == ref.csv.rows.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; std::isfinite(worst) && i < rc.rows.size(); ++i)
        for (std::size_t j = 0; j < rc.rows[i].size(); ++j) {
            const double x = ref.csv.rows[i][j], y = rc.rows[i][j];
            if (std::isnan(x) && std::isnan(y)) continue;
            worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(x)));
        }
    return {identical && worst <= kResumeTol,
            std::string(identical ? "CSV and snapshots bit-identical" : "outputs differ") +
                fmt(", resume from step 7 max relative deviation %.2e", worst)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"coulomb correctness", coulomb},
        {"entropy monotonicity", entropy_monotone},
        {"mass drift scaling", mass_drift},
        {"evenness preservation", parity},
        {"dissipation identity", dissipation_identity},
        {"inequality audits", audits},
        {"second moment bound", second_moment},
        {"moser monitor", moser},
        {"solver contract", solver_contract},
        {"reproducibility", reproducibility},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("[%s] %2zu %-22s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    fs::remove_all(scratch());
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
