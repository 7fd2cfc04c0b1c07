#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "landau/config.hpp"
#include "landau/coulomb.hpp"
#include "landau/errors.hpp"
#include "landau/run.hpp"
#include "landau/snapshot.hpp"
#include "landau/verify.hpp"

using namespace landau;

namespace {

void print_summary(const RunSummary& s) {
    std::printf("output      %s\n", s.output_dir.c_str());
    std::printf("config hash %s\n", s.config_hash.c_str());
    std::printf("steps       %ld / %ld%s\n", s.steps_completed, s.total_steps, s.complete ? " (complete)" : "");
    for (const auto& [name, t] : s.audits)
        std::printf("audit %-22s %ld/%ld passed, worst slack %.3e at step %ld\n", name.c_str(), t.passed, t.evaluated,
                    t.worst_slack, t.worst_step);
    if (s.moser)
        std::printf("moser       sup %.4g <= bound %.4g (margin %.3g)\n", s.moser->measured_sup,
                    s.moser->predicted_bound, s.moser->margin);
    if (s.poincare) std::printf("poincare    c_eps %.6g\n", s.poincare->c_eps);
    std::printf("wall clock  %.2fs\n", s.wall_clock_seconds);
}

int oracle(const std::string& path, std::string out) {
    const Snapshot snap = read_snapshot(path);
    const ScalarField u = snap.field();
    CoulombOperator direct(snap.grid, Backend::direct);
    CoulombOperator spectral(snap.grid, Backend::spectral);
    const ScalarField a = direct.potential(u);
    const ScalarField b = spectral.potential(u);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(a[i]));
    }
    if (out.empty()) out = path + ".potential";
    write_snapshot(out, Snapshot{snap.grid, snap.k, snap.t, a.values});
    std::printf("direct-sum potential written to %s\n", out.c_str());
    std::printf("spectral vs direct: max relative difference %.3e\n", den > 0 ? num / den : num);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal Landau-type equation solver"};
    app.require_subcommand(1);

    std::string config_path, dir, snap_path, oracle_out;
    long stop_after = -1;
    int size = 9;
    bool perturb = false;

    auto* run_cmd = app.add_subcommand("run", "run a configuration");
    run_cmd->add_option("config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--stop-after", stop_after, "stop after writing this step");

    auto* resume_cmd = app.add_subcommand("resume", "continue a run from its last snapshot");
    resume_cmd->add_option("dir", dir, "output directory")->required()->check(CLI::ExistingDirectory);
    resume_cmd->add_option("--stop-after", stop_after, "stop after writing this step");

    auto* verify_cmd = app.add_subcommand("verify", "run the built-in oracle suite");
    verify_cmd->add_option("--size", size, "odd grid size for the solver and equivalence checks");
    verify_cmd->add_flag("--perturb-kernel", perturb, "scale the Coulomb kernel by 1.05 (checks that verify fails)");

    auto* oracle_cmd = app.add_subcommand("oracle", "direct-sum Coulomb potential of a snapshot");
    oracle_cmd->add_option("snapshot", snap_path, "density snapshot")->required()->check(CLI::ExistingFile);
    oracle_cmd->add_option("--out", oracle_out, "output snapshot (default <snapshot>.potential)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const RunConfig cfg = load_config(config_path);
            const auto s = run(cfg, read_file(config_path), RunOptions{stop_after});
            print_summary(s);
            return s.all_audits_pass() ? 0 : 3;
        }
        if (*resume_cmd) {
            const auto s = resume(dir, RunOptions{stop_after});
            print_summary(s);
            return s.all_audits_pass() ? 0 : 3;
        }
        if (*verify_cmd) {
            VerifyOptions opt;
            opt.size = size;
            if (perturb) opt.kernel_perturbation = 0.05;
            const auto rep = verify(opt);
            std::cout << rep.text();
            return rep.ok() ? 0 : 1;
        }
        if (*oracle_cmd) return oracle(snap_path, oracle_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NonConvergence& e) {
        std::cerr << "solver did not converge: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
