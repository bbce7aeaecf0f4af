// Command-line front end: simulate truth records, replay them through the
// augmented filter, or run end-to-end ensemble experiments.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qmag/experiment.hpp"
#include "qmag/io.hpp"

namespace {

using namespace qmag;

Vec3 as_vec3(const std::vector<double>& v, const char* what) {
    if (v.size() != 3) throw CLI::ValidationError(std::string(what) + " needs 3 components");
    return {v[0], v[1], v[2]};
}

struct ConfigFlags {
    std::string config_path;
    std::string scenario;
    double field_magnitude = 0.0;
    std::vector<double> true_direction, alpha, eta, r0;
    double dt = 0.0, horizon = 0.0;
    int trials = 0, threads = -1, stride = -1, target_points = 0;
    std::uint64_t seed = 0;
    int n_theta = 0, n_phi = 0;
    std::vector<double> snapshot_times;
    int bootstrap = -1;
    double max_rejection = -1.0;
    std::string out_dir;
    std::vector<std::vector<double>> candidates;

    // every option is registered here so that values given on the command
    // line override the config file, and only those
    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON config / manifest file");
        app->add_option("--scenario", scenario, "two-direction | sphere-grid | custom");
        app->add_option("--field-magnitude,-b", field_magnitude, "|b| (dimensionless)");
        app->add_option("--true-direction", true_direction, "unit vector, comma separated")
            ->delimiter(',');
        app->add_option("--alpha", alpha, "probe strengths alpha_x,alpha_y,alpha_z")
            ->delimiter(',');
        app->add_option("--eta", eta, "detector efficiencies eta_x,eta_y,eta_z")->delimiter(',');
        app->add_option("--r0", r0, "initial Bloch vector")->delimiter(',');
        app->add_option("--dt", dt, "time step (units of 1/M)");
        app->add_option("--horizon,-T", horizon, "total time (units of 1/M)");
        app->add_option("--trials", trials, "ensemble size");
        app->add_option("--seed", seed, "seed base; trial i uses seed+i");
        app->add_option("--threads", threads, "worker threads (0 = hardware)");
        app->add_option("--stride", stride, "record every k-th step (0 = auto)");
        app->add_option("--target-points", target_points, "auto-stride target sample count");
        app->add_option("--sphere-n-theta", n_theta, "polar grid points");
        app->add_option("--sphere-n-phi", n_phi, "azimuthal grid points");
        app->add_option("--snapshot-times", snapshot_times, "posterior snapshot times")
            ->delimiter(',');
        app->add_option("--bootstrap-resamples", bootstrap, "bootstrap resamples for the band");
        app->add_option("--max-rejection-rate", max_rejection, "ensemble abort threshold");
        app->add_option("--out-dir", out_dir, "output directory");
        app->add_option("--candidate", candidates, "explicit candidate field bx,by,bz (repeat)")
            ->delimiter(',');
    }

    ExperimentConfig build(const CLI::App* app) const {
        ExperimentConfig cfg;
        if (app->count("--config")) cfg = io::config_from_json_file(config_path);
        if (app->count("--scenario")) cfg.scenario = scenario_from_string(scenario);
        if (app->count("--field-magnitude")) cfg.field_magnitude = field_magnitude;
        if (app->count("--true-direction"))
            cfg.true_direction = normalized(as_vec3(true_direction, "--true-direction"));
        if (app->count("--alpha")) cfg.probes.alpha = as_vec3(alpha, "--alpha");
        if (app->count("--eta")) cfg.probes.eta = as_vec3(eta, "--eta");
        if (app->count("--r0")) cfg.r0 = as_vec3(r0, "--r0");
        if (app->count("--dt")) cfg.step.dt = dt;
        if (app->count("--horizon")) cfg.step.horizon = horizon;
        if (app->count("--trials")) cfg.trials = trials;
        if (app->count("--seed")) cfg.seed = seed;
        if (app->count("--threads")) cfg.threads = threads;
        if (app->count("--stride")) cfg.step.stride = stride;
        if (app->count("--target-points")) cfg.step.target_points = target_points;
        if (app->count("--sphere-n-theta")) cfg.sphere_n_theta = n_theta;
        if (app->count("--sphere-n-phi")) cfg.sphere_n_phi = n_phi;
        if (app->count("--snapshot-times")) cfg.snapshot_times = snapshot_times;
        if (app->count("--bootstrap-resamples")) cfg.bootstrap_resamples = bootstrap;
        if (app->count("--max-rejection-rate")) cfg.max_rejection_rate = max_rejection;
        if (app->count("--out-dir")) cfg.out_dir = out_dir;
        if (app->count("--candidate")) {
            cfg.custom_candidates.clear();
            for (const auto& c : candidates) cfg.custom_candidates.push_back(as_vec3(c, "--candidate"));
        }
        return cfg;
    }
};

int cmd_simulate(const ExperimentConfig& cfg, bool with_trajectory) {
    cfg.validate();
    const std::filesystem::path dir = cfg.out_dir;
    RandomStream rs(cfg.seed);
    TruthRun truth = simulate_record(cfg.true_field(), cfg.r0, cfg.probes, cfg.step, rs);
    io::write_record_csv(truth.record, dir / "record.csv");
    if (with_trajectory) io::write_trajectory_csv(truth.trajectory, dir / "truth.csv");
    if (!truth.trajectory.status.completed) {
        std::cerr << "unstable at step " << truth.trajectory.status.failed_step << ": "
                  << truth.trajectory.status.reason << "\n";
        return 2;
    }
    std::cout << "record: " << (dir / "record.csv").string() << " (" << truth.record.steps()
              << " steps)\n";
    return 0;
}

int cmd_filter(const ExperimentConfig& cfg, const std::string& record_path) {
    const std::filesystem::path dir = cfg.out_dir;
    const MeasurementRecord rec = io::read_record_csv(record_path);
    const SingleShotResult res = run_filter_pass(cfg, rec, rec.true_field());
    io::write_single_shot_csv(res, dir / "filter.csv");
    io::write_snapshots_csv(res, dir / "posterior.csv");
    if (!res.status.completed) {
        std::cerr << "unstable at step " << res.status.failed_step << ": " << res.status.reason
                  << "\n";
        return 2;
    }
    std::cout << "cos(theta) at T = " << io::format_double(res.cos_theta.back())
              << ", MAP candidate " << res.map_index << "\n";
    return 0;
}

int cmd_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::filesystem::path dir = cfg.out_dir;
    io::write_manifest(cfg, dir / "manifest.json");
    if (cfg.trials == 1) {
        const SingleShotResult res = run_single_shot(cfg);
        if (!res.status.completed) {
            std::cerr << "unstable at step " << res.status.failed_step << ": " << res.status.reason
                      << "\n";
            return 2;
        }
        io::write_single_shot_csv(res, dir / "single_shot.csv");
        io::write_snapshots_csv(res, dir / "posterior.csv");
        std::cout << "cos(theta) at T = " << io::format_double(res.cos_theta.back())
                  << ", MAP candidate " << res.map_index << "\n";
        return 0;
    }
    const EnsembleResult res = run_ensemble(cfg);
    io::write_ensemble_csv(res, dir / "ensemble.csv");
    std::cout << "completed " << res.completed << "/" << res.trials << " (rejected "
              << res.rejected << "), final mean cos(theta) = "
              << io::format_double(res.mean_cos_theta.back()) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continuous weak-measurement magnetometry: truth simulator and augmented filter"};
    app.require_subcommand(1);

    ConfigFlags sim_flags, filt_flags, exp_flags;
    bool with_traj = false;
    std::string record_path;

    CLI::App* sim = app.add_subcommand("simulate", "generate a truth record");
    sim_flags.attach(sim);
    sim->add_flag("--trajectory", with_traj, "also write the decimated true trajectory");

    CLI::App* filt = app.add_subcommand("filter", "replay a record through the filter");
    filt_flags.attach(filt);
    filt->add_option("--record", record_path, "record CSV produced by `simulate`")->required();

    CLI::App* exp = app.add_subcommand("experiment", "end-to-end single shot or ensemble");
    exp_flags.attach(exp);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_flags.build(sim), with_traj);
        if (filt->parsed()) return cmd_filter(filt_flags.build(filt), record_path);
        return cmd_experiment(exp_flags.build(exp));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
