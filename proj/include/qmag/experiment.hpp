#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qmag/filter.hpp"
#include "qmag/sde.hpp"
#include "qmag/truth.hpp"

namespace qmag {

enum class Scenario { two_direction, sphere_grid, custom };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

/// Candidate directions on a latitude/longitude grid:
///   theta_i = pi i/(N_theta+1), i = 1..N_theta  (poles excluded),
///   phi_j   = 2 pi j/N_phi,     j = 0..N_phi-1.
struct SphereGrid {
    int n_theta = 0;
    int n_phi = 0;
    std::vector<Vec3> directions;  // unit vectors, size n_theta * n_phi
};

SphereGrid build_sphere_grid(int n_theta, int n_phi);

/// Everything needed to reproduce one experiment run.
struct ExperimentConfig {
    Scenario scenario = Scenario::two_direction;
    double field_magnitude = 1.5;      // |b|, dimensionless
    Vec3 true_direction{1, 0, 0};      // unit vector
    ProbeVectors probes{{1, 1, 1}, {1, 1, 1}};
    Vec3 r0{0, 1, 0};                  // initial state, truth and all candidates
    StepConfig step;                   // dt, horizon, decimation
    int trials = 1;
    std::uint64_t seed = 1;
    int threads = 0;                   // 0 = hardware concurrency
    int sphere_n_theta = 7;
    int sphere_n_phi = 14;
    std::vector<Vec3> custom_candidates;          // used when scenario == custom
    std::vector<double> snapshot_times{0, 1, 3, 5, 15};
    int bootstrap_resamples = 1000;
    double max_rejection_rate = 0.20;  // abort threshold for ensembles
    std::string out_dir = "out";

    void validate() const;
    Vec3 true_field() const { return true_direction * field_magnitude; }
    /// Candidate fields for the configured scenario (all with |b_k| = |b|).
    CandidateSet candidates() const;
    /// Index of the candidate nearest the true field (scoring only).
    int true_candidate_index() const;
};

struct PosteriorSnapshot {
    double t = 0.0;
    std::vector<double> P;
};

/// One record + one filter pass.
struct SingleShotResult {
    std::vector<double> times;
    std::vector<double> cos_theta;      // same grid as times
    std::vector<double> p_true;         // posterior mass on the true candidate
    std::vector<PosteriorSnapshot> snapshots;
    CandidateSet candidates;
    std::vector<double> final_P;
    int map_index = -1;
    long repaired_steps = 0;            // steps where some |r| was rescaled
    TrajectoryStatus status;
};

SingleShotResult run_single_shot(const ExperimentConfig& cfg);

/// Replay an existing record through the augmented filter (no truth sim).
/// The record's alpha/eta/dt override the config's; scoring uses b_true.
SingleShotResult run_filter_pass(const ExperimentConfig& cfg, const MeasurementRecord& record,
                                 const Vec3& b_true);

/// Ensemble statistics over independent (record, filter) pairs.
struct EnsembleResult {
    std::vector<double> times;
    std::vector<double> mean_cos_theta;
    std::vector<double> ci_low, ci_high;       // bootstrap 95% band
    std::vector<double> mean_p_true;           // mean posterior on true candidate
    std::vector<double> se_p_true;             // standard error of that mean
    int trials = 0;
    int completed = 0;
    int rejected = 0;
    std::vector<std::uint64_t> seeds;          // per-trial streams, seed + i
};

EnsembleResult run_ensemble(const ExperimentConfig& cfg);

}  // namespace qmag
