#pragma once

#include <filesystem>
#include <string>

#include "qmag/experiment.hpp"
#include "qmag/truth.hpp"

namespace qmag::io {

/// Shortest round-trip decimal form of a double (17 significant digits).
std::string format_double(double v);

/// Record file: comment header with the run metadata, then one line per
/// (step, channel) with the raw increment.
void write_record_csv(const MeasurementRecord& rec, const std::filesystem::path& path);
MeasurementRecord read_record_csv(const std::filesystem::path& path);

/// The decimated true trajectory as t,rx,ry,rz.
void write_trajectory_csv(const Trajectory<Vec3>& traj, const std::filesystem::path& path);

/// t,mean_cos_theta,ci_low,ci_high,n_completed.
void write_ensemble_csv(const EnsembleResult& res, const std::filesystem::path& path);

/// t,cos_theta[,p_true] series of a single filter pass.
void write_single_shot_csv(const SingleShotResult& res, const std::filesystem::path& path);

/// Posterior snapshots: t,k,bx,by,bz,P_k (one block of N rows per time).
void write_snapshots_csv(const SingleShotResult& res, const std::filesystem::path& path);

/// Config / manifest (same JSON schema; a manifest re-runs as a config).
ExperimentConfig config_from_json_file(const std::filesystem::path& path);
void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

}  // namespace qmag::io
