#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmag/bloch.hpp"
#include "qmag/density_matrix.hpp"
#include "qmag/sde.hpp"

namespace qmag {

/// Immutable homodyne record produced by the truth simulator. The filter
/// side only ever sees the increments (spans of dY); the true field is
/// private and exposed solely for scoring.
class MeasurementRecord {
  public:
    MeasurementRecord(double dt, Vec3 alpha, Vec3 eta, std::vector<Vec3> dY, std::uint64_t seed,
                      Vec3 b_true)
        : dt_(dt), alpha_(alpha), eta_(eta), dY_(std::move(dY)), seed_(seed), b_true_(b_true) {}

    double dt() const { return dt_; }
    long steps() const { return static_cast<long>(dY_.size()); }
    const Vec3& alpha() const { return alpha_; }
    const Vec3& eta() const { return eta_; }
    const std::vector<Vec3>& increments() const { return dY_; }
    std::uint64_t seed() const { return seed_; }

    /// Scoring/bookkeeping only; the filter path must not call this.
    const Vec3& true_field() const { return b_true_; }

  private:
    double dt_;
    Vec3 alpha_, eta_;
    std::vector<Vec3> dY_;
    std::uint64_t seed_;
    Vec3 b_true_;
};

struct TruthRun {
    MeasurementRecord record;
    Trajectory<Vec3> trajectory;  // decimated true Bloch trajectory
};

/// Plays the laboratory: steps the true state and emits the record
///   dY_n = sqrt(eta_n) dW_n + eta_n sqrt(alpha_n) 2 r_n dt
/// at every step (undecimated; the filter consumes raw increments).
inline TruthRun simulate_record(const Vec3& b_true, const Vec3& r0, const ProbeVectors& pv,
                                const StepConfig& cfg, RandomStream& rs) {
    cfg.validate();
    pv.validate();
    if (norm2(r0) > 1.0 + 1e-12) throw std::invalid_argument("r0 outside unit ball");

    std::vector<Vec3> dY;
    dY.reserve(static_cast<std::size_t>(cfg.steps()));
    const double guard = norm_guard(cfg.dt);

    auto step = [&](const Vec3& r, std::span<const double> dw, double dt) {
        Vec3 incr;
        const Vec3 next = true_step(r, b_true, pv, {dw[0], dw[1], dw[2]}, dt, &incr);
        dY.push_back(incr);
        return next;
    };
    auto check = [&](Vec3& r) -> std::optional<std::string> {
        const ClampResult c = clamp_norm(r, guard);
        if (c.unstable) return "true state left the Bloch ball";
        return std::nullopt;
    };
    Trajectory<Vec3> traj = run_trajectory(r0, 3, step, check, cfg, rs);
    if (!traj.status.completed) dY.resize(static_cast<std::size_t>(traj.status.failed_step));
    return {MeasurementRecord(cfg.dt, pv.alpha, pv.eta, std::move(dY), rs.seed(), b_true),
            std::move(traj)};
}

/// Same protocol through the density-matrix oracle; for cross-checks.
inline TruthRun simulate_record_dm(const Vec3& b_true, const Vec3& r0, const ProbeVectors& pv,
                                   const StepConfig& cfg, RandomStream& rs) {
    cfg.validate();
    pv.validate();
    const std::vector<ProbeChannel> probes = cartesian_probes(pv.alpha, pv.eta);
    std::vector<Vec3> dY;
    dY.reserve(static_cast<std::size_t>(cfg.steps()));
    const double guard = norm_guard(cfg.dt);

    auto step = [&](const DensityMatrix2& rho, std::span<const double> dw, double dt) {
        OracleStep s = sme_true_step(rho, b_true, probes, dw, dt);
        dY.push_back({s.dY[0], s.dY[1], s.dY[2]});
        return s.rho;
    };
    auto check = [&](DensityMatrix2& rho) -> std::optional<std::string> {
        Vec3 r = rho.bloch();
        const ClampResult c = clamp_norm(r, guard);
        if (c.unstable) return "oracle state left the Bloch ball";
        if (c.repaired) rho = DensityMatrix2::from_bloch(r);
        return std::nullopt;
    };
    Trajectory<DensityMatrix2> traj =
        run_trajectory(DensityMatrix2::from_bloch(r0), 3, step, check, cfg, rs);
    if (!traj.status.completed) dY.resize(static_cast<std::size_t>(traj.status.failed_step));

    Trajectory<Vec3> bloch_traj;
    bloch_traj.times = traj.times;
    bloch_traj.status = traj.status;
    bloch_traj.states.reserve(traj.states.size());
    for (const DensityMatrix2& rho : traj.states) bloch_traj.states.push_back(rho.bloch());
    return {MeasurementRecord(cfg.dt, pv.alpha, pv.eta, std::move(dY), rs.seed(), b_true),
            std::move(bloch_traj)};
}

}  // namespace qmag
