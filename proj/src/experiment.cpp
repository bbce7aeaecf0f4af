#include "qmag/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace qmag {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::two_direction: return "two-direction";
        case Scenario::sphere_grid: return "sphere-grid";
        case Scenario::custom: return "custom";
    }
    throw std::logic_error("bad scenario");
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "two-direction") return Scenario::two_direction;
    if (s == "sphere-grid") return Scenario::sphere_grid;
    if (s == "custom") return Scenario::custom;
    throw std::invalid_argument("unknown scenario: " + s);
}

SphereGrid build_sphere_grid(int n_theta, int n_phi) {
    if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("grid counts must be >= 1");
    constexpr double kPi = 3.14159265358979323846;
    SphereGrid g{n_theta, n_phi, {}};
    g.directions.reserve(static_cast<std::size_t>(n_theta) * n_phi);
    for (int i = 1; i <= n_theta; ++i) {
        const double theta = kPi * i / (n_theta + 1);
        const double st = std::sin(theta), ct = std::cos(theta);
        for (int j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * kPi * j / n_phi;
            g.directions.push_back({st * std::cos(phi), st * std::sin(phi), ct});
        }
    }
    return g;
}

void ExperimentConfig::validate() const {
    step.validate();
    probes.validate();
    if (!(field_magnitude > 0.0)) throw std::invalid_argument("field magnitude must be > 0");
    if (std::abs(norm(true_direction) - 1.0) > 1e-9)
        throw std::invalid_argument("true direction must be a unit vector");
    if (norm2(r0) > 1.0 + 1e-12) throw std::invalid_argument("r0 outside unit ball");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (scenario == Scenario::sphere_grid && (sphere_n_theta < 1 || sphere_n_phi < 1))
        throw std::invalid_argument("sphere grid counts must be >= 1");
    if (scenario == Scenario::custom && custom_candidates.size() < 1)
        throw std::invalid_argument("custom scenario needs candidates");
}

CandidateSet ExperimentConfig::candidates() const {
    CandidateSet cs;
    switch (scenario) {
        case Scenario::two_direction:
            cs.fields = {true_direction * field_magnitude, true_direction * -field_magnitude};
            break;
        case Scenario::sphere_grid: {
            const SphereGrid g = build_sphere_grid(sphere_n_theta, sphere_n_phi);
            cs.fields.reserve(g.directions.size());
            for (const Vec3& d : g.directions) cs.fields.push_back(d * field_magnitude);
            break;
        }
        case Scenario::custom:
            cs.fields = custom_candidates;
            break;
    }
    return cs;
}

int ExperimentConfig::true_candidate_index() const {
    const CandidateSet cs = candidates();
    const Vec3 bu = true_field();
    int best = 0;
    double best_d = norm2(cs.fields[0] - bu);
    for (std::size_t k = 1; k < cs.fields.size(); ++k) {
        const double d = norm2(cs.fields[k] - bu);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

namespace {

// Filter replay over raw increments with decimated scoring. Shared by the
// single-shot and ensemble paths so both use identical arithmetic.
SingleShotResult replay(const ExperimentConfig& cfg, const MeasurementRecord& rec,
                        const Vec3& b_true) {
    ProbeVectors pv{rec.alpha(), rec.eta()};
    StepConfig step = cfg.step;
    step.dt = rec.dt();
    step.horizon = static_cast<double>(rec.steps()) * step.dt;  // replay the whole record
    const double dt = step.dt;
    const double guard = norm_guard(dt);
    const int stride = step.effective_stride();

    SingleShotResult out;
    out.candidates = cfg.candidates();
    AugmentedState aug = AugmentedState::uniform_prior(out.candidates, cfg.r0);

    // scoring index: nearest candidate to the true field
    int k0 = 0;
    double best = norm2(aug.candidates.fields[0] - b_true);
    for (std::size_t k = 1; k < aug.candidates.fields.size(); ++k) {
        const double d = norm2(aug.candidates.fields[k] - b_true);
        if (d < best) {
            best = d;
            k0 = static_cast<int>(k);
        }
    }

    std::vector<double> snap_times = cfg.snapshot_times;
    std::sort(snap_times.begin(), snap_times.end());
    std::size_t next_snap = 0;
    auto take_snapshots_up_to = [&](double t) {
        while (next_snap < snap_times.size() && snap_times[next_snap] <= t + 1e-12) {
            out.snapshots.push_back({snap_times[next_snap], aug.P});
            ++next_snap;
        }
    };

    out.times.push_back(0.0);
    out.cos_theta.push_back(cos_theta(aug, b_true));
    out.p_true.push_back(aug.P[static_cast<std::size_t>(k0)]);
    take_snapshots_up_to(0.0);

    const std::vector<Vec3>& dY = rec.increments();
    const long n = rec.steps();
    for (long i = 0; i < n; ++i) {
        const FilterStepInfo info = filter_step(aug, dY[static_cast<std::size_t>(i)], pv, dt, guard);
        if (info.unstable) {
            out.status = TrajectoryStatus::unstable(i, info.reason);
            return out;
        }
        if (info.repaired > 0) ++out.repaired_steps;
        const double t = static_cast<double>(i + 1) * dt;
        if ((i + 1) % stride == 0 || i + 1 == n) {
            out.times.push_back(t);
            out.cos_theta.push_back(cos_theta(aug, b_true));
            out.p_true.push_back(aug.P[static_cast<std::size_t>(k0)]);
        }
        take_snapshots_up_to(t);
    }
    out.final_P = aug.P;
    out.map_index = map_estimate(aug);
    out.status = TrajectoryStatus::ok();
    return out;
}

}  // namespace

SingleShotResult run_filter_pass(const ExperimentConfig& cfg, const MeasurementRecord& record,
                                 const Vec3& b_true) {
    cfg.validate();
    return replay(cfg, record, b_true);
}

SingleShotResult run_single_shot(const ExperimentConfig& cfg) {
    cfg.validate();
    RandomStream rs(cfg.seed);
    TruthRun truth = simulate_record(cfg.true_field(), cfg.r0, cfg.probes, cfg.step, rs);
    if (!truth.trajectory.status.completed) {
        SingleShotResult out;
        out.status = truth.trajectory.status;
        return out;
    }
    return replay(cfg, truth.record, cfg.true_field());
}

EnsembleResult run_ensemble(const ExperimentConfig& cfg) {
    cfg.validate();
    const int trials = cfg.trials;

    EnsembleResult res;
    res.trials = trials;
    res.seeds.reserve(static_cast<std::size_t>(trials));
    for (int i = 0; i < trials; ++i) res.seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));

    // one result slot per trial: aggregation order is fixed by index, so the
    // outcome does not depend on thread scheduling
    std::vector<SingleShotResult> slots(static_cast<std::size_t>(trials));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= trials) return;
            ExperimentConfig c = cfg;
            c.seed = res.seeds[static_cast<std::size_t>(i)];
            slots[static_cast<std::size_t>(i)] = run_single_shot(c);
        }
    };
    int nthreads = cfg.threads > 0 ? cfg.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
    nthreads = std::max(1, std::min(nthreads, trials));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    // completed curves share the time grid; rejected runs are excluded from
    // every statistic and only counted
    const SingleShotResult* first_ok = nullptr;
    for (const SingleShotResult& s : slots) {
        if (s.status.completed) {
            first_ok = &s;
            break;
        }
    }
    res.rejected = 0;
    for (const SingleShotResult& s : slots)
        if (!s.status.completed) ++res.rejected;
    res.completed = trials - res.rejected;
    const double rej_rate = static_cast<double>(res.rejected) / trials;
    if (rej_rate > cfg.max_rejection_rate)
        throw std::runtime_error("rejection rate " + std::to_string(rej_rate) +
                                 " exceeds threshold; decrease dt");
    if (!first_ok) throw std::runtime_error("no completed trajectories");

    res.times = first_ok->times;
    const std::size_t nt = res.times.size();
    const std::size_t nc = static_cast<std::size_t>(res.completed);

    // column-major store of completed curves for the bootstrap
    std::vector<double> cos_flat(nc * nt), p_flat(nc * nt);
    std::size_t c = 0;
    for (const SingleShotResult& s : slots) {
        if (!s.status.completed) continue;
        for (std::size_t j = 0; j < nt; ++j) {
            cos_flat[c * nt + j] = s.cos_theta[j];
            p_flat[c * nt + j] = s.p_true[j];
        }
        ++c;
    }

    res.mean_cos_theta.assign(nt, 0.0);
    res.mean_p_true.assign(nt, 0.0);
    res.se_p_true.assign(nt, 0.0);
    for (std::size_t i = 0; i < nc; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
            res.mean_cos_theta[j] += cos_flat[i * nt + j];
            res.mean_p_true[j] += p_flat[i * nt + j];
        }
    for (std::size_t j = 0; j < nt; ++j) {
        res.mean_cos_theta[j] /= static_cast<double>(nc);
        res.mean_p_true[j] /= static_cast<double>(nc);
    }
    for (std::size_t i = 0; i < nc; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
            const double d = p_flat[i * nt + j] - res.mean_p_true[j];
            res.se_p_true[j] += d * d;
        }
    for (std::size_t j = 0; j < nt; ++j)
        res.se_p_true[j] = nc > 1 ? std::sqrt(res.se_p_true[j] / (static_cast<double>(nc) *
                                                                  static_cast<double>(nc - 1)))
                                  : 0.0;

    // bootstrap 95% band on the mean cos(theta) curve: resample whole
    // trajectories, pointwise percentiles
    const int B = cfg.bootstrap_resamples;
    if (B > 0 && nc > 1) {
        RandomStream brs(RandomStream::splitmix64(cfg.seed) ^ 0x626f6f7473747261ULL);
        std::vector<double> acc(nt);
        std::vector<std::vector<double>> boot(nt, std::vector<double>(static_cast<std::size_t>(B)));
        for (int b = 0; b < B; ++b) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t i = 0; i < nc; ++i) {
                std::size_t idx = static_cast<std::size_t>(brs.uniform() * static_cast<double>(nc));
                if (idx >= nc) idx = nc - 1;
                const double* row = &cos_flat[idx * nt];
                for (std::size_t j = 0; j < nt; ++j) acc[j] += row[j];
            }
            for (std::size_t j = 0; j < nt; ++j)
                boot[j][static_cast<std::size_t>(b)] = acc[j] / static_cast<double>(nc);
        }
        res.ci_low.resize(nt);
        res.ci_high.resize(nt);
        const std::size_t lo = static_cast<std::size_t>(std::floor(0.025 * (B - 1)));
        const std::size_t hi = static_cast<std::size_t>(std::ceil(0.975 * (B - 1)));
        for (std::size_t j = 0; j < nt; ++j) {
            std::sort(boot[j].begin(), boot[j].end());
            res.ci_low[j] = boot[j][lo];
            res.ci_high[j] = boot[j][hi];
        }
    } else {
        res.ci_low = res.mean_cos_theta;
        res.ci_high = res.mean_cos_theta;
    }
    return res;
}

}  // namespace qmag
