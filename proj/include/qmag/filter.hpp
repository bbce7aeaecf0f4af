#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmag/bloch.hpp"

namespace qmag {

/// The finite set of candidate field vectors b_k.
struct CandidateSet {
    std::vector<Vec3> fields;

    std::size_t size() const { return fields.size(); }

    void validate() const {
        if (fields.size() < 1) throw std::invalid_argument("candidate set is empty");
    }
};

/// Augmented filter state: one conditional Bloch vector per candidate
/// field plus the posterior simplex over the candidates.
struct AugmentedState {
    CandidateSet candidates;
    std::vector<Vec3> r;    // conditional state per candidate
    std::vector<double> P;  // posterior, P_k >= 0, sum = 1

    static AugmentedState uniform_prior(CandidateSet cs, const Vec3& r0) {
        cs.validate();
        const std::size_t n = cs.size();
        AugmentedState a{std::move(cs), std::vector<Vec3>(n, r0),
                         std::vector<double>(n, 1.0 / static_cast<double>(n))};
        return a;
    }

    static AugmentedState with_prior(CandidateSet cs, const Vec3& r0, std::vector<double> prior) {
        cs.validate();
        const std::size_t n = cs.size();
        if (prior.size() != n) throw std::invalid_argument("prior size mismatch");
        double s = 0.0;
        for (double p : prior) {
            if (p < 0.0) throw std::invalid_argument("prior weights must be >= 0");
            s += p;
        }
        if (!(s > 0.0)) throw std::invalid_argument("prior must have positive mass");
        for (double& p : prior) p /= s;
        return {std::move(cs), std::vector<Vec3>(n, r0), std::move(prior)};
    }
};

/// <sigma_n + sigma_n+>_E = 2 sum_k P_k r_k,n for probe axis n.
inline double ensemble_expectation(const AugmentedState& aug, int axis) {
    double s = 0.0;
    for (std::size_t k = 0; k < aug.P.size(); ++k) s += aug.P[k] * aug.r[k][axis];
    return 2.0 * s;
}

struct FilterStepInfo {
    double simplex_drift = 0.0;  // sum_k dP_k before clamping (identically 0 in exact arithmetic)
    int repaired = 0;            // candidates whose |r| was rescaled to 1
    bool unstable = false;
    std::string reason;
};

/// One filter update from one record increment vector dY.
///
/// (1) every candidate state advances by its own conditional SDE driven by
///     the record, (2) the posterior moves by
///         dP_k = P_k sum_n sqrt(alpha_n) (2 r_k,n - <.>_E) dV_n,
///         dV_n = dY_n - eta_n sqrt(alpha_n) <.>_E dt,
///     with all coefficients evaluated before the update (Ito), and
/// (3) P is clamped to >= 0 and renormalized.
inline FilterStepInfo filter_step(AugmentedState& aug, const Vec3& dY, const ProbeVectors& pv,
                                  double dt, double guard) {
    const std::size_t N = aug.P.size();
    FilterStepInfo info;

    const Vec3 sE{ensemble_expectation(aug, 0), ensemble_expectation(aug, 1),
                  ensemble_expectation(aug, 2)};
    Vec3 sqrt_a, dV;
    for (int n = 0; n < 3; ++n) {
        sqrt_a[n] = std::sqrt(pv.alpha[n]);
        dV[n] = dY[n] - pv.eta[n] * sqrt_a[n] * sE[n] * dt;
    }

    // posterior increments from the pre-update states
    std::vector<double> dP(N);
    for (std::size_t k = 0; k < N; ++k) {
        double g = 0.0;
        for (int n = 0; n < 3; ++n) g += sqrt_a[n] * (2.0 * aug.r[k][n] - sE[n]) * dV[n];
        dP[k] = aug.P[k] * g;
        info.simplex_drift += dP[k];
    }

    // conditional states
    for (std::size_t k = 0; k < N; ++k) {
        aug.r[k] = candidate_step(aug.r[k], aug.candidates.fields[k], pv, dY, dt);
        const ClampResult c = clamp_norm(aug.r[k], guard);
        if (c.unstable) {
            info.unstable = true;
            info.reason = "candidate state left the Bloch ball";
            return info;
        }
        if (c.repaired) ++info.repaired;
    }

    // posterior update, clamp, renormalize
    double sum = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        double p = aug.P[k] + dP[k];
        if (!std::isfinite(p) || p < -1e-6 || p > 1.0 + 1e-6) {
            info.unstable = true;
            info.reason = "posterior left the simplex";
            return info;
        }
        p = std::max(p, 0.0);
        aug.P[k] = p;
        sum += p;
    }
    if (!(sum > 0.0)) {
        info.unstable = true;
        info.reason = "posterior collapsed to zero mass";
        return info;
    }
    for (double& p : aug.P) p /= sum;
    return info;
}

/// cos(theta) = |b_u|^-2 sum_k P_k (b_k . b_u): posterior-weighted overlap
/// of the candidate directions with the true direction.
inline double cos_theta(const AugmentedState& aug, const Vec3& b_true) {
    const double m2 = norm2(b_true);
    if (!(m2 > 0.0)) throw std::invalid_argument("true field has zero magnitude");
    double s = 0.0;
    for (std::size_t k = 0; k < aug.P.size(); ++k)
        s += aug.P[k] * dot(aug.candidates.fields[k], b_true);
    return s / m2;
}

/// argmax_k P_k; ties break to the lowest index.
inline int map_estimate(const AugmentedState& aug) {
    return static_cast<int>(
        std::distance(aug.P.begin(), std::max_element(aug.P.begin(), aug.P.end())));
}

}  // namespace qmag
