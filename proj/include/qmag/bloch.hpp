#pragma once

#include <cmath>
#include <stdexcept>

#include "qmag/vec3.hpp"

namespace qmag {

/// Per-axis probe strengths alpha_n = M_n/M and detector efficiencies
/// eta_n for the three cartesian probe channels (n = x,y,z). Time is
/// dimensionless (units of 1/M, M = max M_n), so any active channel set
/// must have max alpha_n = 1.
struct ProbeVectors {
    Vec3 alpha{};  // components in [0,1], max = 1 when any channel is on
    Vec3 eta{};    // components in [0,1]

    void validate() const {
        double amax = 0.0;
        for (int n = 0; n < 3; ++n) {
            if (alpha[n] < 0.0 || alpha[n] > 1.0) throw std::invalid_argument("alpha out of [0,1]");
            if (eta[n] < 0.0 || eta[n] > 1.0) throw std::invalid_argument("eta out of [0,1]");
            amax = std::max(amax, alpha[n]);
        }
        if (amax > 0.0 && std::abs(amax - 1.0) > 1e-12)
            throw std::invalid_argument("active probes must be normalized to max alpha = 1");
    }
};

/// Deterministic part of the conditional Bloch SDE:
///   2[ (b x r) - (a1+a2+a3) r + alpha * r ]   (* = pointwise)
/// The cross product is the Larmor torque (rate 2|b|), the rest is the
/// probe-induced decay of the two components transverse to each axis.
inline Vec3 drift_true(const Vec3& r, const Vec3& b, const ProbeVectors& pv) {
    const double asum = pv.alpha.x + pv.alpha.y + pv.alpha.z;
    return 2.0 * (cross(b, r) - asum * r + hadamard(pv.alpha, r));
}

/// Measurement back-action for noise vector dOmega (components
/// dOmega_n = sqrt(eta_n alpha_n) dW_n on the truth path):
///   2[ dOmega (1 - r^2) - r x (r x dOmega) ] = 2[ dOmega - r (r . dOmega) ].
inline Vec3 backaction(const Vec3& r, const Vec3& dOmega) {
    return 2.0 * (dOmega - r * dot(r, dOmega));
}

/// Innovation of candidate k against the observed record increments:
///   dV~(k)_n = dY_n - eta_n sqrt(alpha_n) * 2 r_k,n * dt.
inline Vec3 candidate_innovation(const Vec3& r_k, const Vec3& dY, const ProbeVectors& pv,
                                 double dt) {
    Vec3 v;
    for (int n = 0; n < 3; ++n)
        v[n] = dY[n] - pv.eta[n] * std::sqrt(pv.alpha[n]) * 2.0 * r_k[n] * dt;
    return v;
}

/// Result of the norm repair applied after every stochastic step.
struct ClampResult {
    bool repaired = false;   // |r| was in (1, 1+guard] and was rescaled to 1
    bool unstable = false;   // |r| beyond the guard or non-finite
    double excess = 0.0;     // |r| - 1 before repair
};

/// Euler steps overshoot the Bloch ball by O(dt) per step, so the repair
/// window must scale with dt; beyond it the trajectory is rejected, not
/// repaired.
inline double norm_guard(double dt) { return std::max(1e-6, 500.0 * dt); }

inline ClampResult clamp_norm(Vec3& r, double guard) {
    ClampResult c;
    if (!finite(r)) {
        c.unstable = true;
        return c;
    }
    const double n2 = norm2(r);
    if (n2 > 1.0) {
        const double n = std::sqrt(n2);
        c.excess = n - 1.0;
        if (c.excess > guard) {
            c.unstable = true;
        } else {
            r *= 1.0 / n;
            c.repaired = true;
        }
    }
    return c;
}

/// One Euler-Maruyama step of the true-state SDE with the physical noise
/// dW; emits the homodyne record increments
///   dY_n = sqrt(eta_n) dW_n + eta_n sqrt(alpha_n) * 2 r_n * dt.
/// Convention note: the record carries sqrt(eta) on the noise, so a dead
/// detector (eta = 0) produces an identically zero record.
inline Vec3 true_step(const Vec3& r, const Vec3& b, const ProbeVectors& pv, const Vec3& dW,
                      double dt, Vec3* dY_out) {
    Vec3 dOm;
    if (dY_out) {
        for (int n = 0; n < 3; ++n) {
            const double se = std::sqrt(pv.eta[n]);
            const double sa = std::sqrt(pv.alpha[n]);
            dOm[n] = se * sa * dW[n];
            (*dY_out)[n] = se * dW[n] + pv.eta[n] * sa * 2.0 * r[n] * dt;
        }
    } else {
        for (int n = 0; n < 3; ++n) dOm[n] = std::sqrt(pv.eta[n] * pv.alpha[n]) * dW[n];
    }
    return r + drift_true(r, b, pv) * dt + backaction(r, dOm);
}

/// One Euler-Maruyama step of candidate k's conditional state driven by
/// the observed record. The back-action noise is sqrt(alpha_n) dV~(k)_n;
/// substituting the record of the true candidate reproduces true_step's
/// sqrt(eta alpha) dW exactly, so the k = k0 trajectory matches the truth.
inline Vec3 candidate_step(const Vec3& r_k, const Vec3& b_k, const ProbeVectors& pv,
                           const Vec3& dY, double dt) {
    const Vec3 v = candidate_innovation(r_k, dY, pv, dt);
    Vec3 dOm;
    for (int n = 0; n < 3; ++n) dOm[n] = std::sqrt(pv.alpha[n]) * v[n];
    return r_k + drift_true(r_k, b_k, pv) * dt + backaction(r_k, dOm);
}

}  // namespace qmag
