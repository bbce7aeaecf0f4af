#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "qmag/pauli.hpp"
#include "qmag/vec3.hpp"

namespace qmag {

/// Unit-vector probe axis; the operator meant is sigma_m = m . sigma.
struct PauliAxis {
    Vec3 m{0.0, 0.0, 1.0};

    void validate() const {
        if (std::abs(norm(m) - 1.0) > 1e-12) throw std::invalid_argument("probe axis not unit");
    }
};

/// Generic decay channel: d rho += rate * D[op] rho dt.
struct LindbladChannel {
    Mat2c op;
    double rate = 0.0;

    void validate() const {
        if (rate < 0.0) throw std::invalid_argument("Lindblad rate must be >= 0");
    }
};

/// One monitored spin axis with relative strength alpha = M_n/M and
/// detector efficiency eta.
struct ProbeChannel {
    PauliAxis axis;
    double strength = 1.0;    // alpha_n in [0,1]
    double efficiency = 1.0;  // eta_n in [0,1]

    void validate() const {
        axis.validate();
        if (strength < 0.0 || strength > 1.0) throw std::invalid_argument("strength out of [0,1]");
        if (efficiency < 0.0 || efficiency > 1.0)
            throw std::invalid_argument("efficiency out of [0,1]");
    }
};

/// 2x2 density matrix: Hermitian, unit trace, positive semidefinite.
/// Hermiticity and unit trace are enforced by construction; positivity is
/// checked (det >= -tol) rather than repaired.
class DensityMatrix2 {
  public:
    DensityMatrix2() : m_(kIdentity2 * 0.5) {}

    static DensityMatrix2 from_bloch(const Vec3& r) {
        if (norm2(r) > 1.0 + 1e-9) throw std::invalid_argument("Bloch vector outside unit ball");
        return DensityMatrix2((kIdentity2 + sigma(r)) * 0.5);
    }

    /// Accepts a raw matrix, symmetrizes roundoff-level Hermiticity error,
    /// normalizes the trace. Rejects matrices that are not close to a state.
    static DensityMatrix2 from_matrix(const Mat2c& m, double psd_tol = 1e-8) {
        Mat2c h = (m + m.adjoint()) * 0.5;
        if (max_abs(m - h) > 1e-9 * std::max(1.0, max_abs(m)))
            throw std::invalid_argument("matrix is not Hermitian");
        const double tr = h.trace().real();
        if (!(tr > 0.0)) throw std::invalid_argument("matrix trace must be positive");
        h = h * (1.0 / tr);
        DensityMatrix2 rho(h);
        if (rho.det() < -psd_tol) throw std::invalid_argument("matrix is not positive semidefinite");
        return rho;
    }

    /// Symmetrize + trace-normalize without the positivity check; for
    /// integrator internals where overshoot handling is the caller's job.
    static DensityMatrix2 unchecked(const Mat2c& m) { return DensityMatrix2(m); }

    const Mat2c& matrix() const { return m_; }

    Vec3 bloch() const {
        // r_i = Tr(rho sigma_i)
        return {2.0 * m_.a01.real(), -2.0 * m_.a01.imag(), (m_.a00 - m_.a11).real()};
    }

    double det() const { return m_.det().real(); }

    /// <f> = Tr(f rho).
    cplx expectation(const Mat2c& f) const { return (f * m_).trace(); }

  private:
    explicit DensityMatrix2(const Mat2c& m) {
        // store exactly Hermitian, exactly unit-trace entries
        const double tr = (m.a00 + m.a11).real();
        m_.a00 = cplx{m.a00.real() / tr, 0.0};
        m_.a11 = cplx{1.0 - m.a00.real() / tr, 0.0};
        m_.a01 = (m.a01 + std::conj(m.a10)) * (0.5 / tr);
        m_.a10 = std::conj(m_.a01);
    }
    Mat2c m_;
};

/// D[f] rho = f rho f+ - (f+ f rho + rho f+ f)/2. Traceless for any input.
inline Mat2c dissipator(const Mat2c& f, const DensityMatrix2& rho) {
    const Mat2c fd = f.adjoint();
    const Mat2c ff = fd * f;
    return f * rho.matrix() * fd - (ff * rho.matrix() + rho.matrix() * ff) * 0.5;
}

/// H[f] rho = f rho + rho f+ - <f + f+> rho. Traceless for any input.
inline Mat2c meas_superop(const Mat2c& f, const DensityMatrix2& rho) {
    const Mat2c fd = f.adjoint();
    const double ev = rho.expectation(f + fd).real();
    return f * rho.matrix() + rho.matrix() * fd - ev * rho.matrix();
}

struct OracleStep {
    DensityMatrix2 rho;
    std::vector<double> dY;  // one signal increment per probe channel
};

/// One step of the conditional master equation in density-matrix form,
/// used as the ground-truth oracle for the Bloch implementation.
///
/// Deliberately an operator-split Ito-Euler: deterministic terms first,
/// measurement back-action evaluated at the drifted state (the probe
/// segments act after the free evolution of each slice). The split and
/// the simultaneous Bloch step converge to the same SDE; their mutual
/// deviation shrinks linearly in dt, which the equivalence tests assert.
inline OracleStep sme_true_step(const DensityMatrix2& rho, const Vec3& b,
                                std::span<const ProbeChannel> probes, std::span<const double> dW,
                                double dt) {
    if (dW.size() != probes.size()) throw std::invalid_argument("one dW per probe required");
    // deterministic: -i[b.sigma, rho] + sum alpha_n D[sigma_n] rho
    const Mat2c h = sigma(b);
    Mat2c m = rho.matrix() + commutator(h, rho.matrix()) * cplx{0.0, -dt};
    for (const ProbeChannel& p : probes) m += dissipator(sigma(p.axis.m), rho) * (p.strength * dt);
    DensityMatrix2 drifted = DensityMatrix2::unchecked(m);

    OracleStep out{drifted, {}};
    out.dY.reserve(probes.size());
    Mat2c m2 = drifted.matrix();
    for (std::size_t n = 0; n < probes.size(); ++n) {
        const ProbeChannel& p = probes[n];
        const Mat2c sm = sigma(p.axis.m);
        m2 += meas_superop(sm, drifted) * (std::sqrt(p.efficiency * p.strength) * dW[n]);
        // dY_n = sqrt(eta) dW_n + eta sqrt(alpha) <sigma_n + sigma_n+> dt
        out.dY.push_back(std::sqrt(p.efficiency) * dW[n] +
                         p.efficiency * std::sqrt(p.strength) * 2.0 *
                             drifted.expectation(sm).real() * dt);
    }
    out.rho = DensityMatrix2::unchecked(m2);
    return out;
}

/// Deterministic Lindblad step (all eta treated as 0); the mean evolution.
inline DensityMatrix2 unconditional_step(const DensityMatrix2& rho, const Vec3& b,
                                         std::span<const ProbeChannel> probes, double dt) {
    const Mat2c h = sigma(b);
    Mat2c m = rho.matrix() + commutator(h, rho.matrix()) * cplx{0.0, -dt};
    for (const ProbeChannel& p : probes) m += dissipator(sigma(p.axis.m), rho) * (p.strength * dt);
    return DensityMatrix2::unchecked(m);
}

/// The three cartesian probe channels corresponding to a ProbeVectors pair.
inline std::vector<ProbeChannel> cartesian_probes(const Vec3& alpha, const Vec3& eta) {
    const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    std::vector<ProbeChannel> ps;
    for (int n = 0; n < 3; ++n) ps.push_back({{axes[n]}, alpha[n], eta[n]});
    return ps;
}

}  // namespace qmag
