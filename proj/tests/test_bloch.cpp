#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "qmag/bloch.hpp"
#include "qmag/density_matrix.hpp"
#include "qmag/rng.hpp"

using namespace qmag;

namespace {

Vec3 random_in_ball(RandomStream& rs) {
    for (;;) {
        Vec3 r{2.0 * rs.uniform() - 1.0, 2.0 * rs.uniform() - 1.0, 2.0 * rs.uniform() - 1.0};
        if (norm2(r) <= 1.0) return r;
    }
}

}  // namespace

TEST_CASE("drift_true: QND axis is undamped") {
    const ProbeVectors pv{{0, 0, 1}, {1, 1, 1}};
    const Vec3 d = drift_true({0, 0, 1}, {0, 0, 0}, pv);
    CHECK(norm(d) < 1e-15);
}

TEST_CASE("drift_true: transverse coherence decays at rate 2") {
    const ProbeVectors pv{{0, 0, 1}, {1, 1, 1}};
    const Vec3 d = drift_true({1, 0, 0}, {0, 0, 0}, pv);
    CHECK(d.x == doctest::Approx(-2.0));
    CHECK(std::abs(d.y) < 1e-15);
    CHECK(std::abs(d.z) < 1e-15);
}

TEST_CASE("drift_true: bare field gives 2 (b x r)") {
    const ProbeVectors pv{{0, 0, 0}, {0, 0, 0}};
    const Vec3 d = drift_true({0, 1, 0}, {1.5, 0, 0}, pv);
    CHECK(std::abs(d.x) < 1e-15);
    CHECK(std::abs(d.y) < 1e-15);
    CHECK(d.z == doctest::Approx(3.0));
}

TEST_CASE("drift_true: linear in r, torque orthogonal to r") {
    RandomStream rs(21);
    const ProbeVectors pv{{0.5, 1.0, 0.25}, {1, 1, 1}};
    for (int i = 0; i < 200; ++i) {
        const Vec3 r1 = random_in_ball(rs), r2 = random_in_ball(rs);
        const Vec3 b{rs.normal(), rs.normal(), rs.normal()};
        const double a = 2.0 * rs.uniform() - 1.0;
        const Vec3 lhs = drift_true(r1 * a + r2 * (1 - a), b, pv);
        const Vec3 rhs = drift_true(r1, b, pv) * a + drift_true(r2, b, pv) * (1 - a);
        CHECK(norm(lhs - rhs) < 1e-12);
        // with probes off the flow is a pure rotation: drift . r = 0
        const ProbeVectors off{{0, 0, 0}, {0, 0, 0}};
        CHECK(std::abs(dot(drift_true(r1, b, off), r1)) < 1e-12);
    }
}

TEST_CASE("backaction: no effect on an eigenstate of the probed axis") {
    CHECK(norm(backaction({0, 0, 1}, {0, 0, 0.37})) < 1e-15);
}

TEST_CASE("backaction: doubled noise at the center of the sphere") {
    const Vec3 g = backaction({0, 0, 0}, {0, 0, 0.4});
    CHECK(g.x == 0.0);
    CHECK(g.y == 0.0);
    CHECK(g.z == doctest::Approx(0.8));
}

TEST_CASE("backaction: generic point matches the density-matrix superoperator") {
    // dOmega along z with weight w: the oracle image is 2 w (z_hat - r_z r)
    const Vec3 r{0.3, 0.2, 0.1};
    const double w = 0.7;
    const Vec3 g = backaction(r, {0, 0, w});
    CHECK(g.x == doctest::Approx(2.0 * w * -0.03));
    CHECK(g.y == doctest::Approx(2.0 * w * -0.02));
    CHECK(g.z == doctest::Approx(2.0 * w * 0.99));

    const DensityMatrix2 rho = DensityMatrix2::from_bloch(r);
    const Mat2c h = meas_superop(kSigmaZ, rho) * w;
    CHECK(g.x == doctest::Approx((h * kSigmaX).trace().real()).epsilon(1e-12));
    CHECK(g.y == doctest::Approx((h * kSigmaY).trace().real()).epsilon(1e-12));
    CHECK(g.z == doctest::Approx((h * kSigmaZ).trace().real()).epsilon(1e-12));
}

TEST_CASE("backaction: orthogonal-decomposition identity") {
    RandomStream rs(23);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 r = random_in_ball(rs);
        const Vec3 w{rs.normal(), rs.normal(), rs.normal()};
        const Vec3 a = backaction(r, w);
        const Vec3 b = 2.0 * (w * (1.0 - norm2(r)) - cross(r, cross(r, w)));
        CHECK(norm(a - b) < 1e-12);
    }
}

TEST_CASE("candidate_innovation: substituting the true record leaves sqrt(eta) dW") {
    const ProbeVectors pv{{1.0, 0.5, 0.25}, {1.0, 0.7, 0.2}};
    const Vec3 r{0.4, -0.1, 0.3};
    const double dt = 1e-4;
    RandomStream rs(9);
    const Vec3 dW = rs.wiener3(dt);
    Vec3 dY;  // record generated by the same state the candidate holds
    true_step(r, {0, 0, 0}, pv, dW, dt, &dY);
    const Vec3 v = candidate_innovation(r, dY, pv, dt);
    for (int n = 0; n < 3; ++n)
        CHECK(v[n] == doctest::Approx(std::sqrt(pv.eta[n]) * dW[n]).epsilon(1e-12));
}

TEST_CASE("candidate_innovation: eta = 0 decouples the candidate from the record") {
    const ProbeVectors pv{{1, 1, 1}, {0, 0, 0}};
    // with dead detectors the record is identically zero, and so is the innovation
    const Vec3 r{0.4, -0.1, 0.3};
    RandomStream rs(10);
    Vec3 dY;
    true_step(r, {0, 0, 0}, pv, rs.wiener3(1e-4), 1e-4, &dY);
    CHECK(norm(dY) == 0.0);
    const Vec3 v = candidate_innovation({0.2, 0.2, 0.2}, dY, pv, 1e-4);
    CHECK(norm(v) == 0.0);
}

TEST_CASE("candidate_step: true candidate fed its own record tracks the truth") {
    const ProbeVectors pv{{1, 1, 1}, {1.0, 0.6, 0.3}};
    const Vec3 b{1.5, 0, 0};
    const double dt = 1e-5;
    RandomStream rs(31);
    Vec3 truth{0, 1, 0}, cand{0, 1, 0};
    const double guard = norm_guard(dt);
    for (int i = 0; i < 20000; ++i) {  // T = 0.2
        const Vec3 dW = rs.wiener3(dt);
        Vec3 dY;
        const Vec3 t2 = true_step(truth, b, pv, dW, dt, &dY);
        const Vec3 c2 = candidate_step(cand, b, pv, dY, dt);
        truth = t2;
        cand = c2;
        CHECK(!clamp_norm(truth, guard).unstable);
        CHECK(!clamp_norm(cand, guard).unstable);
    }
    CHECK(norm(truth - cand) < 1e-9);  // identical algebra up to roundoff
}

TEST_CASE("candidate_step: pure precession conserves the norm") {
    const ProbeVectors off{{0, 0, 0}, {0, 0, 0}};
    const double dt = 1e-4;
    // on the sphere the per-step O(dt^2) growth is absorbed by the clamp
    Vec3 r{0, 1, 0};
    for (int i = 0; i < 100000; ++i) {  // T = 10
        r = candidate_step(r, {1.5, 0.7, -0.3}, off, {0, 0, 0}, dt);
        clamp_norm(r, norm_guard(dt));
        CHECK(std::abs(norm(r) - 1.0) <= 1e-6);
    }
    // strictly inside the ball nothing clamps; the drift of |r| stays small
    // because the Euler growth per step is |r| (2 |b| dt)^2 / 2
    Vec3 q{0, 0.5, 0};
    const Vec3 b{0.1, 0.05, -0.02};
    for (int i = 0; i < 100000; ++i) q = candidate_step(q, b, off, {0, 0, 0}, dt);
    CHECK(std::abs(norm(q) - 0.5) < 1e-6);
}

TEST_CASE("candidate_step: QND probing collapses to the poles") {
    const ProbeVectors pv{{0, 0, 1}, {0, 0, 1}};
    RandomStream rs(77);
    const double dt = 1e-4;
    Vec3 truth{0, 1, 0};
    for (int i = 0; i < 50000; ++i) {  // T = 5
        Vec3 dY;
        truth = true_step(truth, {0, 0, 0}, pv, rs.wiener3(dt), dt, &dY);
        clamp_norm(truth, norm_guard(dt));
    }
    CHECK(std::abs(truth.z) > 0.999);
}

TEST_CASE("clamp_norm policy") {
    const double guard = 1e-3;
    Vec3 ok{0, 0, 0.5};
    CHECK(!clamp_norm(ok, guard).repaired);
    Vec3 slight{0, 0, 1.0 + 5e-4};
    const ClampResult r1 = clamp_norm(slight, guard);
    CHECK(r1.repaired);
    CHECK(!r1.unstable);
    CHECK(norm(slight) == doctest::Approx(1.0));
    Vec3 bad{0, 0, 1.1};
    CHECK(clamp_norm(bad, guard).unstable);
    Vec3 nan{std::numeric_limits<double>::quiet_NaN(), 0, 0};
    CHECK(clamp_norm(nan, guard).unstable);
}

TEST_CASE("ProbeVectors validation") {
    CHECK_THROWS_AS((ProbeVectors{{0.5, 0.5, 0.5}, {1, 1, 1}}).validate(),
                    std::invalid_argument);  // max alpha must be 1 when active
    CHECK_THROWS_AS((ProbeVectors{{1, 0, 0}, {1.2, 0, 0}}).validate(), std::invalid_argument);
    CHECK_NOTHROW((ProbeVectors{{0, 0, 0}, {0, 0, 0}}).validate());
    CHECK_NOTHROW((ProbeVectors{{1, 0.25, 0}, {0.5, 1, 0}}).validate());
}
