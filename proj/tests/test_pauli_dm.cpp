#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "qmag/bloch.hpp"  // clamp_norm shared with the production path
#include "qmag/density_matrix.hpp"
#include "qmag/rng.hpp"

using namespace qmag;

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 random_in_ball(RandomStream& rs) {
    for (;;) {
        Vec3 r{2.0 * rs.uniform() - 1.0, 2.0 * rs.uniform() - 1.0, 2.0 * rs.uniform() - 1.0};
        if (norm2(r) <= 1.0) return r;
    }
}

Mat2c random_lower_triangular(RandomStream& rs) {
    auto c = [&] { return cplx{2.0 * rs.uniform() - 1.0, 2.0 * rs.uniform() - 1.0}; };
    return {c(), 0.0, c(), c()};
}

}  // namespace

TEST_CASE("dissipator: eigenstate of a QND probe is a fixed point") {
    const DensityMatrix2 rho = DensityMatrix2::from_bloch({0, 0, 1});  // (I+sz)/2
    CHECK(max_abs(dissipator(kSigmaZ, rho)) < 1e-15);
}

TEST_CASE("dissipator: sz on (I+sx)/2 gives -sx") {
    const DensityMatrix2 rho = DensityMatrix2::from_bloch({1, 0, 0});
    const Mat2c d = dissipator(kSigmaZ, rho);
    CHECK(max_abs(d - (-1.0 * kSigmaX)) < 1e-15);
}

TEST_CASE("superoperators are traceless for random inputs") {
    RandomStream rs(11);
    for (int i = 0; i < 1000; ++i) {
        const DensityMatrix2 rho = DensityMatrix2::from_bloch(random_in_ball(rs));
        const Mat2c f = random_lower_triangular(rs);
        CHECK(std::abs(dissipator(f, rho).trace()) < 1e-12);
        CHECK(std::abs(meas_superop(f, rho).trace()) < 1e-12);
    }
}

TEST_CASE("meas_superop: no back-action on a measurement eigenstate") {
    const DensityMatrix2 rho = DensityMatrix2::from_bloch({0, 0, 1});
    CHECK(max_abs(meas_superop(kSigmaZ, rho)) < 1e-15);
}

TEST_CASE("meas_superop: at the center of the sphere H[sz] rho = sz") {
    const DensityMatrix2 rho = DensityMatrix2::from_bloch({0, 0, 0});
    CHECK(max_abs(meas_superop(kSigmaZ, rho) - kSigmaZ) < 1e-15);
}

TEST_CASE("meas_superop matches the Bloch-image formula 2(x_hat - r_x r)") {
    const Vec3 r{0.3, 0.2, 0.1};
    const DensityMatrix2 rho = DensityMatrix2::from_bloch(r);
    const Mat2c h = meas_superop(kSigmaX, rho);
    // Bloch image of a traceless Hermitian matrix m: v_i = Tr(m sigma_i)
    const Vec3 expect = 2.0 * (Vec3{1, 0, 0} - r * r.x);
    CHECK((h * kSigmaX).trace().real() == doctest::Approx(expect.x).epsilon(1e-12));
    CHECK((h * kSigmaY).trace().real() == doctest::Approx(expect.y).epsilon(1e-12));
    CHECK((h * kSigmaZ).trace().real() == doctest::Approx(expect.z).epsilon(1e-12));
}

TEST_CASE("sme_true_step: no field, no probes, no change") {
    const DensityMatrix2 rho = DensityMatrix2::from_bloch({0.2, -0.4, 0.5});
    const OracleStep s = sme_true_step(rho, {0, 0, 0}, {}, {}, 1e-4);
    CHECK(s.dY.empty());
    CHECK(max_abs(s.rho.matrix() - rho.matrix()) < 1e-15);
}

TEST_CASE("sme_true_step: Larmor precession closed form and period") {
    // dr = 2 (b x r) dt: starting on z, rotating about x at rate 2|b| = 3
    const Vec3 b{1.5, 0, 0};
    const double dt = 1e-5;
    auto integrate = [&](double T) {
        DensityMatrix2 rho = DensityMatrix2::from_bloch({0, 0, 1});
        const long n = std::lround(T / dt);
        for (long i = 0; i < n; ++i) rho = sme_true_step(rho, b, {}, {}, dt).rho;
        return rho.bloch();
    };
    const Vec3 quarter = integrate(kPi / 2.0);  // 3t = 3pi/2: (0, 1, 0)
    CHECK(std::abs(quarter.x) < 1e-3);
    CHECK(quarter.y == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::abs(quarter.z) < 1e-3);
    // full period T = pi/|b|
    const Vec3 period = integrate(kPi / 1.5);
    CHECK(std::abs(period.x) < 1e-3);
    CHECK(std::abs(period.y) < 1e-3);
    CHECK(period.z == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("sme_true_step: eta=0 z-probe damps coherence as exp(-2t)") {
    const std::vector<ProbeChannel> probes{{{{0, 0, 1}}, 1.0, 0.0}};
    const double dt = 1e-4, T = 1.0;
    DensityMatrix2 rho = DensityMatrix2::from_bloch({1, 0, 0});
    RandomStream rs(3);
    std::vector<double> dw(1);
    for (long i = 0; i < std::lround(T / dt); ++i) {
        rs.wiener(dt, dw);
        rho = sme_true_step(rho, {0, 0, 0}, probes, dw, dt).rho;
    }
    CHECK(rho.bloch().x == doctest::Approx(std::exp(-2.0)).epsilon(2e-3));
}

TEST_CASE("unconditional_step: empty generator is the identity map") {
    const DensityMatrix2 rho = DensityMatrix2::from_bloch({0.1, 0.2, -0.3});
    CHECK(max_abs(unconditional_step(rho, {0, 0, 0}, {}, 1e-3).matrix() - rho.matrix()) < 1e-15);
}

TEST_CASE("unconditional_step: QND eigenstate is a fixed point") {
    const std::vector<ProbeChannel> probes{{{{0, 0, 1}}, 1.0, 1.0}};
    const DensityMatrix2 rho = DensityMatrix2::from_bloch({0, 0, 1});
    CHECK(max_abs(unconditional_step(rho, {0, 0, 0}, probes, 1e-3).matrix() - rho.matrix()) <
          1e-15);
}

TEST_CASE("ensemble mean of conditional steps follows the unconditional map") {
    // 1000 noise realizations of a short conditional run vs the Lindblad
    // solution, all three probes on, within 3 standard errors
    const std::vector<ProbeChannel> probes = cartesian_probes({1.0, 0.6, 0.3}, {1.0, 0.8, 0.4});
    const Vec3 b{0.7, -0.2, 0.4};
    const Vec3 r0{0.5, 0.3, -0.2};
    const double dt = 1e-3, T = 0.5;
    const long n = std::lround(T / dt);

    DensityMatrix2 mean_ref = DensityMatrix2::from_bloch(r0);
    for (long i = 0; i < n; ++i) mean_ref = unconditional_step(mean_ref, b, probes, dt);

    const int trials = 1000;
    Vec3 acc{}, acc2{};
    for (int t = 0; t < trials; ++t) {
        RandomStream rs(100 + static_cast<std::uint64_t>(t));
        DensityMatrix2 rho = DensityMatrix2::from_bloch(r0);
        std::vector<double> dw(3);
        for (long i = 0; i < n; ++i) {
            rs.wiener(dt, dw);
            rho = sme_true_step(rho, b, probes, dw, dt).rho;
        }
        const Vec3 r = rho.bloch();
        acc += r;
        acc2 += hadamard(r, r);
    }
    const Vec3 mean = acc / trials;
    const Vec3 ref = mean_ref.bloch();
    for (int i = 0; i < 3; ++i) {
        const double var = acc2[i] / trials - mean[i] * mean[i];
        const double se = std::sqrt(var / trials);
        CHECK(std::abs(mean[i] - ref[i]) < 3.0 * se + 3e-3);  // 3 SE + O(dt) bias allowance
    }
}

TEST_CASE("trajectory invariants: unit trace, hermiticity, positivity") {
    const std::vector<ProbeChannel> probes = cartesian_probes({1, 1, 1}, {1, 1, 1});
    RandomStream rs(5);
    DensityMatrix2 rho = DensityMatrix2::from_bloch({0, 1, 0});
    std::vector<double> dw(3);
    const double dt = 1e-4;
    for (int i = 0; i < 5000; ++i) {
        rs.wiener(dt, dw);
        rho = sme_true_step(rho, {1.5, 0, 0}, probes, dw, dt).rho;
        Vec3 r = rho.bloch();
        clamp_norm(r, norm_guard(dt));
        rho = DensityMatrix2::from_bloch(r);
        CHECK(std::abs(rho.matrix().trace().real() - 1.0) < 1e-12);
        CHECK(std::abs(rho.matrix().trace().imag()) < 1e-15);
        CHECK(max_abs(rho.matrix() - rho.matrix().adjoint()) < 1e-15);
        CHECK(rho.det() > -1e-8);
    }
}

TEST_CASE("constructors reject invalid input") {
    CHECK_THROWS_AS(DensityMatrix2::from_bloch({1.1, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(DensityMatrix2::from_matrix({1.0, cplx{0, 1}, cplx{0, 1}, 0.0}),
                    std::invalid_argument);  // not Hermitian
    // Hermitian but indefinite: diag(1.5, -0.5)
    CHECK_THROWS_AS(DensityMatrix2::from_matrix({1.5, 0.0, 0.0, -0.5}), std::invalid_argument);
    CHECK_THROWS_AS((ProbeChannel{{{0, 0, 2}}, 1.0, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((ProbeChannel{{{0, 0, 1}}, 1.5, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((LindbladChannel{kSigmaZ, -1.0}).validate(), std::invalid_argument);
}
