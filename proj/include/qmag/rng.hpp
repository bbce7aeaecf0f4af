#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "qmag/vec3.hpp"

namespace qmag {

/// Seeded stream of standard-normal variates and Wiener increments.
///
/// Determinism contract: the same seed yields the same bit sequence on
/// every platform. mt19937_64 is pinned by the C++ standard; the variate
/// transform is a fixed Box-Muller (std::normal_distribution is
/// implementation-defined and must not be used here). Seeds are scrambled
/// through splitmix64 so that consecutive seed values (seed_base + i per
/// trajectory) give decorrelated streams.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    /// Uniform on (0,1], 53-bit resolution.
    double uniform() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; generates pairs, caches the second.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * kPi * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

    /// Independent Wiener increments, mean 0, variance dt per component.
    void wiener(double dt, std::span<double> out) {
        const double s = std::sqrt(dt);
        for (double& w : out) w = s * normal();
    }

    Vec3 wiener3(double dt) {
        const double s = std::sqrt(dt);
        return {s * normal(), s * normal(), s * normal()};
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

  private:
    static constexpr double kPi = 3.14159265358979323846;
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace qmag
