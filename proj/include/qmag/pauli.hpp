#pragma once

#include <complex>

#include "qmag/vec3.hpp"

namespace qmag {

using cplx = std::complex<double>;

/// Dense complex 2x2 matrix. The whole project lives in a single-qubit
/// Hilbert space, so this small fixed type replaces a general matrix
/// library on purpose.
struct Mat2c {
    cplx a00{}, a01{}, a10{}, a11{};

    Mat2c operator+(const Mat2c& o) const { return {a00 + o.a00, a01 + o.a01, a10 + o.a10, a11 + o.a11}; }
    Mat2c operator-(const Mat2c& o) const { return {a00 - o.a00, a01 - o.a01, a10 - o.a10, a11 - o.a11}; }
    Mat2c operator*(const Mat2c& o) const {
        return {a00 * o.a00 + a01 * o.a10, a00 * o.a01 + a01 * o.a11,
                a10 * o.a00 + a11 * o.a10, a10 * o.a01 + a11 * o.a11};
    }
    Mat2c operator*(cplx s) const { return {a00 * s, a01 * s, a10 * s, a11 * s}; }
    Mat2c operator*(double s) const { return {a00 * s, a01 * s, a10 * s, a11 * s}; }
    Mat2c& operator+=(const Mat2c& o) { a00 += o.a00; a01 += o.a01; a10 += o.a10; a11 += o.a11; return *this; }

    Mat2c adjoint() const {
        return {std::conj(a00), std::conj(a10), std::conj(a01), std::conj(a11)};
    }
    cplx trace() const { return a00 + a11; }
    cplx det() const { return a00 * a11 - a01 * a10; }
};

inline Mat2c operator*(cplx s, const Mat2c& m) { return m * s; }
inline Mat2c operator*(double s, const Mat2c& m) { return m * s; }

inline Mat2c commutator(const Mat2c& a, const Mat2c& b) { return a * b - b * a; }

constexpr Mat2c kIdentity2{1.0, 0.0, 0.0, 1.0};
constexpr Mat2c kSigmaX{0.0, 1.0, 1.0, 0.0};
constexpr Mat2c kSigmaY{0.0, cplx{0.0, -1.0}, cplx{0.0, 1.0}, 0.0};
constexpr Mat2c kSigmaZ{1.0, 0.0, 0.0, -1.0};

/// sigma_m = m . sigma for a direction m (not necessarily unit).
inline Mat2c sigma(const Vec3& m) {
    return {cplx{m.z, 0.0}, cplx{m.x, -m.y}, cplx{m.x, m.y}, cplx{-m.z, 0.0}};
}

inline double max_abs(const Mat2c& m) {
    return std::max(std::max(std::abs(m.a00), std::abs(m.a01)),
                    std::max(std::abs(m.a10), std::abs(m.a11)));
}

}  // namespace qmag
