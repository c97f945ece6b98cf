// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

// Small fixed-size vector/matrix types used across the renderer.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace fsgs {

template <typename T>
struct Vec2T {
    T x{}, y{};

    Vec2T() = default;
    Vec2T(T x_, T y_) : x(x_), y(y_) {}

    Vec2T operator+(const Vec2T& o) const { return {x + o.x, y + o.y}; }
    Vec2T operator-(const Vec2T& o) const { return {x - o.x, y - o.y}; }
    Vec2T operator*(T s) const { return {x * s, y * s}; }
};

template <typename T>
struct Vec3T {
    T x{}, y{}, z{};

    Vec3T() = default;
    Vec3T(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

    Vec3T operator+(const Vec3T& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3T operator-(const Vec3T& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3T operator*(T s) const { return {x * s, y * s, z * s}; }

    T& operator[](std::size_t i) { return (&x)[i]; }
    const T& operator[](std::size_t i) const { return (&x)[i]; }
};

using Vec2f = Vec2T<float>;
using Vec2d = Vec2T<double>;
using Vec3f = Vec3T<float>;
using Vec3d = Vec3T<double>;

template <typename T>
inline T dot(const Vec3T<T>& a, const Vec3T<T>& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <typename T>
inline T dot(const Vec2T<T>& a, const Vec2T<T>& b) {
    return a.x * b.x + a.y * b.y;
}

template <typename T>
inline Vec3T<T> cross(const Vec3T<T>& a, const Vec3T<T>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <typename T>
inline T norm(const Vec3T<T>& a) {
    return std::sqrt(dot(a, a));
}

template <typename T>
inline T norm(const Vec2T<T>& a) {
    return std::sqrt(dot(a, a));
}

template <typename T>
inline Vec3T<T> normalized(const Vec3T<T>& a) {
    T n = norm(a);
    return {a.x / n, a.y / n, a.z / n};
}

// Row-major 3x3 matrix.
template <typename T>
struct Mat3T {
    std::array<T, 9> m{};

    static Mat3T identity() {
        Mat3T r;
        r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        return r;
    }

    T& operator()(std::size_t r, std::size_t c) { return m[r * 3 + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return m[r * 3 + c]; }

    Vec3T<T> row(std::size_t r) const { return {m[r * 3], m[r * 3 + 1], m[r * 3 + 2]}; }
    Vec3T<T> col(std::size_t c) const { return {m[c], m[3 + c], m[6 + c]}; }

    Vec3T<T> operator*(const Vec3T<T>& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    Mat3T operator*(const Mat3T& o) const {
        Mat3T r;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                T s = 0;
                for (std::size_t k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }

    Mat3T transposed() const {
        Mat3T r;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }

    T det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }

    // Adjugate-based inverse; caller checks det() against a tolerance first.
    Mat3T inverse() const {
        T d = det();
        Mat3T r;
        r.m = {(m[4] * m[8] - m[5] * m[7]) / d, (m[2] * m[7] - m[1] * m[8]) / d,
               (m[1] * m[5] - m[2] * m[4]) / d, (m[5] * m[6] - m[3] * m[8]) / d,
               (m[0] * m[8] - m[2] * m[6]) / d, (m[2] * m[3] - m[0] * m[5]) / d,
               (m[3] * m[7] - m[4] * m[6]) / d, (m[1] * m[6] - m[0] * m[7]) / d,
               (m[0] * m[4] - m[1] * m[3]) / d};
        return r;
    }
};

using Mat3f = Mat3T<float>;
using Mat3d = Mat3T<double>;

template <typename T>
inline Mat3T<T> to_mat3(const std::array<T, 9>& a) {
    Mat3T<T> r;
    r.m = a;
    return r;
}

// Symmetric 2x2 eigenvalues, ascending.
template <typename T>
inline std::array<T, 2> sym2x2_eigenvalues(T xx, T xy, T yy) {
    T mean = (xx + yy) / 2;
    T d = std::sqrt(((xx - yy) / 2) * ((xx - yy) / 2) + xy * xy);
    return {mean - d, mean + d};
}

// LDL^T positive-definiteness test for a symmetric 3x3 (lower triangle read).
template <typename T>
inline bool sym3x3_positive_definite(const Mat3T<T>& a) {
    T d0 = a(0, 0);
    if (!(d0 > 0)) return false;
    T l10 = a(1, 0) / d0;
    T l20 = a(2, 0) / d0;
    T d1 = a(1, 1) - l10 * l10 * d0;
    if (!(d1 > 0)) return false;
    T l21 = (a(2, 1) - l20 * l10 * d0) / d1;
    T d2 = a(2, 2) - l20 * l20 * d0 - l21 * l21 * d1;
    return d2 > 0;
}

}  // namespace fsgs
