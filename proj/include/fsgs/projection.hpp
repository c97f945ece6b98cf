// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "fsgs/scene.hpp"
#include "fsgs/vecmath.hpp"

namespace fsgs {

// Density cutoff: contributions with u^2 + v^2 > k^2 are ignored, so the
// screen-space footprint of a surfel is the image of the tangent-space disk
// of radius k.
inline constexpr double kDensityCutoff = 3.0;
inline constexpr double kZNear = 0.01;
inline constexpr double kMinAlpha = 1.0 / 255.0;
inline constexpr double kMaxAlpha = 0.999;

// Rows of the 3x3 homogeneous map from tangent coordinates [u, v, 1] to
// homogeneous screen coordinates [x', y', w']. w' equals camera-space depth.
struct TangentTransform {
    Vec3d t1, t2, tw;

    double center_depth() const { return tw.z; }
    Vec2d project(double u, double v) const {
        double w = tw.x * u + tw.y * v + tw.z;
        return {(t1.x * u + t1.y * v + t1.z) / w, (t2.x * u + t2.y * v + t2.z) / w};
    }
};

// Screen-space ellipse of a projected surfel at the density cutoff:
//   Q(x, y) = A x^2 + 2B xy + C y^2 + 2D x + 2E y + F <= 0
// [[A,B],[B,C]] is symmetric positive definite and Q(center) = -k^2.
// sigma_* caches the corresponding covariance (inverse of [[A,B],[B,C]]).
struct Conic {
    double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;
    Vec2d center;
    double k = kDensityCutoff;
    double sigma_xx = 0, sigma_xy = 0, sigma_yy = 0;

    double eval(double x, double y) const {
        return a * x * x + 2 * b * x * y + c * y * y + 2 * d * x + 2 * e * y + f;
    }
};

// Exact tangent-plane intersection of the pixel ray with the surfel.
struct SplatSample {
    double u = 0, v = 0;
    double depth = 0;  // camera-space z at the intersection
};

// Composes Eq-style tangent frame, rigid world-to-camera and pinhole
// projection into one homogeneous matrix. Empty when the surfel center is at
// or behind the near plane.
std::optional<TangentTransform> tangent_to_screen_transform(const Surfel& surfel,
                                                            const Camera& camera);

// Exact projected conic: the image of the tangent-space disk u^2+v^2 <= k^2
// under the homogeneous transform. Empty when the footprint is not a finite
// ellipse (edge-on or crossing the camera plane within the cutoff disk).
std::optional<Conic> project_conic(const TangentTransform& t, double k = kDensityCutoff);

// Solves (T1 - x Tw) . [u,v,1] = 0, (T2 - y Tw) . [u,v,1] = 0. Empty when the
// pixel ray is parallel to the surfel plane or the hit is behind the near
// plane.
std::optional<SplatSample> ray_splat_intersect(const TangentTransform& t, const Vec2d& pixel);

// Camera-space z of the surfel center (sort key for blending).
double view_depth(const Surfel& surfel, const Camera& camera);

inline double gaussian_density(double u, double v) { return std::exp(-0.5 * (u * u + v * v)); }

}  // namespace fsgs
