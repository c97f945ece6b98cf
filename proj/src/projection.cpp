// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/projection.hpp"

namespace fsgs {

std::optional<TangentTransform> tangent_to_screen_transform(const Surfel& surfel,
                                                            const Camera& camera) {
    Vec3d tu{double(surfel.tangent_u.x) * surfel.scale_u,
             double(surfel.tangent_u.y) * surfel.scale_u,
             double(surfel.tangent_u.z) * surfel.scale_u};
    Vec3d tv{double(surfel.tangent_v.x) * surfel.scale_v,
             double(surfel.tangent_v.y) * surfel.scale_v,
             double(surfel.tangent_v.z) * surfel.scale_v};
    Vec3d p{double(surfel.center.x), double(surfel.center.y), double(surfel.center.z)};

    // Camera-space axes of the tangent frame and center.
    Vec3d a = camera.rotation * tu;
    Vec3d b = camera.rotation * tv;
    Vec3d c = camera.rotation * p + camera.translation;

    if (c.z <= kZNear) return std::nullopt;

    TangentTransform t;
    t.t1 = {camera.fx * a.x + camera.cx * a.z, camera.fx * b.x + camera.cx * b.z,
            camera.fx * c.x + camera.cx * c.z};
    t.t2 = {camera.fy * a.y + camera.cy * a.z, camera.fy * b.y + camera.cy * b.z,
            camera.fy * c.y + camera.cy * c.z};
    t.tw = {a.z, b.z, c.z};
    return t;
}

std::optional<Conic> project_conic(const TangentTransform& t, double k) {
    Mat3d tm;
    tm.m = {t.t1.x, t.t1.y, t.t1.z, t.t2.x, t.t2.y, t.t2.z, t.tw.x, t.tw.y, t.tw.z};
    double det = tm.det();
    if (std::abs(det) < 1e-12) return std::nullopt;
    Mat3d inv = tm.inverse();

    // Footprint quadric M = T^-T diag(1, 1, -k^2) T^-1: a screen point lies in
    // the footprint iff its tangent-plane preimage satisfies u^2 + v^2 <= k^2.
    // Build the upper triangle only so M is symmetric by construction.
    Vec3d r0 = inv.row(0);
    Vec3d r1 = inv.row(1);
    Vec3d r2 = inv.row(2);
    auto entry = [&](int i, int j) {
        return r0[std::size_t(i)] * r0[std::size_t(j)] + r1[std::size_t(i)] * r1[std::size_t(j)] -
               k * k * r2[std::size_t(i)] * r2[std::size_t(j)];
    };
    double a = entry(0, 0);
    double b = entry(0, 1);
    double c = entry(1, 1);
    double d = entry(0, 2);
    double e = entry(1, 2);
    double f = entry(2, 2);

    // Finite-ellipse test: [[a,b],[b,c]] positive definite (flip sign if the
    // quadric came out negated) and a real interior.
    double det2 = a * c - b * b;
    if (det2 <= 0) return std::nullopt;
    if (a < 0) {
        a = -a; b = -b; c = -c; d = -d; e = -e; f = -f;
    }

    // Ellipse center solves [[a,b],[b,c]] x = -(d, e).
    Vec2d center{(-d * c + e * b) / det2, (-e * a + d * b) / det2};
    double q_center = a * center.x * center.x + 2 * b * center.x * center.y +
                      c * center.y * center.y + 2 * d * center.x + 2 * e * center.y + f;
    if (!(q_center < 0)) return std::nullopt;  // imaginary or degenerate ellipse

    // Normalize so Q(center) = -k^2, making [[A,B],[B,C]] the inverse of the
    // projected covariance at cutoff level k.
    double scale = -q_center / (k * k);
    Conic conic;
    conic.a = a / scale;
    conic.b = b / scale;
    conic.c = c / scale;
    conic.center = center;
    conic.k = k;
    // Rebuild D, E, F from the center so the expanded form is exactly
    // consistent with the centered one.
    conic.d = -(conic.a * center.x + conic.b * center.y);
    conic.e = -(conic.b * center.x + conic.c * center.y);
    conic.f = conic.a * center.x * center.x + 2 * conic.b * center.x * center.y +
              conic.c * center.y * center.y - k * k;

    double det_n = conic.a * conic.c - conic.b * conic.b;
    if (det_n <= 0 || !std::isfinite(det_n)) return std::nullopt;
    conic.sigma_xx = conic.c / det_n;
    conic.sigma_xy = -conic.b / det_n;
    conic.sigma_yy = conic.a / det_n;
    if (!std::isfinite(conic.sigma_xx) || !std::isfinite(conic.sigma_yy)) return std::nullopt;
    return conic;
}

std::optional<SplatSample> ray_splat_intersect(const TangentTransform& t, const Vec2d& pixel) {
    // (T1 - x Tw) . [u,v,1] = 0 and (T2 - y Tw) . [u,v,1] = 0.
    Vec3d h1 = t.t1 - t.tw * pixel.x;
    Vec3d h2 = t.t2 - t.tw * pixel.y;
    double det = h1.x * h2.y - h1.y * h2.x;
    if (std::abs(det) < 1e-9) return std::nullopt;

    SplatSample s;
    s.u = (-h1.z * h2.y + h1.y * h2.z) / det;
    s.v = (-h1.x * h2.z + h1.z * h2.x) / det;
    s.depth = t.tw.x * s.u + t.tw.y * s.v + t.tw.z;
    if (s.depth <= kZNear) return std::nullopt;
    return s;
}

double view_depth(const Surfel& surfel, const Camera& camera) {
    Vec3d p{double(surfel.center.x), double(surfel.center.y), double(surfel.center.z)};
    return (camera.rotation * p + camera.translation).z;
}

}  // namespace fsgs
