// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/scene.hpp"

#include <cmath>
#include <string>

namespace fsgs {

namespace {

bool all_finite(const Vec3f& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

constexpr float kTangentTol = 1e-4f;

}  // namespace

std::vector<Violation> validate_scene(const Scene& scene) {
    std::vector<Violation> out;
    auto add = [&out](const std::string& msg) { out.push_back({msg}); };

    const std::size_t n = scene.surfels.size();
    if (scene.sem_features.size() != n * scene.sem_dim)
        add("scene: semantic feature array size mismatch");
    if (scene.ins_features.size() != n * scene.ins_dim)
        add("scene: instance feature array size mismatch");

    for (std::size_t i = 0; i < n; ++i) {
        const Surfel& s = scene.surfels[i];
        const std::string tag = "surfel " + std::to_string(i);
        if (!all_finite(s.center) || !all_finite(s.tangent_u) || !all_finite(s.tangent_v) ||
            !std::isfinite(s.scale_u) || !std::isfinite(s.scale_v) || !std::isfinite(s.opacity) ||
            !all_finite(s.rgb)) {
            add(tag + ": non-finite value");
            continue;
        }
        if (std::abs(norm(s.tangent_u) - 1.0f) > kTangentTol)
            add(tag + ": tangent_u not unit length");
        if (std::abs(norm(s.tangent_v) - 1.0f) > kTangentTol)
            add(tag + ": tangent_v not unit length");
        if (std::abs(dot(s.tangent_u, s.tangent_v)) > kTangentTol)
            add(tag + ": tangents not orthogonal");
        if (!(s.scale_u > 0) || !(s.scale_v > 0)) add(tag + ": non-positive scale");
        if (s.opacity < 0.0f || s.opacity > 1.0f) add(tag + ": opacity out of range");
        if (s.rgb.x < 0.0f || s.rgb.x > 1.0f || s.rgb.y < 0.0f || s.rgb.y > 1.0f ||
            s.rgb.z < 0.0f || s.rgb.z > 1.0f)
            add(tag + ": rgb out of range");
    }
    if (scene.sem_features.size() == n * scene.sem_dim) {
        for (std::size_t i = 0; i < scene.sem_features.size(); ++i)
            if (!std::isfinite(scene.sem_features[i])) {
                add("surfel " + std::to_string(i / scene.sem_dim) +
                    ": non-finite semantic feature");
                break;
            }
    }
    if (scene.ins_features.size() == n * scene.ins_dim) {
        for (std::size_t i = 0; i < scene.ins_features.size(); ++i)
            if (!std::isfinite(scene.ins_features[i])) {
                add("surfel " + std::to_string(i / scene.ins_dim) +
                    ": non-finite instance feature");
                break;
            }
    }

    for (std::size_t q = 0; q < scene.queries.size(); ++q) {
        const InstanceQuery& query = scene.queries[q];
        const std::string tag = "query " + std::to_string(q);
        bool finite = all_finite(query.center);
        for (float v : query.covariance.m) finite = finite && std::isfinite(v);
        for (float v : query.feature) finite = finite && std::isfinite(v);
        if (!finite) {
            add(tag + ": non-finite value");
            continue;
        }
        if (query.feature.size() != scene.ins_dim) add(tag + ": feature dimension mismatch");
        const Mat3f& c = query.covariance;
        bool symmetric = std::abs(c(0, 1) - c(1, 0)) <= 1e-6f &&
                         std::abs(c(0, 2) - c(2, 0)) <= 1e-6f &&
                         std::abs(c(1, 2) - c(2, 1)) <= 1e-6f;
        if (!symmetric) add(tag + ": covariance not symmetric");
        Mat3d cd;
        for (int i = 0; i < 9; ++i) cd.m[i] = c.m[i];
        if (symmetric && !sym3x3_positive_definite(cd)) add(tag + ": not positive definite");
    }

    const SemanticDecoder& d = scene.decoder;
    if (d.class_names.size() != d.num_classes || d.thing_flags.size() != d.num_classes)
        add("decoder: class table size mismatch");
    if (d.weights.size() != std::size_t(d.num_classes) * d.feature_dim)
        add("decoder: weight matrix size mismatch");
    if (d.bias.size() != d.num_classes) add("decoder: bias size mismatch");
    if (d.feature_dim != scene.sem_dim && d.num_classes > 0)
        add("decoder: feature dimension mismatch");
    for (float v : d.weights)
        if (!std::isfinite(v)) {
            add("decoder: non-finite weight");
            break;
        }
    for (float v : d.bias)
        if (!std::isfinite(v)) {
            add("decoder: non-finite bias");
            break;
        }

    return out;
}

std::vector<Violation> validate_camera(const Camera& camera) {
    std::vector<Violation> out;
    if (!(camera.fx > 0) || !(camera.fy > 0)) out.push_back({"camera: non-positive focal length"});
    if (camera.width <= 0 || camera.height <= 0) out.push_back({"camera: non-positive image size"});
    bool finite = std::isfinite(camera.cx) && std::isfinite(camera.cy) &&
                  std::isfinite(camera.translation.x) && std::isfinite(camera.translation.y) &&
                  std::isfinite(camera.translation.z);
    for (double v : camera.rotation.m) finite = finite && std::isfinite(v);
    if (!finite) {
        out.push_back({"camera: non-finite value"});
        return out;
    }
    if (!rotation_orthonormal(camera.rotation)) out.push_back({"camera: rotation not orthonormal"});
    return out;
}

Camera look_at_camera(const Vec3d& eye, const Vec3d& target, const Vec3d& up, double fx, double fy,
                      double cx, double cy, int width, int height) {
    Vec3d forward = normalized(target - eye);
    Vec3d right = normalized(cross(forward, up));
    Vec3d down = cross(forward, right);  // completes a right-handed (right, down, forward) frame

    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = cx;
    cam.cy = cy;
    cam.width = width;
    cam.height = height;
    cam.rotation.m = {right.x, right.y, right.z, down.x, down.y, down.z,
                      forward.x, forward.y, forward.z};
    Vec3d t = cam.rotation * eye;
    cam.translation = {-t.x, -t.y, -t.z};
    return cam;
}

}  // namespace fsgs
