// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fsgs/vecmath.hpp"

namespace fsgs {

// One 2D Gaussian surfel. Semantic/instance features live in flat per-scene
// arrays (see Scene) so the record size follows the file layout.
struct Surfel {
    Vec3f center;
    Vec3f tangent_u;
    Vec3f tangent_v;
    float scale_u = 1.0f;
    float scale_v = 1.0f;
    float opacity = 1.0f;
    Vec3f rgb;
};

// A 3D Gaussian-distributed instance query. The inverse covariance is cached
// at load/attach time; covariance must be symmetric positive definite.
struct InstanceQuery {
    Vec3f center;
    Mat3f covariance;
    std::vector<float> feature;
    Mat3d inv_covariance;  // derived, not serialized

    void refresh_inverse() {
        Mat3d c;
        for (int i = 0; i < 9; ++i) c.m[i] = covariance.m[i];
        inv_covariance = c.inverse();
    }
};

// Affine semantic decoder: logits = weights * feature + bias.
struct SemanticDecoder {
    uint32_t num_classes = 0;
    uint32_t feature_dim = 0;
    std::vector<float> weights;  // num_classes x feature_dim, row-major
    std::vector<float> bias;     // num_classes
    std::vector<std::string> class_names;
    std::vector<uint8_t> thing_flags;  // 1 = thing, 0 = stuff
};

// Pinhole camera with a rigid world-to-camera transform (x_cam = R x + t).
struct Camera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Mat3d rotation = Mat3d::identity();
    Vec3d translation;
};

struct Violation {
    std::string message;  // e.g. "surfel 3: opacity out of range"
};

// Immutable after load; safe for concurrent reads.
struct Scene {
    uint32_t format_version = 1;
    uint32_t sem_dim = 16;
    uint32_t ins_dim = 32;
    std::vector<Surfel> surfels;
    std::vector<float> sem_features;  // N x sem_dim
    std::vector<float> ins_features;  // N x ins_dim
    std::vector<InstanceQuery> queries;
    SemanticDecoder decoder;

    std::size_t surfel_count() const { return surfels.size(); }
    std::size_t query_count() const { return queries.size(); }

    std::span<const float> sem_feature(std::size_t i) const {
        return {sem_features.data() + i * sem_dim, sem_dim};
    }
    std::span<const float> ins_feature(std::size_t i) const {
        return {ins_features.data() + i * ins_dim, ins_dim};
    }
};

// Reporting pass over every scene invariant; empty result means load_scene
// would accept the serialized form.
std::vector<Violation> validate_scene(const Scene& scene);

std::vector<Violation> validate_camera(const Camera& camera);

inline bool rotation_orthonormal(const Mat3d& r, double tol = 1e-6) {
    Mat3d rrt = r * r.transposed();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double want = i == j ? 1.0 : 0.0;
            if (std::abs(rrt(i, j) - want) > tol) return false;
        }
    return true;
}

// Camera positioned at `eye` looking toward `target`, +z forward, +x right,
// +y down in image coordinates.
Camera look_at_camera(const Vec3d& eye, const Vec3d& target, const Vec3d& up, double fx, double fy,
                      double cx, double cy, int width, int height);

}  // namespace fsgs
