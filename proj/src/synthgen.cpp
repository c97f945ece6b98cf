// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fsgs/oracle.hpp"

namespace fsgs {

namespace {

constexpr uint32_t kSemDim = 16;
constexpr uint32_t kInsDim = 32;

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(uint64_t seed) : engine(seed) {}

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (double(engine() >> 11) * 0x1.0p-53);
    }
    double normal() {
        // Box-Muller; implementation-defined std distributions are avoided so
        // scenes stay bit-identical across standard libraries.
        double u1 = std::max(uniform(0.0, 1.0), 1e-12);
        double u2 = uniform(0.0, 1.0);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    std::vector<float> unit_vector(std::size_t dim) {
        std::vector<float> v(dim);
        double n2 = 0;
        for (auto& x : v) {
            double g = normal();
            x = float(g);
            n2 += g * g;
        }
        double inv = 1.0 / std::sqrt(std::max(n2, 1e-12));
        for (auto& x : v) x = float(x * inv);
        return v;
    }
};

// Near-orthogonal object feature basis keeps query affinities separable by a
// wide margin regardless of the draw.
std::vector<std::vector<float>> orthonormal_features(Rng& rng, std::size_t count,
                                                     std::size_t dim) {
    std::vector<std::vector<float>> basis;
    while (basis.size() < count) {
        std::vector<float> v = rng.unit_vector(dim);
        for (const auto& b : basis) {
            double d = 0;
            for (std::size_t i = 0; i < dim; ++i) d += double(v[i]) * double(b[i]);
            for (std::size_t i = 0; i < dim; ++i) v[i] -= float(d * b[i]);
        }
        double n2 = 0;
        for (float x : v) n2 += double(x) * double(x);
        if (n2 < 1e-6) continue;  // rare near-collinear draw, retry
        double inv = 1.0 / std::sqrt(n2);
        for (auto& x : v) x = float(x * inv);
        basis.push_back(std::move(v));
    }
    return basis;
}

struct Builder {
    Scene scene;
    Rng& rng;
    // object id per surfel: -1 for stuff, else index into object feature table
    std::vector<int> object_of_surfel;

    Builder(Rng& r, std::vector<std::string> classes, std::vector<uint8_t> things) : rng(r) {
        scene.sem_dim = kSemDim;
        scene.ins_dim = kInsDim;
        SemanticDecoder& d = scene.decoder;
        d.num_classes = uint32_t(classes.size());
        d.feature_dim = kSemDim;
        d.class_names = std::move(classes);
        d.thing_flags = std::move(things);
        d.weights.assign(std::size_t(d.num_classes) * kSemDim, 0.0f);
        d.bias.assign(d.num_classes, 0.0f);
        for (uint32_t c = 0; c < d.num_classes; ++c) d.weights[c * kSemDim + c] = 1.0f;
    }

    void add_surfel(const Vec3f& center, const Vec3f& tu, const Vec3f& tv, float su, float sv,
                    float opacity, const Vec3f& rgb, int class_id, int object_id,
                    const std::vector<std::vector<float>>& object_features) {
        Surfel s;
        s.center = center;
        s.tangent_u = tu;
        s.tangent_v = tv;
        s.scale_u = su;
        s.scale_v = sv;
        s.opacity = opacity;
        s.rgb = rgb;
        scene.surfels.push_back(s);
        object_of_surfel.push_back(object_id);

        // One-hot class embedding with mild noise.
        for (uint32_t k = 0; k < kSemDim; ++k) {
            float v = float(0.05 * rng.normal());
            if (int(k) == class_id) v += 1.0f;
            scene.sem_features.push_back(v);
        }
        std::vector<float> ins =
            object_id >= 0 ? object_features[std::size_t(object_id)] : rng.unit_vector(kInsDim);
        scene.ins_features.insert(scene.ins_features.end(), ins.begin(), ins.end());
    }

    // One query per object: centroid position, diagonal covariance from the
    // object's spatial extent, feature = 4x the object feature vector.
    void attach_queries(const std::vector<std::vector<float>>& object_features,
                        double cov_floor = 0.05) {
        std::size_t m = object_features.size();
        std::vector<Vec3d> sum(m, Vec3d{0, 0, 0});
        std::vector<Vec3d> sq(m, Vec3d{0, 0, 0});
        std::vector<int> count(m, 0);
        for (std::size_t i = 0; i < scene.surfels.size(); ++i) {
            int obj = object_of_surfel[i];
            if (obj < 0) continue;
            const Vec3f& c = scene.surfels[i].center;
            sum[std::size_t(obj)] = sum[std::size_t(obj)] + Vec3d{c.x, c.y, c.z};
            sq[std::size_t(obj)] =
                sq[std::size_t(obj)] + Vec3d{double(c.x) * c.x, double(c.y) * c.y, double(c.z) * c.z};
            ++count[std::size_t(obj)];
        }
        for (std::size_t q = 0; q < m; ++q) {
            InstanceQuery query;
            double n = std::max(count[q], 1);
            Vec3d mean = sum[q] * (1.0 / n);
            query.center = {float(mean.x), float(mean.y), float(mean.z)};
            Vec3d var = sq[q] * (1.0 / n) - Vec3d{mean.x * mean.x, mean.y * mean.y, mean.z * mean.z};
            query.covariance = Mat3f::identity();
            query.covariance(0, 0) = float(std::max(var.x, cov_floor));
            query.covariance(1, 1) = float(std::max(var.y, cov_floor));
            query.covariance(2, 2) = float(std::max(var.z, cov_floor));
            query.feature.resize(kInsDim);
            for (uint32_t k = 0; k < kInsDim; ++k)
                query.feature[k] = 4.0f * object_features[q][k];
            query.refresh_inverse();
            scene.queries.push_back(std::move(query));
        }
    }
};

GeneratedScene finalize(Builder&& builder, std::vector<Camera> cameras) {
    GeneratedScene out;
    out.scene = std::move(builder.scene);
    out.cameras = std::move(cameras);

    RenderConfig full;
    full.channels = kChannelSemantic | kChannelInstance | kChannelAlpha | kChannelPanoptic;
    for (const Camera& cam : out.cameras) {
        FrameBundle frame = oracle::bruteforce_render(out.scene, cam, full);
        std::vector<int> sem(frame.pixel_count(), -1);
        for (std::size_t i = 0; i < sem.size(); ++i)
            if (frame.panoptic.packed[i] != 0) sem[i] = panoptic_class(frame.panoptic.packed[i]);
        out.gt_semantic.push_back(std::move(sem));
        out.gt_panoptic.push_back(std::move(frame.panoptic));
    }
    return out;
}

GeneratedScene generate_room(int n_surfels, int n_instances, uint64_t seed) {
    Rng rng(seed * 2654435761u + 1);
    Builder b(rng, {"floor", "wall", "box"}, {0, 0, 1});

    const int n_boxes = std::clamp(n_instances, 1, 8);
    auto features = orthonormal_features(rng, std::size_t(n_boxes), kInsDim);

    const int box_budget = n_boxes * 20;
    const int rest = std::max(n_surfels - box_budget, 60);
    const int floor_n = int(std::round(std::sqrt(rest * 0.6)));
    const int wall_n = int(std::round(std::sqrt(rest * 0.4)));

    // Floor: y = 0, x in [-3, 3], z in [0.5, 6.5].
    {
        const double x0 = -3, x1 = 3, z0 = 0.5, z1 = 6.5;
        const double dx = (x1 - x0) / floor_n, dz = (z1 - z0) / floor_n;
        const float scale = float(0.8 * std::max(dx, dz));
        for (int i = 0; i < floor_n; ++i)
            for (int j = 0; j < floor_n; ++j) {
                Vec3f c{float(x0 + (i + 0.5) * dx + 0.05 * rng.normal()), 0.0f,
                        float(z0 + (j + 0.5) * dz + 0.05 * rng.normal())};
                float shade = float(0.45 + 0.1 * rng.uniform(0, 1));
                b.add_surfel(c, {1, 0, 0}, {0, 0, 1}, scale, scale, 0.95f,
                             {shade, shade, shade * 0.9f}, 0, -1, features);
            }
    }
    // Back wall: z = 6.5, x in [-3, 3], y in [0, 3].
    {
        const double x0 = -3, x1 = 3, y0 = 0, y1 = 3;
        const double dx = (x1 - x0) / wall_n, dy = (y1 - y0) / wall_n;
        const float scale = float(0.8 * std::max(dx, dy));
        for (int i = 0; i < wall_n; ++i)
            for (int j = 0; j < wall_n; ++j) {
                Vec3f c{float(x0 + (i + 0.5) * dx + 0.05 * rng.normal()),
                        float(y0 + (j + 0.5) * dy + 0.05 * rng.normal()), 6.5f};
                float shade = float(0.7 + 0.1 * rng.uniform(0, 1));
                b.add_surfel(c, {1, 0, 0}, {0, 1, 0}, scale, scale, 0.95f,
                             {shade * 0.9f, shade * 0.95f, shade}, 1, -1, features);
            }
    }
    // Boxes: 5 exposed faces, 2x2 surfels each. Centers keep a minimum
    // spacing so query proximities stay separable.
    std::vector<Vec2d> placed;
    for (int box = 0; box < n_boxes; ++box) {
        const double half = rng.uniform(0.22, 0.35);
        double cx = 0, cz = 0;
        for (int attempt = 0; attempt < 200; ++attempt) {
            cx = rng.uniform(-1.8, 1.8);
            cz = rng.uniform(1.6, 4.8);
            bool clear = true;
            for (const Vec2d& p : placed) {
                double dx = p.x - cx, dz = p.y - cz;
                clear = clear && dx * dx + dz * dz >= 1.0;
            }
            if (clear) break;
        }
        placed.push_back({cx, cz});
        const double cy = half;
        Vec3f color{float(rng.uniform(0.2, 1.0)), float(rng.uniform(0.2, 1.0)),
                    float(rng.uniform(0.2, 1.0))};
        const float fs = float(half * 0.62);

        struct Face {
            Vec3d center, tu, tv;
        };
        const Face faces[5] = {
            {{cx, cy + half, cz}, {1, 0, 0}, {0, 0, 1}},   // top
            {{cx, cy, cz - half}, {1, 0, 0}, {0, 1, 0}},   // front
            {{cx, cy, cz + half}, {1, 0, 0}, {0, 1, 0}},   // back
            {{cx - half, cy, cz}, {0, 0, 1}, {0, 1, 0}},   // left
            {{cx + half, cy, cz}, {0, 0, 1}, {0, 1, 0}},   // right
        };
        for (const Face& f : faces) {
            for (int i = -1; i <= 1; i += 2)
                for (int j = -1; j <= 1; j += 2) {
                    Vec3d p = f.center + f.tu * (0.5 * half * i) + f.tv * (0.5 * half * j);
                    b.add_surfel({float(p.x), float(p.y), float(p.z)},
                                 {float(f.tu.x), float(f.tu.y), float(f.tu.z)},
                                 {float(f.tv.x), float(f.tv.y), float(f.tv.z)}, fs, fs, 0.92f,
                                 color, 2, box, features);
                }
        }
    }
    b.attach_queries(features);

    std::vector<Camera> cameras;
    cameras.push_back(look_at_camera({0, 1.5, -2.4}, {0, 0.6, 2.5}, {0, 1, 0}, 220, 220, 128, 128,
                                     256, 256));
    cameras.push_back(look_at_camera({1.2, 1.7, -2.0}, {-0.3, 0.5, 2.8}, {0, 1, 0}, 220, 220, 128,
                                     128, 256, 256));
    return finalize(std::move(b), std::move(cameras));
}

GeneratedScene generate_thin(int n_surfels, int n_instances, uint64_t seed) {
    Rng rng(seed * 2654435761u + 2);
    Builder b(rng, {"backdrop", "ribbon"}, {0, 1});

    const int n_groups = std::clamp(n_instances, 1, 8);
    auto features = orthonormal_features(rng, std::size_t(n_groups), kInsDim);

    // Backdrop plane at z = 9 keeps most pixels opaque.
    {
        const int n = 8;
        const double extent = 6.5;
        const double d = 2 * extent / n;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                b.add_surfel({float(-extent + (i + 0.5) * d), float(-extent + (j + 0.5) * d), 9.0f},
                             {1, 0, 0}, {0, 1, 0}, float(0.85 * d), float(0.85 * d), 1.0f,
                             {0.25f, 0.25f, 0.3f}, 0, -1, features);
    }

    const int n_ribbons = std::max(n_surfels - 64, 16);
    for (int i = 0; i < n_ribbons; ++i) {
        double z = rng.uniform(4.0, 7.0);
        double extent = 0.55 * z * (128.0 / 200.0);
        Vec3f center{float(rng.uniform(-extent, extent)), float(rng.uniform(-extent, extent)),
                     float(z)};
        // In-plane rotation plus a small out-of-plane tilt keeps the projected
        // aspect ratio high.
        double theta = rng.uniform(0, M_PI);
        double tilt = rng.uniform(-0.17, 0.17);
        Vec3d u0{std::cos(theta), std::sin(theta), 0};
        Vec3d v0{-std::sin(theta), std::cos(theta), 0};
        Vec3d u = normalized(u0 * std::cos(tilt) + Vec3d{0, 0, 1} * std::sin(tilt));
        Vec3d v = v0;

        float ru = float(rng.uniform(0.45, 0.8));
        float rv = float(ru / rng.uniform(24.0, 32.0));
        // Group by fixed world-x bands (not the depth-dependent extent) so
        // each group's spatial footprint is a clean slab.
        int group = std::clamp(int((center.x + 2.5) / 5.0 * n_groups), 0, n_groups - 1);
        Vec3f color{float(rng.uniform(0.3, 1.0)), float(rng.uniform(0.3, 1.0)),
                    float(rng.uniform(0.3, 1.0))};
        b.add_surfel(center, {float(u.x), float(u.y), float(u.z)},
                     {float(v.x), float(v.y), float(v.z)}, ru, rv, 0.85f, color, 1, group,
                     features);
    }
    // A generous shared covariance floor keeps the proximity comparison
    // symmetric across groups; separation then rides on feature similarity.
    b.attach_queries(features, 9.0);

    std::vector<Camera> cameras;
    Camera cam;
    cam.fx = cam.fy = 200;
    cam.cx = cam.cy = 128;
    cam.width = cam.height = 256;
    cameras.push_back(cam);
    return finalize(std::move(b), std::move(cameras));
}

GeneratedScene generate_stack(int n_surfels, int n_instances, uint64_t seed) {
    Rng rng(seed * 2654435761u + 3);
    Builder b(rng, {"sheet"}, {1});

    const int n_strips = std::clamp(n_instances, 2, 8);
    const int layers = std::max(64, n_surfels / n_strips);
    auto features = orthonormal_features(rng, std::size_t(n_strips), kInsDim);

    const double fx = 200, cx = 128;
    // Screen-space strip centers, jittered off the symmetric grid so no pixel
    // center is equidistant from two strips.
    std::vector<double> strip_px(static_cast<std::size_t>(n_strips), 0.0);
    for (int s = 0; s < n_strips; ++s)
        strip_px[std::size_t(s)] =
            256.0 * (s + 0.5) / n_strips + rng.uniform(0.7, 2.9) * (s % 2 ? 1 : -1);

    // Horizontal sigma keeps each pixel inside the cutoff reach of at most
    // the two nearest strips, so top-k selection degenerates to whole
    // layer-pairs and label argmaxes survive hard selection.
    const double sigma_px_u = 28.0, sigma_px_v = 110.0;
    for (int layer = 0; layer < layers; ++layer) {
        const double z = 4.0 + 0.015 * layer;
        // World sizes chosen so every layer of a strip shares the same screen
        // center and per-layer footprints are identical across strips.
        const float ru = float(sigma_px_u * z / fx);
        const float rv = float(sigma_px_v * z / fx);
        for (int s = 0; s < n_strips; ++s) {
            const double wx = (strip_px[std::size_t(s)] - cx) / fx * z;
            float shade = float(0.3 + 0.7 * (s + 1.0) / n_strips);
            b.add_surfel({float(wx), 0.0f, float(z)}, {1, 0, 0}, {0, 1, 0}, ru, rv, 0.07f,
                         {shade, float(1.0 - 0.5 * shade), float(0.2 + 0.1 * s)}, 0, s, features);
        }
    }
    b.attach_queries(features, 1.0);

    std::vector<Camera> cameras;
    Camera cam;
    cam.fx = cam.fy = fx;
    cam.cx = cam.cy = cx;
    cam.width = cam.height = 256;
    cameras.push_back(cam);
    return finalize(std::move(b), std::move(cameras));
}

}  // namespace

bool preset_from_string(const std::string& name, Preset& out) {
    if (name == "room") out = Preset::Room;
    else if (name == "thin") out = Preset::Thin;
    else if (name == "stack") out = Preset::Stack;
    else return false;
    return true;
}

const char* to_string(Preset preset) {
    switch (preset) {
        case Preset::Room: return "room";
        case Preset::Thin: return "thin";
        case Preset::Stack: return "stack";
    }
    return "?";
}

GeneratedScene generate_scene(Preset preset, int n_surfels, int n_instances, uint64_t seed) {
    if (n_surfels < 1) throw std::invalid_argument("generate_scene: n_surfels must be >= 1");
    switch (preset) {
        case Preset::Room: return generate_room(n_surfels, n_instances, seed);
        case Preset::Thin: return generate_thin(n_surfels, n_instances, seed);
        case Preset::Stack: return generate_stack(n_surfels, n_instances, seed);
    }
    throw std::invalid_argument("generate_scene: unknown preset");
}

}  // namespace fsgs
