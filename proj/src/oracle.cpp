// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fsgs {
namespace oracle {

namespace {

// Depth-ordered accepted surfels with an enclosing pixel box per surfel. The
// box is derived from the conic's covariance extremes plus one pixel of slack;
// pixels outside it are outside the cutoff ellipse by construction.
struct OrderedSurfel {
    uint32_t id;
    int x0, y0, x1, y1;  // inclusive pixel box
};

std::vector<OrderedSurfel> ordered_surfels(const std::vector<ProjectedSurfel>& projected,
                                           int width, int height) {
    std::vector<uint32_t> order;
    for (uint32_t i = 0; i < projected.size(); ++i)
        if (projected[i].accepted) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](uint32_t l, uint32_t r) {
        if (projected[l].depth != projected[r].depth)
            return projected[l].depth < projected[r].depth;
        return l < r;
    });

    std::vector<OrderedSurfel> out;
    out.reserve(order.size());
    for (uint32_t id : order) {
        const Conic& c = projected[id].conic;
        double rx = c.k * std::sqrt(std::max(c.sigma_xx, 0.0)) + 1.0;
        double ry = c.k * std::sqrt(std::max(c.sigma_yy, 0.0)) + 1.0;
        OrderedSurfel s;
        s.id = id;
        s.x0 = std::max(0, int(std::floor(c.center.x - rx)));
        s.y0 = std::max(0, int(std::floor(c.center.y - ry)));
        s.x1 = std::min(width - 1, int(std::floor(c.center.x + rx)));
        s.y1 = std::min(height - 1, int(std::floor(c.center.y + ry)));
        if (s.x0 > s.x1 || s.y0 > s.y1) continue;  // fully off-image
        out.push_back(s);
    }
    return out;
}

}  // namespace

FrameBundle bruteforce_render(const Scene& scene, const Camera& camera,
                              const RenderConfig& config) {
    if (scene.surfels.size() > 10000)
        throw std::invalid_argument("bruteforce_render: scene exceeds the 10k surfel cost guard");

    const int width = camera.width;
    const int height = camera.height;
    const std::size_t n_px = std::size_t(width) * std::size_t(height);
    const uint32_t n_classes = scene.decoder.num_classes;
    const std::size_t n_queries = scene.queries.size();
    const std::size_t sem_dim = scene.sem_dim;

    uint32_t channels = config.channels;
    const bool want_panoptic = (channels & kChannelPanoptic) && n_classes > 0;
    uint32_t effective = channels;
    if (want_panoptic) effective |= kChannelSemantic | kChannelInstance | kChannelAlpha;
    const bool do_rgb = effective & kChannelRgb;
    const bool do_depth = effective & kChannelDepth;
    const bool do_sem = (effective & kChannelSemantic) && n_classes > 0;
    const bool do_inst = (effective & kChannelInstance) && n_queries > 0;

    FrameBundle frame;
    frame.width = width;
    frame.height = height;
    frame.channels = channels;
    frame.num_classes = n_classes;
    frame.num_queries = uint32_t(n_queries);
    if (do_rgb) frame.rgb.assign(n_px * 3, 0.0f);
    if (do_depth) frame.depth.assign(n_px, 0.0f);
    frame.alpha.assign(n_px, 0.0f);
    if (do_sem) frame.semantic_logits.assign(n_px * n_classes, 0.0f);
    if (do_inst) frame.instance_dist.assign(n_px * n_queries, 0.0f);

    SceneRenderData data = prepare_scene(scene, 1);
    auto projected = project_scene(scene, camera, 1);
    auto order = ordered_surfels(projected, width, height);

    // Depth-ordered contributor candidates per pixel.
    std::vector<std::vector<uint32_t>> per_pixel(n_px);
    for (const OrderedSurfel& s : order)
        for (int py = s.y0; py <= s.y1; ++py)
            for (int px = s.x0; px <= s.x1; ++px)
                per_pixel[std::size_t(py) * std::size_t(width) + std::size_t(px)].push_back(s.id);

    std::vector<float> sem_accum;
    if (do_sem) sem_accum.assign(n_px * sem_dim, 0.0f);
    const double eps_t = config.transmittance_epsilon;

    for (std::size_t pix = 0; pix < n_px; ++pix) {
        const Vec2d pixel{double(pix % std::size_t(width)) + 0.5,
                          double(pix / std::size_t(width)) + 0.5};
        double transmittance = 1.0;
        double depth_sum = 0.0;
        float* rgb_out = do_rgb ? frame.rgb.data() + pix * 3 : nullptr;
        float* feat_out = do_sem ? sem_accum.data() + pix * sem_dim : nullptr;
        float* inst_out = do_inst ? frame.instance_dist.data() + pix * n_queries : nullptr;

        for (uint32_t id : per_pixel[pix]) {
            auto sample = ray_splat_intersect(projected[id].xform, pixel);
            if (!sample) continue;
            double rho = sample->u * sample->u + sample->v * sample->v;
            if (rho > kDensityCutoff * kDensityCutoff) continue;
            double alpha = double(scene.surfels[id].opacity) * std::exp(-0.5 * rho);
            if (alpha > kMaxAlpha) alpha = kMaxAlpha;
            if (alpha < kMinAlpha) continue;

            const double w = alpha * transmittance;
            const float wf = float(w);
            if (do_rgb) {
                const Vec3f& c = scene.surfels[id].rgb;
                rgb_out[0] += wf * c.x;
                rgb_out[1] += wf * c.y;
                rgb_out[2] += wf * c.z;
            }
            if (do_depth) depth_sum += w * sample->depth;
            if (do_sem) {
                auto f = scene.sem_feature(id);
                for (std::size_t k = 0; k < sem_dim; ++k) feat_out[k] += wf * f[k];
            }
            if (do_inst) {
                auto l = data.labels(id);
                for (std::size_t k = 0; k < n_queries; ++k) inst_out[k] += wf * l[k];
            }
            ++frame.stats.pixels_blended;
            transmittance *= 1.0 - alpha;
            if (transmittance < eps_t) break;
        }

        const double alpha_px = 1.0 - transmittance;
        frame.alpha[pix] = float(alpha_px);
        if (do_depth) frame.depth[pix] = alpha_px > 1e-4 ? float(depth_sum / alpha_px) : 0.0f;
    }

    if (do_sem) {
        for (std::size_t pix = 0; pix < n_px; ++pix)
            decode_semantic_pixel({sem_accum.data() + pix * sem_dim, sem_dim}, scene.decoder,
                                  {frame.semantic_logits.data() + pix * n_classes, n_classes});
    }
    if (want_panoptic)
        frame.panoptic = fuse_panoptic(frame.semantic_logits, frame.instance_dist, frame.alpha,
                                       width, height, scene.decoder, n_queries);
    return frame;
}

RectOverlap conic_rect_overlap(const Conic& conic, double x0, double y0, double x1, double y1) {
    RectOverlap r;
    const double cx = conic.center.x;
    const double cy = conic.center.y;
    if (cx >= x0 && cx <= x1 && cy >= y0 && cy <= y1) {
        r.min_q = -conic.k * conic.k;
        r.overlap = true;
        return r;
    }

    double best = std::numeric_limits<double>::infinity();
    // Horizontal edges: quadratic in x, convex, minimum at the clamped vertex.
    for (double y : {y0, y1}) {
        double xv = std::clamp(-(conic.b * y + conic.d) / conic.a, x0, x1);
        best = std::min(best, conic.eval(xv, y));
    }
    // Vertical edges: quadratic in y.
    for (double x : {x0, x1}) {
        double yv = std::clamp(-(conic.b * x + conic.e) / conic.c, y0, y1);
        best = std::min(best, conic.eval(x, yv));
    }
    r.min_q = best;
    r.overlap = best <= 0;
    return r;
}

RectOverlap conic_rect_overlap_sampled(const Conic& conic, double x0, double y0, double x1,
                                       double y1, int samples_per_axis) {
    RectOverlap r;
    double best = std::numeric_limits<double>::infinity();
    const int n = samples_per_axis;
    for (int iy = 0; iy < n; ++iy) {
        double y = y0 + (y1 - y0) * double(iy) / double(n - 1);
        for (int ix = 0; ix < n; ++ix) {
            double x = x0 + (x1 - x0) * double(ix) / double(n - 1);
            best = std::min(best, conic.eval(x, y));
        }
    }
    r.min_q = best;
    r.overlap = best <= 0;
    return r;
}

RectOverlap conic_tile_pixel_min(const Conic& conic, const TileGrid& grid, int tx, int ty) {
    RectOverlap r;
    r.min_q = std::numeric_limits<double>::infinity();
    const int px0 = tx * grid.tile_size;
    const int py0 = ty * grid.tile_size;
    const int px1 = std::min(px0 + grid.tile_size, grid.width) - 1;
    const int py1 = std::min(py0 + grid.tile_size, grid.height) - 1;
    if (px1 < px0 || py1 < py0) return r;

    for (int py = py0; py <= py1; ++py) {
        const double y = py + 0.5;
        // Convex quadratic in x: check the pixel centers bracketing the vertex
        // plus the row endpoints.
        const double xv = -(conic.b * y + conic.d) / conic.a;
        int pv = int(std::floor(xv - 0.5));
        for (int px : {px0, px1, std::clamp(pv, px0, px1), std::clamp(pv + 1, px0, px1)})
            r.min_q = std::min(r.min_q, conic.eval(px + 0.5, y));
    }
    r.overlap = r.min_q <= 0;
    return r;
}

std::vector<std::vector<uint8_t>> bruteforce_tile_assign(const Scene& scene, const Camera& camera,
                                                         const TileGrid& grid) {
    if (scene.surfels.size() > 2000)
        throw std::invalid_argument("bruteforce_tile_assign: scene exceeds the 2k surfel guard");

    auto projected = project_scene(scene, camera, 1);
    std::vector<std::vector<uint8_t>> out(projected.size());
    for (std::size_t i = 0; i < projected.size(); ++i) {
        if (!projected[i].accepted) continue;
        const Conic& conic = projected[i].conic;
        out[i].assign(std::size_t(grid.tile_count()), 0);

        // Independent enclosing-circle prune: tiles beyond the largest
        // semi-axis cannot intersect the ellipse.
        auto eig = sym2x2_eigenvalues(conic.sigma_xx, conic.sigma_xy, conic.sigma_yy);
        double radius = conic.k * std::sqrt(std::max(eig[1], 0.0)) + 1.0;
        int tx0 = std::max(0, int(std::floor((conic.center.x - radius) / grid.tile_size)));
        int ty0 = std::max(0, int(std::floor((conic.center.y - radius) / grid.tile_size)));
        int tx1 = std::min(grid.tiles_x - 1, int(std::floor((conic.center.x + radius) / grid.tile_size)));
        int ty1 = std::min(grid.tiles_y - 1, int(std::floor((conic.center.y + radius) / grid.tile_size)));

        for (int ty = ty0; ty <= ty1; ++ty) {
            for (int tx = tx0; tx <= tx1; ++tx) {
                double x0 = tx * grid.tile_size;
                double y0 = ty * grid.tile_size;
                double x1 = std::min<double>(x0 + grid.tile_size, grid.width);
                double y1 = std::min<double>(y0 + grid.tile_size, grid.height);
                if (conic_rect_overlap(conic, x0, y0, x1, y1).overlap)
                    out[i][std::size_t(grid.tile_index(tx, ty))] = 1;
            }
        }
    }
    return out;
}

std::vector<uint32_t> contributor_histogram(const Scene& scene, const Camera& camera) {
    auto projected = project_scene(scene, camera, 1);
    auto order = ordered_surfels(projected, camera.width, camera.height);
    std::vector<uint32_t> counts(std::size_t(camera.width) * std::size_t(camera.height), 0);
    for (const OrderedSurfel& s : order) {
        for (int py = s.y0; py <= s.y1; ++py) {
            for (int px = s.x0; px <= s.x1; ++px) {
                auto sample =
                    ray_splat_intersect(projected[s.id].xform, Vec2d{px + 0.5, py + 0.5});
                if (!sample) continue;
                double rho = sample->u * sample->u + sample->v * sample->v;
                if (rho > kDensityCutoff * kDensityCutoff) continue;
                double alpha = double(scene.surfels[s.id].opacity) * std::exp(-0.5 * rho);
                if (std::min(alpha, kMaxAlpha) < kMinAlpha) continue;
                ++counts[std::size_t(py) * std::size_t(camera.width) + std::size_t(px)];
            }
        }
    }
    return counts;
}

}  // namespace oracle
}  // namespace fsgs
