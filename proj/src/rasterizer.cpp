// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/rasterizer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "fsgs/parallel.hpp"

namespace fsgs {

uint32_t channel_from_string(const std::string& name) {
    if (name == "rgb") return kChannelRgb;
    if (name == "depth") return kChannelDepth;
    if (name == "alpha") return kChannelAlpha;
    if (name == "semantic") return kChannelSemantic;
    if (name == "instance") return kChannelInstance;
    if (name == "panoptic") return kChannelPanoptic;
    return 0;
}

std::vector<uint32_t> topk_select(std::span<const double> weights, std::size_t k) {
    std::vector<uint32_t> idx(weights.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = uint32_t(i);
    if (k >= weights.size()) return idx;

    auto better = [&](uint32_t l, uint32_t r) {
        if (weights[l] != weights[r]) return weights[l] > weights[r];
        return l < r;  // equal influence: the closer contributor wins
    };
    std::nth_element(idx.begin(), idx.begin() + long(k), idx.end(), better);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());  // restore depth order for accumulation
    return idx;
}

SceneRenderData prepare_scene(const Scene& scene, int threads) {
    SceneRenderData data;
    data.scene = &scene;
    data.instance_labels = instance_label_matrix(scene, threads);
    return data;
}

namespace {

// Per-worker scratch reused across tiles.
struct WorkerScratch {
    std::vector<float> feat;        // sem_dim accumulator
    std::vector<float> inst;        // num_queries accumulator
    std::vector<double> weights;    // collected blend weights, depth order
    std::vector<uint32_t> surfels;  // surfel id per collected weight
};

}  // namespace

FrameBundle render(const SceneRenderData& data, const Camera& camera,
                   const RenderConfig& config) {
    using clock = std::chrono::steady_clock;
    auto t_start = clock::now();

    const Scene& scene = *data.scene;
    const int width = camera.width;
    const int height = camera.height;
    const std::size_t n_px = std::size_t(width) * std::size_t(height);
    const uint32_t n_classes = scene.decoder.num_classes;
    const std::size_t n_queries = scene.queries.size();
    const std::size_t sem_dim = scene.sem_dim;

    uint32_t channels = config.channels;
    const bool want_panoptic = (channels & kChannelPanoptic) && n_classes > 0;
    // Panoptic fusion consumes semantic + instance + alpha.
    uint32_t effective = channels;
    if (want_panoptic) effective |= kChannelSemantic | kChannelInstance | kChannelAlpha;
    const bool do_rgb = effective & kChannelRgb;
    const bool do_depth = effective & kChannelDepth;
    const bool do_sem = (effective & kChannelSemantic) && n_classes > 0;
    const bool do_inst = (effective & kChannelInstance) && n_queries > 0;
    const uint64_t feature_width = (do_sem ? sem_dim : 0) + (do_inst ? n_queries : 0);

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

    const int threads = std::max(config.threads, 1);
    const TileGrid grid = TileGrid::for_image(width, height, config.tile_size);
    auto projected = project_scene(scene, camera, threads);
    TileAssignment assignment = assign_tiles(projected, grid, config.mode, threads);
    frame.stats.rn_total = assignment.rn_total;
    frame.stats.rn_per_tile = assignment.rn_per_tile;

    const std::size_t top_k =
        config.top_k ? std::size_t(std::max(*config.top_k, 1)) : std::size_t(0);
    const bool use_topk = config.top_k.has_value();
    const double eps_t = config.transmittance_epsilon;

    // Blended semantic features per pixel; decoded to logits afterwards.
    std::vector<float> sem_accum;
    if (do_sem) sem_accum.assign(n_px * sem_dim, 0.0f);

    const std::size_t n_tiles = assignment.tiles.size();
    std::vector<uint64_t> tile_blended(n_tiles, 0);
    std::vector<uint64_t> tile_mads(n_tiles, 0);

    std::atomic<std::size_t> next_tile{0};
    auto blend_tile = [&](std::size_t tile_idx, WorkerScratch& scratch) {
        const auto& list = assignment.tiles[tile_idx];
        if (list.empty()) return;
        const int tx = int(tile_idx) % grid.tiles_x;
        const int ty = int(tile_idx) / grid.tiles_x;
        const int x0 = tx * grid.tile_size;
        const int y0 = ty * grid.tile_size;
        const int x1 = std::min(x0 + grid.tile_size, width);
        const int y1 = std::min(y0 + grid.tile_size, height);

        uint64_t blended = 0;
        uint64_t mads = 0;

        for (int py = y0; py < y1; ++py) {
            for (int px = x0; px < x1; ++px) {
                const std::size_t pix = std::size_t(py) * std::size_t(width) + std::size_t(px);
                const Vec2d pixel{px + 0.5, py + 0.5};

                double transmittance = 1.0;
                double depth_sum = 0.0;
                float rgb_acc[3] = {0, 0, 0};
                if (do_sem) std::fill(scratch.feat.begin(), scratch.feat.end(), 0.0f);
                if (do_inst) std::fill(scratch.inst.begin(), scratch.inst.end(), 0.0f);
                scratch.weights.clear();
                scratch.surfels.clear();

                for (const TileAssignment::Entry& entry : list) {
                    const ProjectedSurfel& ps = projected[entry.surfel];
                    auto sample = ray_splat_intersect(ps.xform, pixel);
                    if (!sample) continue;
                    double rho = sample->u * sample->u + sample->v * sample->v;
                    if (rho > kDensityCutoff * kDensityCutoff) continue;
                    double alpha =
                        double(scene.surfels[entry.surfel].opacity) * std::exp(-0.5 * rho);
                    if (alpha > kMaxAlpha) alpha = kMaxAlpha;
                    if (alpha < kMinAlpha) continue;

                    const double w = alpha * transmittance;
                    const float wf = float(w);
                    if (do_rgb) {
                        const Vec3f& c = scene.surfels[entry.surfel].rgb;
                        rgb_acc[0] += wf * c.x;
                        rgb_acc[1] += wf * c.y;
                        rgb_acc[2] += wf * c.z;
                    }
                    if (do_depth) depth_sum += w * sample->depth;
                    if (feature_width > 0) {
                        if (use_topk) {
                            scratch.weights.push_back(w);
                            scratch.surfels.push_back(entry.surfel);
                        } else {
                            if (do_sem) {
                                auto f = scene.sem_feature(entry.surfel);
                                for (std::size_t k = 0; k < sem_dim; ++k)
                                    scratch.feat[k] += wf * f[k];
                            }
                            if (do_inst) {
                                auto l = data.labels(entry.surfel);
                                for (std::size_t k = 0; k < n_queries; ++k)
                                    scratch.inst[k] += wf * l[k];
                            }
                            mads += feature_width;
                        }
                    }
                    ++blended;
                    transmittance *= 1.0 - alpha;
                    if (transmittance < eps_t) break;
                }

                if (use_topk && feature_width > 0 && !scratch.weights.empty()) {
                    // Hard selection: K largest blend weights over the walked list.
                    std::vector<uint32_t> selected = topk_select(scratch.weights, top_k);
                    double wsum = 0;
                    for (uint32_t oi : selected) {
                        const uint32_t sid = scratch.surfels[oi];
                        const double w = scratch.weights[oi];
                        const float wf = float(w);
                        wsum += w;
                        if (do_sem) {
                            auto f = scene.sem_feature(sid);
                            for (std::size_t k = 0; k < sem_dim; ++k) scratch.feat[k] += wf * f[k];
                        }
                        if (do_inst) {
                            auto l = data.labels(sid);
                            for (std::size_t k = 0; k < n_queries; ++k)
                                scratch.inst[k] += wf * l[k];
                        }
                        mads += feature_width;
                    }
                    if (config.renormalize_topk && wsum > 0) {
                        const float inv = float(1.0 / wsum);
                        if (do_sem)
                            for (std::size_t k = 0; k < sem_dim; ++k) scratch.feat[k] *= inv;
                        if (do_inst)
                            for (std::size_t k = 0; k < n_queries; ++k) scratch.inst[k] *= inv;
                    }
                }

                const double alpha_px = 1.0 - transmittance;
                frame.alpha[pix] = float(alpha_px);
                if (do_rgb) {
                    frame.rgb[pix * 3 + 0] = rgb_acc[0];
                    frame.rgb[pix * 3 + 1] = rgb_acc[1];
                    frame.rgb[pix * 3 + 2] = rgb_acc[2];
                }
                if (do_depth)
                    frame.depth[pix] = alpha_px > 1e-4 ? float(depth_sum / alpha_px) : 0.0f;
                if (do_sem)
                    std::copy(scratch.feat.begin(), scratch.feat.end(),
                              sem_accum.begin() + long(pix * sem_dim));
                if (do_inst)
                    std::copy(scratch.inst.begin(), scratch.inst.end(),
                              frame.instance_dist.begin() + long(pix * n_queries));
            }
        }
        tile_blended[tile_idx] = blended;
        tile_mads[tile_idx] = mads;
    };

    auto worker = [&] {
        WorkerScratch scratch;
        if (do_sem) scratch.feat.resize(sem_dim);
        if (do_inst) scratch.inst.resize(n_queries);
        for (;;) {
            std::size_t t = next_tile.fetch_add(1);
            if (t >= n_tiles) return;
            blend_tile(t, scratch);
        }
    };
    {
        std::vector<std::thread> pool;
        for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
    }

    for (std::size_t t = 0; t < n_tiles; ++t) {
        frame.stats.pixels_blended += tile_blended[t];
        frame.stats.feature_mads += tile_mads[t];
    }

    if (do_sem) {
        parallel_for(n_px, threads, [&](std::size_t pix) {
            decode_semantic_pixel({sem_accum.data() + pix * sem_dim, sem_dim}, scene.decoder,
                                  {frame.semantic_logits.data() + pix * n_classes, n_classes});
        }, 4096);
    }
    if (want_panoptic) {
        frame.panoptic = fuse_panoptic(frame.semantic_logits, frame.instance_dist, frame.alpha,
                                       width, height, scene.decoder, n_queries);
    }

    auto t_end = clock::now();
    frame.stats.wall_time_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t_end - t_start)
            .count();
    frame.stats.fps = frame.stats.wall_time_ms > 0 ? 1000.0 / frame.stats.wall_time_ms : 0.0;
    return frame;
}

FrameBundle render(const Scene& scene, const Camera& camera, const RenderConfig& config) {
    SceneRenderData data = prepare_scene(scene, std::max(config.threads, 1));
    return render(data, camera, config);
}

}  // namespace fsgs
