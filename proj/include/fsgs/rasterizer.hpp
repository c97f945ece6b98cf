// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fsgs/scene.hpp"
#include "fsgs/segmentation.hpp"
#include "fsgs/tiles.hpp"

namespace fsgs {

enum : uint32_t {
    kChannelRgb = 1u << 0,
    kChannelDepth = 1u << 1,
    kChannelAlpha = 1u << 2,
    kChannelSemantic = 1u << 3,
    kChannelInstance = 1u << 4,
    kChannelPanoptic = 1u << 5,
    kChannelsAll = 0x3fu,
};

uint32_t channel_from_string(const std::string& name);  // 0 when unknown

struct RenderConfig {
    CullMode mode = CullMode::Accutile;
    std::optional<int> top_k;  // absent = full feature accumulation
    bool renormalize_topk = false;
    uint32_t channels = kChannelsAll;
    double transmittance_epsilon = 1e-4;
    int tile_size = kDefaultTileSize;
    int threads = 1;
};

struct RenderStats {
    uint64_t rn_total = 0;
    double rn_per_tile = 0;
    double wall_time_ms = 0;
    double fps = 0;
    uint64_t pixels_blended = 0;  // (pixel, contributor) pairs blended
    uint64_t feature_mads = 0;    // feature-channel multiply-adds
};

struct FrameBundle {
    int width = 0;
    int height = 0;
    uint32_t channels = 0;
    uint32_t num_classes = 0;
    uint32_t num_queries = 0;
    std::vector<float> rgb;              // H*W*3
    std::vector<float> depth;            // H*W, 0 where empty
    std::vector<float> alpha;            // H*W
    std::vector<float> semantic_logits;  // H*W*num_classes
    std::vector<float> instance_dist;    // H*W*num_queries
    PanopticMap panoptic;
    RenderStats stats;

    std::size_t pixel_count() const { return std::size_t(width) * std::size_t(height); }
};

// Indices of the k largest blend weights (ties resolved toward the earlier,
// i.e. closer, contributor), returned in depth order. Weights must be listed
// front to back with transmittance taken over the full list.
std::vector<uint32_t> topk_select(std::span<const double> weights, std::size_t k);

// Per-scene immutable render inputs: projected label distributions are
// computed once, not per frame.
struct SceneRenderData {
    const Scene* scene = nullptr;
    std::vector<float> instance_labels;  // N x M, rows sum to 1

    std::span<const float> labels(std::size_t i) const {
        std::size_t m = scene->queries.size();
        return {instance_labels.data() + i * m, m};
    }
};

SceneRenderData prepare_scene(const Scene& scene, int threads = 1);

// Tile-based front-to-back alpha blending. Deterministic: output buffers and
// integer counters are identical for any worker count.
FrameBundle render(const SceneRenderData& data, const Camera& camera, const RenderConfig& config);
FrameBundle render(const Scene& scene, const Camera& camera, const RenderConfig& config);

}  // namespace fsgs
