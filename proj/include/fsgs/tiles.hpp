// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fsgs/projection.hpp"
#include "fsgs/scene.hpp"

namespace fsgs {

inline constexpr int kDefaultTileSize = 16;

struct TileGrid {
    int tile_size = kDefaultTileSize;
    int tiles_x = 0;
    int tiles_y = 0;
    int width = 0;
    int height = 0;

    static TileGrid for_image(int width, int height, int tile_size = kDefaultTileSize) {
        TileGrid g;
        g.tile_size = tile_size;
        g.width = width;
        g.height = height;
        g.tiles_x = (width + tile_size - 1) / tile_size;
        g.tiles_y = (height + tile_size - 1) / tile_size;
        return g;
    }
    int tile_count() const { return tiles_x * tiles_y; }
    int tile_index(int tx, int ty) const { return ty * tiles_x + tx; }
};

// Inclusive tile-index box; empty() when the surfel touches no tile.
struct TileRange {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
    bool empty() const { return x1 < x0 || y1 < y0; }
    long long count() const {
        return empty() ? 0 : (long long)(x1 - x0 + 1) * (long long)(y1 - y0 + 1);
    }
};

// Tight pixel-space ellipse bounds plus the tile box they map to.
struct SnugBounds {
    double px0 = 0, py0 = 0, px1 = -1, py1 = -1;
    TileRange tiles;
};

// One tile row with an inclusive column span; col1 < col0 marks an empty row.
struct RowSpan {
    int row = 0;
    int col0 = 0;
    int col1 = -1;
};

enum class CullMode { Loose, Snug, Accutile };

const char* to_string(CullMode mode);
bool cull_mode_from_string(const std::string& name, CullMode& out);

// Circumscribed square from the largest ellipse semi-axis (ablation baseline).
TileRange loose_aabb_tiles(const Conic& conic, const TileGrid& grid);

// Exact per-axis ellipse extremes: center +- k * sqrt(sigma_axis).
SnugBounds snugbox_bounds(const Conic& conic, const TileGrid& grid);

// Minimal contiguous column span per tile row: solves the conic/row-band
// intersection quadratic at both band edges and injects the ellipse's
// horizontal extremes when they fall inside the band.
std::vector<RowSpan> accutile_row_spans(const Conic& conic, const TileGrid& grid,
                                        const SnugBounds& snug);

// Per-surfel projection results shared by culling and rasterization.
struct ProjectedSurfel {
    bool accepted = false;
    TangentTransform xform;
    Conic conic;
    float depth = 0;
};

std::vector<ProjectedSurfel> project_scene(const Scene& scene, const Camera& camera, int threads);

struct TileAssignment {
    struct Entry {
        uint32_t surfel;
        float depth;
    };
    TileGrid grid;
    std::vector<std::vector<Entry>> tiles;  // per tile, sorted by (depth, surfel id)
    uint64_t rn_total = 0;
    double rn_per_tile = 0;  // rn_total / non-empty tiles
};

TileAssignment assign_tiles(std::span<const ProjectedSurfel> projected, const TileGrid& grid,
                            CullMode mode, int threads = 1);
TileAssignment assign_tiles(const Scene& scene, const Camera& camera, CullMode mode,
                            int tile_size = kDefaultTileSize, int threads = 1);

}  // namespace fsgs
