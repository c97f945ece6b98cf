// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations, used only by tests and the
// acceptance suite. Single-threaded by design; shares projection math with
// the renderer only through the projection module's public operations.

#pragma once

#include <vector>

#include "fsgs/rasterizer.hpp"

namespace fsgs {
namespace oracle {

// Per-pixel blending over all accepted surfels sorted by depth, no tiles.
// Applies the identical alpha/density/transmittance rules as the tile
// renderer. Refuses scenes above 10k surfels.
FrameBundle bruteforce_render(const Scene& scene, const Camera& camera,
                              const RenderConfig& config);

struct RectOverlap {
    bool overlap = false;
    double min_q = 0;  // minimum of the conic quadratic over the rect
};

// Closed-form conic/rectangle intersection: minimizes Q over the rectangle
// via the interior critical point and the four edges.
RectOverlap conic_rect_overlap(const Conic& conic, double x0, double y0, double x1, double y1);

// Second-tier oracle: dense grid sampling of Q over the rectangle.
RectOverlap conic_rect_overlap_sampled(const Conic& conic, double x0, double y0, double x1,
                                       double y1, int samples_per_axis = 64);

// Minimum of Q over the pixel centers of one tile (exact per-row vertex
// search); empty tiles (clipped to zero pixels) report no overlap.
RectOverlap conic_tile_pixel_min(const Conic& conic, const TileGrid& grid, int tx, int ty);

// Exact overlap decision for every (surfel, tile) pair. Refuses scenes above
// 2k surfels. Result: per accepted surfel, one byte per tile (1 = overlap);
// rejected surfels get empty vectors.
std::vector<std::vector<uint8_t>> bruteforce_tile_assign(const Scene& scene, const Camera& camera,
                                                         const TileGrid& grid);

// Number of contributors per pixel that pass the density and alpha rules
// (ignores transmittance termination).
std::vector<uint32_t> contributor_histogram(const Scene& scene, const Camera& camera);

}  // namespace oracle
}  // namespace fsgs
