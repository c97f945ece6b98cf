// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/tiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fsgs/parallel.hpp"

namespace fsgs {

namespace {

// Clamp a continuous pixel interval [lo, hi] to a tile-index range.
TileRange pixel_box_to_tiles(double px0, double py0, double px1, double py1,
                             const TileGrid& grid) {
    TileRange r;
    if (px1 < 0 || py1 < 0 || px0 > grid.width || py0 > grid.height) return r;  // empty
    const double ts = grid.tile_size;
    r.x0 = std::clamp(int(std::floor(px0 / ts)), 0, grid.tiles_x - 1);
    r.y0 = std::clamp(int(std::floor(py0 / ts)), 0, grid.tiles_y - 1);
    r.x1 = std::clamp(int(std::floor(px1 / ts)), 0, grid.tiles_x - 1);
    r.y1 = std::clamp(int(std::floor(py1 / ts)), 0, grid.tiles_y - 1);
    return r;
}

}  // namespace

const char* to_string(CullMode mode) {
    switch (mode) {
        case CullMode::Loose: return "loose";
        case CullMode::Snug: return "snug";
        case CullMode::Accutile: return "accutile";
    }
    return "?";
}

bool cull_mode_from_string(const std::string& name, CullMode& out) {
    if (name == "loose") out = CullMode::Loose;
    else if (name == "snug") out = CullMode::Snug;
    else if (name == "accutile") out = CullMode::Accutile;
    else return false;
    return true;
}

TileRange loose_aabb_tiles(const Conic& conic, const TileGrid& grid) {
    auto eig = sym2x2_eigenvalues(conic.sigma_xx, conic.sigma_xy, conic.sigma_yy);
    double radius = conic.k * std::sqrt(std::max(eig[1], 0.0));
    return pixel_box_to_tiles(conic.center.x - radius, conic.center.y - radius,
                              conic.center.x + radius, conic.center.y + radius, grid);
}

SnugBounds snugbox_bounds(const Conic& conic, const TileGrid& grid) {
    SnugBounds s;
    double rx = conic.k * std::sqrt(std::max(conic.sigma_xx, 0.0));
    double ry = conic.k * std::sqrt(std::max(conic.sigma_yy, 0.0));
    s.px0 = conic.center.x - rx;
    s.px1 = conic.center.x + rx;
    s.py0 = conic.center.y - ry;
    s.py1 = conic.center.y + ry;
    s.tiles = pixel_box_to_tiles(s.px0, s.py0, s.px1, s.py1, grid);
    return s;
}

std::vector<RowSpan> accutile_row_spans(const Conic& conic, const TileGrid& grid,
                                        const SnugBounds& snug) {
    std::vector<RowSpan> spans;
    if (snug.tiles.empty()) return spans;
    spans.reserve(std::size_t(snug.tiles.y1 - snug.tiles.y0 + 1));

    const double ts = grid.tile_size;
    const double rx = conic.k * std::sqrt(std::max(conic.sigma_xx, 0.0));
    // y coordinates where the ellipse attains its horizontal extremes.
    const double y_at_xmax = conic.center.y + conic.k * conic.sigma_xy / std::sqrt(conic.sigma_xx);
    const double y_at_xmin = 2 * conic.center.y - y_at_xmax;

    for (int ty = snug.tiles.y0; ty <= snug.tiles.y1; ++ty) {
        RowSpan span;
        span.row = ty;
        // Clamp the row band to the ellipse's vertical extent so the quadratic
        // has real roots at both evaluation points.
        double band0 = std::max(double(ty) * ts, snug.py0);
        double band1 = std::min(double(ty + 1) * ts, snug.py1);
        if (band0 > band1) {
            spans.push_back(span);  // empty row (discriminant negative throughout)
            continue;
        }
        double xlo = std::numeric_limits<double>::infinity();
        double xhi = -std::numeric_limits<double>::infinity();
        for (double y : {band0, band1}) {
            // A x^2 + (2B y + 2D) x + (C y^2 + 2E y + F) = 0
            double qb = 2 * conic.b * y + 2 * conic.d;
            double qc = conic.c * y * y + 2 * conic.e * y + conic.f;
            double disc = qb * qb - 4 * conic.a * qc;
            if (disc < 0) disc = 0;  // y is inside the ellipse band; negative only from rounding
            double root = std::sqrt(disc);
            xlo = std::min(xlo, (-qb - root) / (2 * conic.a));
            xhi = std::max(xhi, (-qb + root) / (2 * conic.a));
        }
        if (y_at_xmax >= band0 && y_at_xmax <= band1) xhi = std::max(xhi, conic.center.x + rx);
        if (y_at_xmin >= band0 && y_at_xmin <= band1) xlo = std::min(xlo, conic.center.x - rx);

        if (xhi < 0 || xlo > grid.width) {
            spans.push_back(span);  // ellipse slice entirely off-image
            continue;
        }
        span.col0 = std::clamp(int(std::floor(xlo / ts)), snug.tiles.x0, snug.tiles.x1);
        span.col1 = std::clamp(int(std::floor(xhi / ts)), snug.tiles.x0, snug.tiles.x1);
        spans.push_back(span);
    }
    return spans;
}

namespace {

// Transposed AccuTile: per tile-column row spans, used when the snug box has
// fewer columns than rows so the outer loop runs over the shorter axis.
struct ColSpan {
    int col = 0;
    int row0 = 0;
    int row1 = -1;
};

std::vector<ColSpan> accutile_col_spans(const Conic& conic, const TileGrid& grid,
                                        const SnugBounds& snug) {
    std::vector<ColSpan> spans;
    if (snug.tiles.empty()) return spans;
    spans.reserve(std::size_t(snug.tiles.x1 - snug.tiles.x0 + 1));

    const double ts = grid.tile_size;
    const double ry = conic.k * std::sqrt(std::max(conic.sigma_yy, 0.0));
    const double x_at_ymax = conic.center.x + conic.k * conic.sigma_xy / std::sqrt(conic.sigma_yy);
    const double x_at_ymin = 2 * conic.center.x - x_at_ymax;

    for (int tx = snug.tiles.x0; tx <= snug.tiles.x1; ++tx) {
        ColSpan span;
        span.col = tx;
        double band0 = std::max(double(tx) * ts, snug.px0);
        double band1 = std::min(double(tx + 1) * ts, snug.px1);
        if (band0 > band1) {
            spans.push_back(span);
            continue;
        }
        double ylo = std::numeric_limits<double>::infinity();
        double yhi = -std::numeric_limits<double>::infinity();
        for (double x : {band0, band1}) {
            // C y^2 + (2B x + 2E) y + (A x^2 + 2D x + F) = 0
            double qb = 2 * conic.b * x + 2 * conic.e;
            double qc = conic.a * x * x + 2 * conic.d * x + conic.f;
            double disc = qb * qb - 4 * conic.c * qc;
            if (disc < 0) disc = 0;
            double root = std::sqrt(disc);
            ylo = std::min(ylo, (-qb - root) / (2 * conic.c));
            yhi = std::max(yhi, (-qb + root) / (2 * conic.c));
        }
        if (x_at_ymax >= band0 && x_at_ymax <= band1) yhi = std::max(yhi, conic.center.y + ry);
        if (x_at_ymin >= band0 && x_at_ymin <= band1) ylo = std::min(ylo, conic.center.y - ry);

        if (yhi < 0 || ylo > grid.height) {
            spans.push_back(span);
            continue;
        }
        span.row0 = std::clamp(int(std::floor(ylo / ts)), snug.tiles.y0, snug.tiles.y1);
        span.row1 = std::clamp(int(std::floor(yhi / ts)), snug.tiles.y0, snug.tiles.y1);
        spans.push_back(span);
    }
    return spans;
}

}  // namespace

std::vector<ProjectedSurfel> project_scene(const Scene& scene, const Camera& camera, int threads) {
    std::vector<ProjectedSurfel> out(scene.surfels.size());
    parallel_for(scene.surfels.size(), threads, [&](std::size_t i) {
        ProjectedSurfel& p = out[i];
        auto t = tangent_to_screen_transform(scene.surfels[i], camera);
        if (!t) return;
        auto conic = project_conic(*t);
        if (!conic) return;
        p.accepted = true;
        p.xform = *t;
        p.conic = *conic;
        p.depth = float(view_depth(scene.surfels[i], camera));
    });
    return out;
}

TileAssignment assign_tiles(std::span<const ProjectedSurfel> projected, const TileGrid& grid,
                            CullMode mode, int threads) {
    TileAssignment assignment;
    assignment.grid = grid;
    assignment.tiles.resize(std::size_t(grid.tile_count()));

    // Phase 1 (parallel): per-surfel tile sets as row spans.
    std::vector<std::vector<RowSpan>> per_surfel(projected.size());
    parallel_for(projected.size(), threads, [&](std::size_t i) {
        const ProjectedSurfel& p = projected[i];
        if (!p.accepted) return;
        std::vector<RowSpan>& spans = per_surfel[i];
        switch (mode) {
            case CullMode::Loose: {
                TileRange r = loose_aabb_tiles(p.conic, grid);
                for (int ty = r.y0; ty <= r.y1; ++ty) spans.push_back({ty, r.x0, r.x1});
                break;
            }
            case CullMode::Snug: {
                TileRange r = snugbox_bounds(p.conic, grid).tiles;
                for (int ty = r.y0; ty <= r.y1; ++ty) spans.push_back({ty, r.x0, r.x1});
                break;
            }
            case CullMode::Accutile: {
                SnugBounds snug = snugbox_bounds(p.conic, grid);
                const TileRange& r = snug.tiles;
                if (r.empty()) break;
                // Adaptive traversal: solve the intersection quadratics along
                // whichever axis has the shorter tile span.
                int xs = r.x1 - r.x0 + 1;
                int ys = r.y1 - r.y0 + 1;
                if (ys <= xs) {
                    spans = accutile_row_spans(p.conic, grid, snug);
                } else {
                    spans.resize(std::size_t(ys));
                    for (int k = 0; k < ys; ++k)
                        spans[std::size_t(k)] = {r.y0 + k, grid.tiles_x, -1};
                    for (const ColSpan& cs : accutile_col_spans(p.conic, grid, snug)) {
                        for (int row = cs.row0; row <= cs.row1; ++row) {
                            RowSpan& rs = spans[std::size_t(row - r.y0)];
                            rs.col0 = std::min(rs.col0, cs.col);
                            rs.col1 = std::max(rs.col1, cs.col);
                        }
                    }
                }
                break;
            }
        }
    });

    // Phase 2 (serial scatter in surfel order, then per-tile depth sort):
    // output is independent of the worker count.
    for (std::size_t i = 0; i < per_surfel.size(); ++i) {
        for (const RowSpan& span : per_surfel[i]) {
            for (int tx = span.col0; tx <= span.col1; ++tx) {
                assignment.tiles[std::size_t(grid.tile_index(tx, span.row))].push_back(
                    {uint32_t(i), projected[i].depth});
            }
        }
    }

    uint64_t total = 0;
    uint64_t nonempty = 0;
    for (auto& list : assignment.tiles) {
        std::sort(list.begin(), list.end(), [](const auto& l, const auto& r) {
            return l.depth != r.depth ? l.depth < r.depth : l.surfel < r.surfel;
        });
        total += list.size();
        if (!list.empty()) ++nonempty;
    }
    assignment.rn_total = total;
    assignment.rn_per_tile = nonempty ? double(total) / double(nonempty) : 0.0;
    return assignment;
}

TileAssignment assign_tiles(const Scene& scene, const Camera& camera, CullMode mode, int tile_size,
                            int threads) {
    TileGrid grid = TileGrid::for_image(camera.width, camera.height, tile_size);
    auto projected = project_scene(scene, camera, threads);
    return assign_tiles(projected, grid, mode, threads);
}

}  // namespace fsgs
