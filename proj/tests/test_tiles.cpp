// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "fsgs/oracle.hpp"
#include "fsgs/tiles.hpp"
#include "test_support.hpp"

using namespace fsgs;
using testutil::TestRng;

namespace {

// Conic from an explicit covariance, for direct geometric cases.
Conic make_conic(double cx, double cy, double sxx, double sxy, double syy,
                 double k = kDensityCutoff) {
    Conic c;
    double det = sxx * syy - sxy * sxy;
    c.a = syy / det;
    c.b = -sxy / det;
    c.c = sxx / det;
    c.center = {cx, cy};
    c.k = k;
    c.d = -(c.a * cx + c.b * cy);
    c.e = -(c.b * cx + c.c * cy);
    c.f = c.a * cx * cx + 2 * c.b * cx * cy + c.c * cy * cy - k * k;
    c.sigma_xx = sxx;
    c.sigma_xy = sxy;
    c.sigma_yy = syy;
    return c;
}

// Covariance of an ellipse with semi-axes (a, b) at level k, rotated by phi.
Conic rotated_ellipse(double cx, double cy, double a, double b, double phi,
                      double k = kDensityCutoff) {
    double l1 = (a / k) * (a / k);
    double l2 = (b / k) * (b / k);
    double cs = std::cos(phi), sn = std::sin(phi);
    double sxx = cs * cs * l1 + sn * sn * l2;
    double syy = sn * sn * l1 + cs * cs * l2;
    double sxy = cs * sn * (l1 - l2);
    return make_conic(cx, cy, sxx, sxy, syy, k);
}

std::set<int> tiles_of(const TileAssignment& assignment, uint32_t surfel) {
    std::set<int> out;
    for (std::size_t t = 0; t < assignment.tiles.size(); ++t)
        for (const auto& e : assignment.tiles[t])
            if (e.surfel == surfel) out.insert(int(t));
    return out;
}

}  // namespace

TEST_CASE("loose box of an isotropic conic matches ceil arithmetic") {
    TileGrid grid = TileGrid::for_image(512, 512);
    // semi-axis 60 px, centered at a tile center (pixel 264 = tile 16 + 8 px)
    double r = 60;
    Conic c = make_conic(264, 264, (r / 3) * (r / 3), 0, (r / 3) * (r / 3));
    TileRange box = loose_aabb_tiles(c, grid);
    // Direct arithmetic oracle: pixels [204, 324] -> tiles [floor(204/16),
    // floor(324/16)] = [12, 20], a 9x9 block.
    CHECK(box.x0 == 204 / 16);
    CHECK(box.x1 == 324 / 16);
    CHECK(box.y0 == 204 / 16);
    CHECK(box.y1 == 324 / 16);
    CHECK(box.count() == 9 * 9);
}

TEST_CASE("ellipse fully inside one tile touches exactly one tile") {
    TileGrid grid = TileGrid::for_image(256, 256);
    Conic c = make_conic(40, 40, 1.0, 0, 1.0);  // radius 3 px around (40, 40)
    CHECK(loose_aabb_tiles(c, grid).count() == 1);
    CHECK(snugbox_bounds(c, grid).tiles.count() == 1);
    auto spans = accutile_row_spans(c, grid, snugbox_bounds(c, grid));
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].col0 == spans[0].col1);
}

TEST_CASE("clamping: off-screen center, box non-empty iff it reaches the image") {
    TileGrid grid = TileGrid::for_image(256, 256);
    Conic near = make_conic(-10, 128, 100, 0, 100);  // radius 30, overlaps edge
    CHECK(!loose_aabb_tiles(near, grid).empty());
    CHECK(loose_aabb_tiles(near, grid).x0 == 0);

    Conic far = make_conic(-500, 128, 100, 0, 100);
    CHECK(loose_aabb_tiles(far, grid).empty());
    CHECK(snugbox_bounds(far, grid).tiles.empty());
    CHECK(accutile_row_spans(far, grid, snugbox_bounds(far, grid)).empty());
}

TEST_CASE("snug equals loose for isotropic conics") {
    TileGrid grid = TileGrid::for_image(512, 512);
    TestRng rng(3);
    for (int i = 0; i < 20; ++i) {
        double r = rng.uniform(5, 120);
        Conic c = make_conic(rng.uniform(0, 512), rng.uniform(0, 512), (r / 3) * (r / 3), 0,
                             (r / 3) * (r / 3));
        TileRange loose = loose_aabb_tiles(c, grid);
        TileRange snug = snugbox_bounds(c, grid).tiles;
        CHECK(loose.x0 == snug.x0);
        CHECK(loose.x1 == snug.x1);
        CHECK(loose.y0 == snug.y0);
        CHECK(loose.y1 == snug.y1);
    }
}

TEST_CASE("snug extremes of a 45-degree elongated ellipse match sampling") {
    TileGrid grid = TileGrid::for_image(4096, 4096);
    Conic c = rotated_ellipse(2048, 2048, 100, 4, M_PI / 4);
    SnugBounds snug = snugbox_bounds(c, grid);

    // Analytic: extent = sqrt((a^2 + b^2) / 2).
    double expect = std::sqrt((100.0 * 100 + 4 * 4) / 2);
    CHECK(snug.px1 - c.center.x == doctest::Approx(expect).epsilon(1e-9));
    CHECK(snug.py1 - c.center.y == doctest::Approx(expect).epsilon(1e-9));

    // Dense boundary sampling oracle.
    double max_dx = 0, max_dy = 0;
    for (int i = 0; i < 20000; ++i) {
        double t = 2 * M_PI * i / 20000;
        double ex = 100 * std::cos(t), ey = 4 * std::sin(t);
        double x = (ex - ey) * std::sqrt(0.5);
        double y = (ex + ey) * std::sqrt(0.5);
        max_dx = std::max(max_dx, std::abs(x));
        max_dy = std::max(max_dy, std::abs(y));
    }
    CHECK(snug.px1 - c.center.x == doctest::Approx(max_dx).epsilon(1e-4));
    CHECK(snug.py1 - c.center.y == doctest::Approx(max_dy).epsilon(1e-4));

    // Far tighter than the loose square, which uses the 100 px semi-axis.
    TileRange loose = loose_aabb_tiles(c, grid);
    CHECK(snug.tiles.count() < loose.count());
}

TEST_CASE("near-circular conic yields a square snug box") {
    TileGrid grid = TileGrid::for_image(1024, 1024);
    Conic c = make_conic(500, 500, 225, 0, 225);
    SnugBounds snug = snugbox_bounds(c, grid);
    CHECK(snug.px1 - snug.px0 == doctest::Approx(2 * 3 * 15.0));
    CHECK(snug.py1 - snug.py0 == doctest::Approx(snug.px1 - snug.px0));
}

TEST_CASE("accutile row through the center spans the full snug width") {
    TileGrid grid = TileGrid::for_image(1024, 1024);
    Conic c = rotated_ellipse(512, 512, 90, 30, 0);  // axis-aligned
    SnugBounds snug = snugbox_bounds(c, grid);
    auto spans = accutile_row_spans(c, grid, snug);
    bool found = false;
    for (const auto& span : spans) {
        if (512 >= span.row * 16 && 512 < (span.row + 1) * 16) {
            CHECK(span.col0 == snug.tiles.x0);
            CHECK(span.col1 == snug.tiles.x1);
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("thin diagonal ellipse: accutile is far smaller than snug") {
    TileGrid grid = TileGrid::for_image(512, 512);
    Conic c = rotated_ellipse(256, 256, 80, 3, M_PI / 4);
    SnugBounds snug = snugbox_bounds(c, grid);
    auto spans = accutile_row_spans(c, grid, snug);
    long long accu = 0;
    for (const auto& span : spans)
        if (span.col1 >= span.col0) accu += span.col1 - span.col0 + 1;
    CHECK(accu > 0);
    CHECK(double(accu) < 0.45 * double(snug.tiles.count()));
}

TEST_CASE("accutile equals the closed-form overlap set on random conics") {
    TileGrid grid = TileGrid::for_image(256, 256);
    TestRng rng(17);
    for (int i = 0; i < 60; ++i) {
        Conic c = rotated_ellipse(rng.uniform(-30, 286), rng.uniform(-30, 286),
                                  rng.uniform(4, 90), rng.uniform(1.5, 40),
                                  rng.uniform(0, M_PI));
        SnugBounds snug = snugbox_bounds(c, grid);
        auto spans = accutile_row_spans(c, grid, snug);
        std::set<int> listed;
        for (const auto& span : spans)
            for (int tx = span.col0; tx <= span.col1; ++tx)
                listed.insert(grid.tile_index(tx, span.row));

        for (int ty = 0; ty < grid.tiles_y; ++ty) {
            for (int tx = 0; tx < grid.tiles_x; ++tx) {
                double x0 = tx * 16, y0 = ty * 16;
                auto overlap = oracle::conic_rect_overlap(c, x0, y0, x0 + 16, y0 + 16);
                bool in = listed.count(grid.tile_index(tx, ty)) > 0;
                if (overlap.min_q < -1e-9) CHECK(in);
                if (overlap.min_q > 1e-9) CHECK(!in);
            }
        }
    }
}

TEST_CASE("assign_tiles on an empty scene") {
    Scene scene;
    scene.sem_dim = 16;
    scene.ins_dim = 32;
    TileAssignment a = assign_tiles(scene, testutil::basic_camera(), CullMode::Accutile);
    CHECK(a.rn_total == 0);
    CHECK(a.rn_per_tile == 0);
    for (const auto& list : a.tiles) CHECK(list.empty());
}

TEST_CASE("assign_tiles: oracle confirms every listing and every omission") {
    testutil::RandomSceneOptions opt;
    opt.n_surfels = 500;
    opt.seed = 21;
    Scene scene = testutil::random_scene(opt);
    Camera cam = testutil::basic_camera();
    TileGrid grid = TileGrid::for_image(cam.width, cam.height);

    auto exact = oracle::bruteforce_tile_assign(scene, cam, grid);
    auto projected = project_scene(scene, cam, 1);

    for (CullMode mode : {CullMode::Loose, CullMode::Snug, CullMode::Accutile}) {
        TileAssignment assignment = assign_tiles(projected, grid, mode, 2);
        std::vector<std::set<int>> listed(projected.size());
        for (std::size_t t = 0; t < assignment.tiles.size(); ++t)
            for (const auto& e : assignment.tiles[t]) listed[e.surfel].insert(int(t));

        for (std::size_t i = 0; i < projected.size(); ++i) {
            if (!projected[i].accepted) {
                CHECK(listed[i].empty());
                continue;
            }
            for (int t = 0; t < grid.tile_count(); ++t) {
                bool in = listed[i].count(t) > 0;
                bool overlap = exact[i][static_cast<std::size_t>(t)] != 0;
                // No omission of an overlapping tile in any mode.
                if (overlap) CHECK(in);
                // Accutile lists only overlapping tiles (hairline tangency aside).
                if (mode == CullMode::Accutile && in && !overlap) {
                    double x0 = (t % grid.tiles_x) * 16.0, y0 = (t / grid.tiles_x) * 16.0;
                    CHECK(oracle::conic_rect_overlap(projected[i].conic, x0, y0, x0 + 16,
                                                     y0 + 16).min_q < 1e-6);
                }
            }
        }
    }
}

TEST_CASE("nesting and monotone RN across modes") {
    testutil::RandomSceneOptions opt;
    opt.n_surfels = 300;
    opt.seed = 33;
    opt.max_scale = 0.5;
    Scene scene = testutil::random_scene(opt);
    Camera cam = testutil::basic_camera();
    TileGrid grid = TileGrid::for_image(cam.width, cam.height);
    auto projected = project_scene(scene, cam, 1);

    TileAssignment loose = assign_tiles(projected, grid, CullMode::Loose);
    TileAssignment snug = assign_tiles(projected, grid, CullMode::Snug);
    TileAssignment accu = assign_tiles(projected, grid, CullMode::Accutile);
    CHECK(accu.rn_total <= snug.rn_total);
    CHECK(snug.rn_total <= loose.rn_total);

    for (uint32_t i = 0; i < projected.size(); ++i) {
        if (!projected[i].accepted) continue;
        auto a = tiles_of(accu, i);
        auto s = tiles_of(snug, i);
        auto l = tiles_of(loose, i);
        CHECK(std::includes(s.begin(), s.end(), a.begin(), a.end()));
        CHECK(std::includes(l.begin(), l.end(), s.begin(), s.end()));
    }
}

TEST_CASE("assignment lists are depth sorted and thread-count independent") {
    testutil::RandomSceneOptions opt;
    opt.n_surfels = 400;
    opt.seed = 44;
    Scene scene = testutil::random_scene(opt);
    Camera cam = testutil::basic_camera();
    TileGrid grid = TileGrid::for_image(cam.width, cam.height);
    auto projected = project_scene(scene, cam, 1);

    TileAssignment a1 = assign_tiles(projected, grid, CullMode::Accutile, 1);
    TileAssignment a4 = assign_tiles(projected, grid, CullMode::Accutile, 4);
    REQUIRE(a1.tiles.size() == a4.tiles.size());
    CHECK(a1.rn_total == a4.rn_total);
    for (std::size_t t = 0; t < a1.tiles.size(); ++t) {
        REQUIRE(a1.tiles[t].size() == a4.tiles[t].size());
        for (std::size_t i = 0; i < a1.tiles[t].size(); ++i) {
            CHECK(a1.tiles[t][i].surfel == a4.tiles[t][i].surfel);
            if (i > 0) {
                const auto& prev = a1.tiles[t][i - 1];
                const auto& cur = a1.tiles[t][i];
                CHECK((prev.depth < cur.depth ||
                       (prev.depth == cur.depth && prev.surfel < cur.surfel)));
            }
        }
    }
}

TEST_CASE("closed-form rect overlap agrees with dense sampling") {
    TestRng rng(71);
    int checked = 0;
    for (int i = 0; i < 400; ++i) {
        Conic c = rotated_ellipse(rng.uniform(-40, 296), rng.uniform(-40, 296),
                                  rng.uniform(2, 70), rng.uniform(1, 30), rng.uniform(0, M_PI));
        double x0 = rng.uniform(-20, 276);
        double y0 = rng.uniform(-20, 276);
        auto closed = oracle::conic_rect_overlap(c, x0, y0, x0 + 16, y0 + 16);
        auto dense = oracle::conic_rect_overlap_sampled(c, x0, y0, x0 + 16, y0 + 16);
        // Sampling can only see a subset, so dense overlap implies closed
        // overlap; decisively separated cases must agree exactly.
        if (dense.overlap) CHECK(closed.overlap);
        if (closed.min_q < -0.5) CHECK(dense.overlap);
        if (closed.min_q > 0.5) CHECK(!dense.overlap);
        ++checked;
    }
    CHECK(checked == 400);

    // Trivial cases.
    Conic centered = make_conic(8, 8, 4, 0, 4);
    CHECK(oracle::conic_rect_overlap(centered, 0, 0, 16, 16).overlap);
    Conic distant = make_conic(2000, 2000, 4, 0, 4);
    CHECK(!oracle::conic_rect_overlap(distant, 0, 0, 16, 16).overlap);
}
