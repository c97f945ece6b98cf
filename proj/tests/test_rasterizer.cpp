// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "fsgs/oracle.hpp"
#include "fsgs/rasterizer.hpp"
#include "test_support.hpp"

using namespace fsgs;

namespace {

// Facing camera whose principal point sits on a pixel center, so the surfel
// center lands exactly on pixel (127, 127).
Camera centered_camera(double dist = 5.0) {
    Camera cam = testutil::facing_camera(dist);
    cam.cx = cam.cy = 127.5;
    return cam;
}

Scene blend_scene(std::vector<Surfel> surfels) {
    Scene scene;
    scene.sem_dim = 16;
    scene.ins_dim = 32;
    scene.surfels = std::move(surfels);
    scene.sem_features.assign(scene.surfels.size() * 16, 0.0f);
    scene.ins_features.assign(scene.surfels.size() * 32, 0.0f);
    for (std::size_t i = 0; i < scene.surfels.size(); ++i)
        scene.ins_features[i * 32 + i % 32] = 1.0f;
    return scene;
}

std::size_t center_pixel_index(const Camera& cam) {
    return static_cast<std::size_t>(127) * static_cast<std::size_t>(cam.width) + 127;
}

}  // namespace

TEST_CASE("single camera-facing surfel blends one term") {
    Camera cam = centered_camera();
    Surfel s = testutil::basic_surfel();
    s.opacity = 0.5f;
    s.rgb = {1, 0, 0};
    Scene scene = blend_scene({s});

    RenderConfig config;
    config.channels = kChannelRgb | kChannelDepth | kChannelAlpha;
    FrameBundle frame = render(scene, cam, config);
    std::size_t pix = center_pixel_index(cam);
    CHECK(frame.rgb[pix * 3 + 0] == doctest::Approx(0.5));
    CHECK(frame.rgb[pix * 3 + 1] == doctest::Approx(0.0));
    CHECK(frame.alpha[pix] == doctest::Approx(0.5));
    CHECK(frame.depth[pix] == doctest::Approx(5.0));
}

TEST_CASE("two stacked surfels: front red over back blue") {
    Camera cam = centered_camera();
    Surfel front = testutil::basic_surfel();
    front.opacity = 0.5f;
    front.rgb = {1, 0, 0};
    Surfel back = testutil::basic_surfel();
    back.center = {0, 0, -1};  // camera looks down -z, so this is deeper
    back.opacity = 0.5f;
    back.rgb = {0, 0, 1};
    Scene scene = blend_scene({front, back});

    RenderConfig config;
    config.channels = kChannelRgb | kChannelAlpha;
    FrameBundle frame = render(scene, cam, config);
    std::size_t pix = center_pixel_index(cam);
    CHECK(frame.rgb[pix * 3 + 0] == doctest::Approx(0.5));
    CHECK(frame.rgb[pix * 3 + 2] == doctest::Approx(0.25));
    CHECK(frame.alpha[pix] == doctest::Approx(0.75));
}

TEST_CASE("empty scene renders zero images with zero stats") {
    Scene scene;
    scene.sem_dim = 16;
    scene.ins_dim = 32;
    FrameBundle frame = render(scene, testutil::basic_camera(), RenderConfig{});
    CHECK(frame.stats.rn_total == 0);
    CHECK(frame.stats.pixels_blended == 0);
    CHECK(frame.stats.feature_mads == 0);
    for (float a : frame.alpha) CHECK(a == 0.0f);
    for (uint32_t p : frame.panoptic.packed) CHECK(p == 0u);
}

TEST_CASE("tiled render equals the brute-force oracle") {
    for (uint64_t seed : {101, 102, 103}) {
        testutil::RandomSceneOptions opt;
        opt.n_surfels = 400;
        opt.seed = seed;
        Scene scene = testutil::random_scene(opt);
        Camera cam = testutil::basic_camera();

        RenderConfig config;
        config.threads = 2;
        FrameBundle tiled = render(scene, cam, config);
        FrameBundle reference = oracle::bruteforce_render(scene, cam, config);
        CHECK(testutil::frame_max_diff(tiled, reference) <= 1e-5);
    }
}

TEST_CASE("culling mode changes work, never output") {
    testutil::RandomSceneOptions opt;
    opt.n_surfels = 350;
    opt.seed = 202;
    Scene scene = testutil::random_scene(opt);
    Camera cam = testutil::basic_camera();

    RenderConfig config;
    config.threads = 2;
    config.mode = CullMode::Loose;
    FrameBundle loose = render(scene, cam, config);
    config.mode = CullMode::Snug;
    FrameBundle snug = render(scene, cam, config);
    config.mode = CullMode::Accutile;
    FrameBundle accu = render(scene, cam, config);

    CHECK(loose.rgb == snug.rgb);
    CHECK(snug.rgb == accu.rgb);
    CHECK(loose.depth == accu.depth);
    CHECK(loose.alpha == accu.alpha);
    CHECK(loose.semantic_logits == accu.semantic_logits);
    CHECK(loose.instance_dist == accu.instance_dist);
    CHECK(loose.panoptic.packed == accu.panoptic.packed);
    CHECK(accu.stats.rn_total <= snug.stats.rn_total);
    CHECK(snug.stats.rn_total <= loose.stats.rn_total);
}

TEST_CASE("topk_select basics") {
    std::vector<double> w{0.1, 0.5, 0.3, 0.5, 0.05};
    // K >= N returns every index.
    CHECK(topk_select(w, 10).size() == 5);
    // K = 1 picks the largest weight, ties to the earlier entry.
    auto one = topk_select(w, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == 1);
    auto three = topk_select(w, 3);
    REQUIRE(three.size() == 3);
    CHECK(three == std::vector<uint32_t>{1, 2, 3});
}

TEST_CASE("top-k with K >= N is bitwise identical to full accumulation") {
    testutil::RandomSceneOptions opt;
    opt.n_surfels = 250;
    opt.seed = 303;
    Scene scene = testutil::random_scene(opt);
    Camera cam = testutil::basic_camera();

    RenderConfig full;
    full.threads = 2;
    FrameBundle a = render(scene, cam, full);

    RenderConfig topk = full;
    topk.top_k = 100000;
    FrameBundle b = render(scene, cam, topk);
    CHECK(testutil::frames_identical(a, b));
}

TEST_CASE("top-k = 1 with renormalization reproduces the winner's labels") {
    Camera cam = centered_camera();
    Surfel front = testutil::basic_surfel();
    front.opacity = 0.7f;
    Surfel back = testutil::basic_surfel();
    back.center = {0, 0, -1};
    back.opacity = 0.9f;
    Scene scene = blend_scene({front, back});
    // Two distinguishable queries.
    for (int q = 0; q < 2; ++q) {
        InstanceQuery query;
        query.center = {0, 0, float(-q)};
        query.covariance = Mat3f::identity();
        query.feature.assign(32, 0.0f);
        query.feature[static_cast<std::size_t>(q)] = 4.0f;
        query.refresh_inverse();
        scene.queries.push_back(std::move(query));
    }

    SceneRenderData data = prepare_scene(scene, 1);
    RenderConfig config;
    config.channels = kChannelInstance | kChannelAlpha;
    config.top_k = 1;
    config.renormalize_topk = true;
    FrameBundle frame = render(data, cam, config);

    // Front surfel has the largest weight (0.7 vs 0.9 * 0.3).
    std::size_t pix = center_pixel_index(cam);
    auto labels = data.labels(0);
    CHECK(frame.instance_dist[pix * 2 + 0] == doctest::Approx(labels[0]).epsilon(1e-6));
    CHECK(frame.instance_dist[pix * 2 + 1] == doctest::Approx(labels[1]).epsilon(1e-6));
}

TEST_CASE("renormalization never changes argmax labels") {
    const auto& gen = testutil::preset_stack();
    RenderConfig config;
    config.threads = 2;
    config.top_k = 24;
    FrameBundle plain = render(gen.scene, gen.cameras[0], config);
    config.renormalize_topk = true;
    FrameBundle renorm = render(gen.scene, gen.cameras[0], config);
    CHECK(plain.panoptic.packed == renorm.panoptic.packed);
}

TEST_CASE("instance distribution rows sum to alpha under full accumulation") {
    testutil::RandomSceneOptions opt;
    opt.n_surfels = 200;
    opt.seed = 404;
    Scene scene = testutil::random_scene(opt);
    Camera cam = testutil::basic_camera();
    RenderConfig config;
    config.threads = 2;
    FrameBundle frame = render(scene, cam, config);
    const std::size_t m = frame.num_queries;
    REQUIRE(m > 0);
    for (std::size_t pix = 0; pix < frame.pixel_count(); pix += 97) {
        double sum = 0;
        for (std::size_t q = 0; q < m; ++q) sum += frame.instance_dist[pix * m + q];
        CHECK(std::abs(sum - double(frame.alpha[pix])) <= 1e-4);
    }
}

TEST_CASE("identical output across worker counts") {
    testutil::RandomSceneOptions opt;
    opt.n_surfels = 300;
    opt.seed = 505;
    Scene scene = testutil::random_scene(opt);
    Camera cam = testutil::basic_camera();
    SceneRenderData data = prepare_scene(scene, 2);

    RenderConfig config;
    config.threads = 1;
    FrameBundle one = render(data, cam, config);
    config.threads = 4;
    FrameBundle four = render(data, cam, config);
    config.threads = 8;
    FrameBundle eight = render(data, cam, config);
    CHECK(testutil::frames_identical(one, four));
    CHECK(testutil::frames_identical(one, eight));
}

TEST_CASE("early termination truncates with bounded error") {
    testutil::RandomSceneOptions opt;
    opt.n_surfels = 600;
    opt.seed = 606;
    opt.max_scale = 0.4;
    Scene scene = testutil::random_scene(opt);
    Camera cam = testutil::basic_camera();

    RenderConfig config;
    config.threads = 2;
    FrameBundle with_eps = render(scene, cam, config);
    config.transmittance_epsilon = 0.0;
    FrameBundle exact = render(scene, cam, config);
    CHECK(testutil::frame_max_diff(with_eps, exact) <= 1e-3);
}

TEST_CASE("stats: fps identity and top-k work reduction") {
    const auto& gen = testutil::preset_stack();
    RenderConfig config;
    config.threads = 2;
    FrameBundle full = render(gen.scene, gen.cameras[0], config);
    CHECK(full.stats.fps * full.stats.wall_time_ms == doctest::Approx(1000.0).epsilon(1e-6));

    config.top_k = 24;
    FrameBundle topk = render(gen.scene, gen.cameras[0], config);
    CHECK(topk.stats.feature_mads < full.stats.feature_mads);

    // feature_mads(topk) <= feature_mads(full) * (K / avg_N) * 1.1, with avg_N
    // from the oracle overlap histogram.
    auto hist = oracle::contributor_histogram(gen.scene, gen.cameras[0]);
    double total = 0;
    std::size_t covered = 0;
    for (uint32_t c : hist) {
        if (c == 0) continue;
        total += c;
        ++covered;
    }
    double avg_n = total / double(covered);
    CHECK(double(topk.stats.feature_mads) <=
          double(full.stats.feature_mads) * (24.0 / avg_n) * 1.1);
}
