// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

// fsgs: tile-based 2D Gaussian surfel renderer.
//   render  render frames for a camera trajectory
//   bench   four-mode culling/top-k ablation benchmark
//   eval    panoptic metric suite over label maps
//   gen     synthetic scene generation with ground truth
//   serve   pose-in/frames-out TCP render service

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fsgs/evaluation.hpp"
#include "fsgs/frame_output.hpp"
#include "fsgs/image_io.hpp"
#include "fsgs/oracle.hpp"
#include "fsgs/parallel.hpp"
#include "fsgs/rasterizer.hpp"
#include "fsgs/scene_io.hpp"
#include "fsgs/service.hpp"
#include "fsgs/synthgen.hpp"

namespace fs = std::filesystem;
using namespace fsgs;

namespace {

volatile std::sig_atomic_t g_stop_requested = 0;
void handle_signal(int) { g_stop_requested = 1; }

int env_default_threads() {
    if (const char* env = std::getenv("FSGS_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return default_thread_count();
}

uint32_t parse_channels(const std::vector<std::string>& names) {
    if (names.empty()) return kChannelsAll;
    uint32_t mask = 0;
    for (const std::string& name : names) {
        uint32_t bit = channel_from_string(name);
        if (bit == 0) throw CLI::ValidationError("--channels", "unknown channel: " + name);
        mask |= bit;
    }
    // instance id maps are a fused product; they need the panoptic pipeline
    if (mask & kChannelInstance) mask |= kChannelPanoptic;
    if (mask & kChannelPanoptic) mask |= kChannelAlpha;
    return mask;
}

int cmd_render(const std::string& scene_path, const std::string& camera_path,
               const std::string& out_dir, const std::string& mode_name, int topk,
               const std::vector<std::string>& channel_names, int tile, int threads) {
    Scene scene = load_scene(scene_path);
    std::vector<Camera> cameras = load_trajectory(camera_path);
    if (cameras.empty()) {
        std::cerr << "error: trajectory has no cameras\n";
        return 1;
    }

    RenderConfig config;
    if (!cull_mode_from_string(mode_name, config.mode)) {
        std::cerr << "error: unknown mode " << mode_name << "\n";
        return 1;
    }
    if (topk > 0) config.top_k = topk;
    config.channels = parse_channels(channel_names);
    config.tile_size = tile;
    config.threads = threads;

    SceneRenderData data = prepare_scene(scene, threads);
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        FrameBundle frame = render(data, cameras[i], config);
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03zu", i);
        write_frame_outputs(frame, config, fs::path(out_dir) / name);
    }
    std::cout << "rendered " << cameras.size() << " frame(s) to " << out_dir << "\n";
    return 0;
}

int cmd_bench(const std::string& scene_path, const std::string& camera_path,
              const std::string& gt_dir, const std::string& out_path, int topk, int tile,
              int threads, int timed_frames, int warmup) {
    Scene scene = load_scene(scene_path);
    std::vector<Camera> cameras = load_trajectory(camera_path);
    if (cameras.empty()) {
        std::cerr << "error: trajectory has no cameras\n";
        return 1;
    }
    const Camera& cam = cameras.front();

    std::vector<PanopticMap> gt;
    if (!gt_dir.empty()) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(gt_dir))
            if (entry.path().filename().string().find("panoptic") != std::string::npos &&
                entry.path().extension() == ".png")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) gt.push_back(panoptic_from_png(f));
    }

    SceneRenderData data = prepare_scene(scene, threads);
    struct ModeSpec {
        const char* label;
        CullMode mode;
        bool use_topk;
    };
    const ModeSpec specs[4] = {
        {"A", CullMode::Loose, false},
        {"B", CullMode::Accutile, false},
        {"C", CullMode::Loose, true},
        {"D", CullMode::Accutile, true},
    };

    nlohmann::json rows = nlohmann::json::array();
    for (const ModeSpec& spec : specs) {
        RenderConfig config;
        config.mode = spec.mode;
        if (spec.use_topk) config.top_k = topk;
        config.tile_size = tile;
        config.threads = threads;

        for (int i = 0; i < warmup; ++i) render(data, cam, config);
        std::vector<double> times;
        FrameBundle last;
        for (int i = 0; i < timed_frames; ++i) {
            last = render(data, cam, config);
            times.push_back(last.stats.wall_time_ms);
        }
        std::sort(times.begin(), times.end());
        double median = times[times.size() / 2];

        nlohmann::json row;
        row["mode"] = spec.label;
        row["culling"] = to_string(spec.mode);
        row["top_k"] = spec.use_topk ? nlohmann::json(topk) : nlohmann::json(nullptr);
        row["time_ms"] = median;
        row["fps"] = median > 0 ? 1000.0 / median : 0.0;
        row["rn_total"] = last.stats.rn_total;
        row["rn_per_tile"] = last.stats.rn_per_tile;
        row["feature_mads"] = last.stats.feature_mads;
        if (!gt.empty()) {
            std::vector<PanopticMap> pred;
            for (std::size_t i = 0; i < std::min(gt.size(), cameras.size()); ++i)
                pred.push_back(render(data, cameras[i], config).panoptic);
            std::vector<PanopticMap> gt_used(gt.begin(), gt.begin() + long(pred.size()));
            row["pq"] = evaluate_panoptic_maps(pred, gt_used).pq;
        } else {
            row["pq"] = nullptr;
        }
        rows.push_back(std::move(row));
        std::cout << "mode " << spec.label << ": " << median << " ms, rn_total "
                  << last.stats.rn_total << "\n";
    }

    std::ofstream out(out_path, std::ios::trunc);
    if (!out) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return 1;
    }
    out << rows.dump(2) << "\n";
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

std::vector<fs::path> find_panoptic_pngs(const std::string& dir) {
    std::vector<fs::path> files;
    if (!fs::exists(dir)) return files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.find("panoptic") != std::string::npos && entry.path().extension() == ".png")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& out_path) {
    auto pred_files = find_panoptic_pngs(pred_dir);
    auto gt_files = find_panoptic_pngs(gt_dir);
    if (pred_files.empty()) {
        std::cerr << "error: no panoptic label maps found in " << pred_dir << "\n";
        return 1;
    }
    if (pred_files.size() != gt_files.size()) {
        std::cerr << "error: prediction/GT frame count mismatch (" << pred_files.size() << " vs "
                  << gt_files.size() << ")\n";
        return 1;
    }
    std::vector<PanopticMap> pred, gt;
    for (std::size_t i = 0; i < pred_files.size(); ++i) {
        pred.push_back(panoptic_from_png(pred_files[i]));
        gt.push_back(panoptic_from_png(gt_files[i]));
    }
    MetricReport report = evaluate_panoptic_maps(pred, gt);
    std::string json = report.to_json();
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        out << json << "\n";
    }
    std::cout << json << "\n";
    return 0;
}

int cmd_gen(const std::string& preset_name, int surfels, int instances, uint64_t seed,
            const std::string& out_dir) {
    Preset preset;
    if (!preset_from_string(preset_name, preset)) {
        std::cerr << "error: unknown preset " << preset_name
                  << " (expected room|thin|stack)\n";
        return 1;
    }
    GeneratedScene gen = generate_scene(preset, surfels, instances, seed);
    fs::create_directories(out_dir);
    save_scene(gen.scene, fs::path(out_dir) / "scene.fsgs");
    save_trajectory(gen.cameras, fs::path(out_dir) / "trajectory.json");
    for (std::size_t i = 0; i < gen.gt_panoptic.size(); ++i) {
        char name[48];
        std::snprintf(name, sizeof(name), "gt_panoptic_%03zu.png", i);
        write_panoptic_png(gen.gt_panoptic[i], fs::path(out_dir) / name);

        std::snprintf(name, sizeof(name), "gt_semantic_%03zu.png", i);
        std::vector<uint8_t> sem(gen.gt_semantic[i].size());
        for (std::size_t k = 0; k < sem.size(); ++k)
            sem[k] = gen.gt_semantic[i][k] < 0 ? 0 : uint8_t(gen.gt_semantic[i][k] + 1);
        write_binary_file(fs::path(out_dir) / name,
                          encode_png_gray8(sem, gen.gt_panoptic[i].width,
                                           gen.gt_panoptic[i].height));
    }
    std::cout << "generated " << gen.scene.surfels.size() << " surfels, "
              << gen.scene.queries.size() << " queries, " << gen.cameras.size()
              << " camera(s) in " << out_dir << "\n";
    return 0;
}

int cmd_serve(const std::string& scene_path, int port, const std::string& mode_name, int topk,
              int threads) {
    Scene scene = load_scene(scene_path);
    ServiceConfig config;
    if (!cull_mode_from_string(mode_name, config.mode)) {
        std::cerr << "error: unknown mode " << mode_name << "\n";
        return 1;
    }
    if (topk > 0) config.top_k = topk;
    config.threads = threads;

    RenderService service(scene, config);
    service.start(port);
    std::cout << "serving " << scene.surfels.size() << " surfels on port " << service.port()
              << " (mode " << mode_name << (topk > 0 ? ", top_k " + std::to_string(topk) : "")
              << ")\n";

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop_requested) {
        struct timespec ts {0, 100 * 1000 * 1000};
        nanosleep(&ts, nullptr);
    }
    std::cout << "shutting down\n";
    service.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fsgs: tile-based 2D Gaussian surfel renderer"};
    app.require_subcommand(1);

    // render
    std::string scene_path, camera_path, out_dir, mode_name = "accutile";
    std::vector<std::string> channel_names;
    int topk = 0, tile = kDefaultTileSize, threads = env_default_threads();
    auto* render_cmd = app.add_subcommand(
        "render",
        "Render frames for a camera trajectory. Per frame: rgb.png (8-bit), depth.pfm "
        "(float32), semantic.png (class id + 1, 0 = void), instance.png (instance id), "
        "panoptic.png (packed id = (class + 1) * 1000 + instance, 0 = void), stats.json");
    render_cmd->add_option("--scene", scene_path, "FSGS scene file")->required();
    render_cmd->add_option("--camera", camera_path, "trajectory JSON")->required();
    render_cmd->add_option("--out", out_dir, "output directory")->required();
    render_cmd->add_option("--mode", mode_name, "culling mode: loose|snug|accutile");
    render_cmd->add_option("--topk", topk, "top-K feature selection (24 matches the benchmark default; 0 = full accumulation)");
    render_cmd->add_option("--channels", channel_names,
                           "subset of rgb,depth,alpha,semantic,instance,panoptic")
        ->delimiter(',');
    render_cmd->add_option("--tile", tile, "tile size in pixels");
    render_cmd->add_option("--threads", threads, "render worker count");

    // bench
    std::string bench_scene, bench_camera, bench_gt, bench_out = "stats.json";
    int bench_topk = 24, bench_tile = kDefaultTileSize, bench_threads = env_default_threads();
    int bench_frames = 20, bench_warmup = 3;
    auto* bench_cmd =
        app.add_subcommand("bench", "Four-mode ablation benchmark (A loose, B accutile, "
                                    "C loose+topk, D accutile+topk)");
    bench_cmd->add_option("--scene", bench_scene, "FSGS scene file")->required();
    bench_cmd->add_option("--camera", bench_camera, "trajectory JSON")->required();
    bench_cmd->add_option("--gt", bench_gt, "directory with GT panoptic maps (enables PQ)");
    bench_cmd->add_option("--out", bench_out, "output stats JSON");
    bench_cmd->add_option("--topk", bench_topk, "K for the top-k rows");
    bench_cmd->add_option("--tile", bench_tile, "tile size in pixels");
    bench_cmd->add_option("--threads", bench_threads, "render worker count");
    bench_cmd->add_option("--frames", bench_frames, "timed frames per mode");
    bench_cmd->add_option("--warmup", bench_warmup, "warmup frames per mode");

    // eval
    std::string pred_dir, gt_dir, eval_out;
    auto* eval_cmd = app.add_subcommand("eval", "Metric suite over panoptic label maps");
    eval_cmd->add_option("--pred", pred_dir, "prediction directory")->required();
    eval_cmd->add_option("--gt", gt_dir, "ground-truth directory")->required();
    eval_cmd->add_option("--out", eval_out, "also write metrics JSON here");

    // gen
    std::string gen_preset, gen_out;
    int gen_surfels = 2000, gen_instances = 5;
    uint64_t gen_seed = 1;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic scene with ground truth");
    gen_cmd->add_option("--preset", gen_preset, "room|thin|stack")->required();
    gen_cmd->add_option("--surfels", gen_surfels, "target surfel count");
    gen_cmd->add_option("--instances", gen_instances, "object/instance count");
    gen_cmd->add_option("--seed", gen_seed, "RNG seed");
    gen_cmd->add_option("--out", gen_out, "output directory")->required();

    // serve
    std::string serve_scene, serve_mode = "accutile";
    int serve_port = 9576, serve_topk = 0, serve_threads = 0;
    auto* serve_cmd = app.add_subcommand("serve", "Pose-in/frames-out TCP render service "
                                                  "(newline-delimited JSON)");
    serve_cmd->add_option("--scene", serve_scene, "FSGS scene file")->required();
    serve_cmd->add_option("--port", serve_port, "TCP port (0 = ephemeral)");
    serve_cmd->add_option("--mode", serve_mode, "culling mode");
    serve_cmd->add_option("--topk", serve_topk, "top-K feature selection (0 = full)");
    serve_cmd->add_option("--threads", serve_threads, "render worker count (default FSGS_THREADS)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (render_cmd->parsed())
            return cmd_render(scene_path, camera_path, out_dir, mode_name, topk, channel_names,
                              tile, threads);
        if (bench_cmd->parsed())
            return cmd_bench(bench_scene, bench_camera, bench_gt, bench_out, bench_topk,
                             bench_tile, bench_threads, bench_frames, bench_warmup);
        if (eval_cmd->parsed()) return cmd_eval(pred_dir, gt_dir, eval_out);
        if (gen_cmd->parsed())
            return cmd_gen(gen_preset, gen_surfels, gen_instances, gen_seed, gen_out);
        if (serve_cmd->parsed())
            return cmd_serve(serve_scene, serve_port, serve_mode, serve_topk, serve_threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
