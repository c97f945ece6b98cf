// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/frame_output.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fsgs/image_io.hpp"

namespace fsgs {

std::vector<uint8_t> encode_rgb_png(const FrameBundle& frame) {
    std::vector<uint8_t> rgb(frame.pixel_count() * 3);
    for (std::size_t i = 0; i < rgb.size(); ++i) {
        float v = std::clamp(frame.rgb[i], 0.0f, 1.0f);
        rgb[i] = uint8_t(std::lround(v * 255.0f));
    }
    return encode_png_rgb8(rgb, frame.width, frame.height);
}

std::vector<uint8_t> encode_depth_pfm(const FrameBundle& frame) {
    return encode_pfm(frame.depth, frame.width, frame.height);
}

std::vector<uint8_t> encode_semantic_png(const FrameBundle& frame) {
    const std::size_t n = frame.pixel_count();
    const std::size_t c = frame.num_classes;
    if (c > 254) throw std::runtime_error("semantic.png supports at most 254 classes");
    std::vector<uint8_t> ids(n, 0);
    for (std::size_t i = 0; i < n && c > 0; ++i) {
        if (!(frame.alpha[i] > kVoidAlphaThreshold)) continue;
        const float* logits = frame.semantic_logits.data() + i * c;
        std::size_t best = 0;
        for (std::size_t k = 1; k < c; ++k)
            if (logits[k] > logits[best]) best = k;
        ids[i] = uint8_t(best + 1);
    }
    return encode_png_gray8(ids, frame.width, frame.height);
}

std::vector<uint8_t> encode_instance_png(const FrameBundle& frame) {
    std::vector<uint16_t> ids(frame.pixel_count(), 0);
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (frame.panoptic.packed.size() == ids.size() && frame.panoptic.packed[i] != 0)
            ids[i] = uint16_t(panoptic_instance(frame.panoptic.packed[i]));
    return encode_png_gray16(ids, frame.width, frame.height);
}

std::vector<uint8_t> encode_panoptic_png(const FrameBundle& frame) {
    std::vector<uint16_t> ids(frame.pixel_count(), 0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        uint32_t packed = frame.panoptic.packed[i];
        if (packed > 0xffff) throw std::runtime_error("panoptic id exceeds 16-bit PNG range");
        ids[i] = uint16_t(packed);
    }
    return encode_png_gray16(ids, frame.width, frame.height);
}

std::vector<uint8_t> encode_depth_raw(const FrameBundle& frame) {
    std::vector<uint8_t> out(frame.depth.size() * 4);
    std::memcpy(out.data(), frame.depth.data(), out.size());
    return out;
}

std::vector<uint8_t> encode_panoptic_raw(const FrameBundle& frame) {
    std::vector<uint8_t> out(frame.panoptic.packed.size() * 4);
    std::memcpy(out.data(), frame.panoptic.packed.data(), out.size());
    return out;
}

std::string stats_json(const FrameBundle& frame, const RenderConfig& config) {
    nlohmann::json j;
    j["mode"] = to_string(config.mode);
    if (config.top_k) j["top_k"] = *config.top_k;
    else j["top_k"] = nullptr;
    j["time_ms"] = frame.stats.wall_time_ms;
    j["fps"] = frame.stats.fps;
    j["rn_total"] = frame.stats.rn_total;
    j["rn_per_tile"] = frame.stats.rn_per_tile;
    j["pixels_blended"] = frame.stats.pixels_blended;
    j["feature_mads"] = frame.stats.feature_mads;
    return j.dump(2);
}

std::vector<std::string> write_frame_outputs(const FrameBundle& frame, const RenderConfig& config,
                                             const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    auto emit = [&](const char* name, const std::vector<uint8_t>& bytes) {
        write_binary_file(dir / name, bytes);
        written.push_back(name);
    };
    if (frame.channels & kChannelRgb) emit("rgb.png", encode_rgb_png(frame));
    if (frame.channels & kChannelDepth) emit("depth.pfm", encode_depth_pfm(frame));
    if ((frame.channels & kChannelSemantic) && frame.num_classes > 0)
        emit("semantic.png", encode_semantic_png(frame));
    if ((frame.channels & kChannelInstance) && frame.panoptic.packed.size() == frame.pixel_count())
        emit("instance.png", encode_instance_png(frame));
    if ((frame.channels & kChannelPanoptic) && frame.panoptic.packed.size() == frame.pixel_count())
        emit("panoptic.png", encode_panoptic_png(frame));

    std::string stats = stats_json(frame, config);
    write_binary_file(dir / "stats.json",
                      {reinterpret_cast<const uint8_t*>(stats.data()), stats.size()});
    written.push_back("stats.json");
    return written;
}

PanopticMap panoptic_from_png(const std::filesystem::path& path) {
    DecodedPng png = decode_png(read_binary_file(path));
    if (png.bit_depth != 16 || png.channels != 1)
        throw std::runtime_error("panoptic png must be 16-bit grayscale: " + path.string());
    PanopticMap map;
    map.width = png.width;
    map.height = png.height;
    map.packed.assign(png.data16.begin(), png.data16.end());
    return map;
}

void write_panoptic_png(const PanopticMap& map, const std::filesystem::path& path) {
    std::vector<uint16_t> ids(map.packed.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (map.packed[i] > 0xffff) throw std::runtime_error("panoptic id exceeds 16-bit range");
        ids[i] = uint16_t(map.packed[i]);
    }
    write_binary_file(path, encode_png_gray16(ids, map.width, map.height));
}

}  // namespace fsgs
