// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fsgs/rasterizer.hpp"

namespace fsgs {

// Channel encodings shared by the CLI and the render service, so offline and
// served frames are byte-identical.
//
//   rgb.png       8-bit RGB, round(v * 255)
//   depth.pfm     float32 grayscale PFM
//   semantic.png  8-bit gray, class id + 1, 0 = void
//   instance.png  16-bit gray, instance id (1-based, 0 = none)
//   panoptic.png  16-bit gray, packed id = (class + 1) * 1000 + instance, 0 = void

std::vector<uint8_t> encode_rgb_png(const FrameBundle& frame);
std::vector<uint8_t> encode_depth_pfm(const FrameBundle& frame);
std::vector<uint8_t> encode_semantic_png(const FrameBundle& frame);
std::vector<uint8_t> encode_instance_png(const FrameBundle& frame);
std::vector<uint8_t> encode_panoptic_png(const FrameBundle& frame);

// Raw little-endian rasters for the streaming service.
std::vector<uint8_t> encode_depth_raw(const FrameBundle& frame);
std::vector<uint8_t> encode_panoptic_raw(const FrameBundle& frame);

std::string stats_json(const FrameBundle& frame, const RenderConfig& config);

// Writes the requested channels plus stats.json into `dir`; returns the file
// names written.
std::vector<std::string> write_frame_outputs(const FrameBundle& frame, const RenderConfig& config,
                                             const std::filesystem::path& dir);

PanopticMap panoptic_from_png(const std::filesystem::path& path);
void write_panoptic_png(const PanopticMap& map, const std::filesystem::path& path);

}  // namespace fsgs
