// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsgs/rasterizer.hpp"
#include "fsgs/scene.hpp"

namespace fsgs {

enum class Preset { Room, Thin, Stack };

bool preset_from_string(const std::string& name, Preset& out);
const char* to_string(Preset preset);

struct GeneratedScene {
    Scene scene;
    std::vector<Camera> cameras;
    // Ground truth per camera from a full-accumulation reference render.
    std::vector<PanopticMap> gt_panoptic;
    std::vector<std::vector<int>> gt_semantic;  // class id, -1 = void
};

// Deterministic in seed.
//   room  - walls/floor (stuff) plus boxes (things) with matched queries
//   thin  - elongated rotated ribbons (aspect >= 20) over a backdrop
//   stack - deep stacks of semi-transparent layers (>= 64 per pixel)
GeneratedScene generate_scene(Preset preset, int n_surfels, int n_instances, uint64_t seed);

}  // namespace fsgs
