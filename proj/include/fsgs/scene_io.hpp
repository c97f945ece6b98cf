// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "fsgs/scene.hpp"

namespace fsgs {

// Structural problems with the byte stream (magic, version, truncation).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A well-formed file whose contents violate a scene invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// FSGS binary scene format, version 1. Little-endian throughout.
//
//   "FSGS"  u32 version  u32 n_surfels  u32 n_queries  u32 sem_dim
//   u32 ins_dim  u32 num_classes
//   f32 centers[N*3], tangent_u[N*3], tangent_v[N*3], scales[N*2],
//   opacity[N], rgb[N*3], sem_features[N*sem_dim], ins_features[N*ins_dim]
//   f32 query_centers[M*3], query_cov[M*9] (row-major), query_feat[M*ins_dim]
//   f32 decoder_weights[C*sem_dim], decoder_bias[C]
//   C x { u32 byte_len, utf8 bytes }   class names
//   u8 thing_flags[C]

std::vector<uint8_t> encode_scene(const Scene& scene);
Scene decode_scene(const std::vector<uint8_t>& bytes);

Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

// Camera trajectory: JSON array of
//   {fx, fy, cx, cy, width, height, rotation:[9 row-major], translation:[3]}
std::vector<Camera> load_trajectory(const std::filesystem::path& path);
void save_trajectory(const std::vector<Camera>& cameras, const std::filesystem::path& path);

std::size_t scene_file_size(std::size_t n_surfels, std::size_t n_queries, std::size_t sem_dim,
                            std::size_t ins_dim, std::size_t num_classes,
                            std::size_t class_name_bytes);

}  // namespace fsgs
