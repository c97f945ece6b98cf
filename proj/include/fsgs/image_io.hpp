// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fsgs {

// Minimal PNG writer/reader backed by zlib. Encodes unfiltered scanlines at a
// fixed compression level so identical images produce identical bytes.
// Supports 8-bit gray/RGB and 16-bit gray, which is everything this project
// emits; the reader additionally handles filtered rows.

std::vector<uint8_t> encode_png_gray8(std::span<const uint8_t> data, int width, int height);
std::vector<uint8_t> encode_png_gray16(std::span<const uint16_t> data, int width, int height);
std::vector<uint8_t> encode_png_rgb8(std::span<const uint8_t> data, int width, int height);

struct DecodedPng {
    int width = 0;
    int height = 0;
    int channels = 0;   // 1 or 3
    int bit_depth = 0;  // 8 or 16
    std::vector<uint8_t> data8;     // filled when bit_depth == 8
    std::vector<uint16_t> data16;   // filled when bit_depth == 16
};
DecodedPng decode_png(std::span<const uint8_t> bytes);

// Grayscale float32 PFM ("Pf"), little-endian (scale -1), rows bottom-up.
std::vector<uint8_t> encode_pfm(std::span<const float> data, int width, int height);
std::vector<float> decode_pfm(std::span<const uint8_t> bytes, int& width, int& height);

void write_binary_file(const std::filesystem::path& path, std::span<const uint8_t> bytes);
std::vector<uint8_t> read_binary_file(const std::filesystem::path& path);

std::string base64_encode(std::span<const uint8_t> data);
std::vector<uint8_t> base64_decode(const std::string& text);

}  // namespace fsgs
