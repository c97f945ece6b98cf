// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/image_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fsgs {

namespace {

void push_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

uint32_t read_be32(const uint8_t* p) {
    return uint32_t(p[0]) << 24 | uint32_t(p[1]) << 16 | uint32_t(p[2]) << 8 | uint32_t(p[3]);
}

void push_chunk(std::vector<uint8_t>& out, const char type[4],
                std::span<const uint8_t> payload) {
    push_be32(out, uint32_t(payload.size()));
    std::size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    uint32_t crc = uint32_t(
        ::crc32(0, out.data() + type_at, uInt(4 + payload.size())));
    push_be32(out, crc);
}

std::vector<uint8_t> zlib_compress(std::span<const uint8_t> raw) {
    uLongf bound = ::compressBound(uLong(raw.size()));
    std::vector<uint8_t> out(bound);
    if (::compress2(out.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    out.resize(bound);
    return out;
}

std::vector<uint8_t> zlib_decompress(std::span<const uint8_t> comp, std::size_t expected) {
    std::vector<uint8_t> out(expected);
    uLongf size = uLongf(expected);
    int rc = ::uncompress(out.data(), &size, comp.data(), uLong(comp.size()));
    if (rc != Z_OK || size != expected) throw std::runtime_error("png: inflate failed");
    return out;
}

constexpr uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

std::vector<uint8_t> encode_png(std::span<const uint8_t> samples, int width, int height,
                                int bit_depth, int color_type, int channels) {
    const std::size_t bpp = std::size_t(channels) * std::size_t(bit_depth / 8);
    const std::size_t stride = std::size_t(width) * bpp;
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * std::size_t(height));
    for (int r = 0; r < height; ++r) {
        raw.push_back(0);  // filter: none
        raw.insert(raw.end(), samples.begin() + long(std::size_t(r) * stride),
                   samples.begin() + long(std::size_t(r + 1) * stride));
    }

    std::vector<uint8_t> out(kPngSignature, kPngSignature + 8);
    std::vector<uint8_t> ihdr;
    push_be32(ihdr, uint32_t(width));
    push_be32(ihdr, uint32_t(height));
    ihdr.push_back(uint8_t(bit_depth));
    ihdr.push_back(uint8_t(color_type));
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    push_chunk(out, "IHDR", ihdr);
    push_chunk(out, "IDAT", zlib_compress(raw));
    push_chunk(out, "IEND", {});
    return out;
}

uint8_t paeth(uint8_t a, uint8_t b, uint8_t c) {
    int p = int(a) + int(b) - int(c);
    int pa = std::abs(p - int(a));
    int pb = std::abs(p - int(b));
    int pc = std::abs(p - int(c));
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

std::vector<uint8_t> encode_png_gray8(std::span<const uint8_t> data, int width, int height) {
    return encode_png(data, width, height, 8, 0, 1);
}

std::vector<uint8_t> encode_png_rgb8(std::span<const uint8_t> data, int width, int height) {
    return encode_png(data, width, height, 8, 2, 3);
}

std::vector<uint8_t> encode_png_gray16(std::span<const uint16_t> data, int width, int height) {
    std::vector<uint8_t> bytes(data.size() * 2);
    for (std::size_t i = 0; i < data.size(); ++i) {
        bytes[i * 2] = uint8_t(data[i] >> 8);  // network byte order per spec
        bytes[i * 2 + 1] = uint8_t(data[i]);
    }
    return encode_png(bytes, width, height, 16, 0, 1);
}

DecodedPng decode_png(std::span<const uint8_t> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
        throw std::runtime_error("png: bad signature");

    DecodedPng img;
    int color_type = -1;
    std::vector<uint8_t> idat;
    std::size_t pos = 8;
    while (pos + 8 <= bytes.size()) {
        uint32_t len = read_be32(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw std::runtime_error("png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const uint8_t* payload = bytes.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            img.width = int(read_be32(payload));
            img.height = int(read_be32(payload + 4));
            img.bit_depth = payload[8];
            color_type = payload[9];
            if (payload[12] != 0) throw std::runtime_error("png: interlace unsupported");
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (color_type == 0) img.channels = 1;
    else if (color_type == 2) img.channels = 3;
    else throw std::runtime_error("png: unsupported color type");
    if (img.bit_depth != 8 && img.bit_depth != 16)
        throw std::runtime_error("png: unsupported bit depth");
    if (img.bit_depth == 16 && img.channels != 1)
        throw std::runtime_error("png: 16-bit only supported for grayscale");

    const std::size_t bpp = std::size_t(img.channels) * std::size_t(img.bit_depth / 8);
    const std::size_t stride = std::size_t(img.width) * bpp;
    std::vector<uint8_t> raw =
        zlib_decompress(idat, (stride + 1) * std::size_t(img.height));

    std::vector<uint8_t> pixels(stride * std::size_t(img.height));
    const uint8_t* prev = nullptr;
    for (int r = 0; r < img.height; ++r) {
        const uint8_t* src = raw.data() + std::size_t(r) * (stride + 1);
        uint8_t* dst = pixels.data() + std::size_t(r) * stride;
        uint8_t filter = src[0];
        ++src;
        for (std::size_t i = 0; i < stride; ++i) {
            uint8_t a = i >= bpp ? dst[i - bpp] : 0;
            uint8_t b = prev ? prev[i] : 0;
            uint8_t c = (prev && i >= bpp) ? prev[i - bpp] : 0;
            switch (filter) {
                case 0: dst[i] = src[i]; break;
                case 1: dst[i] = uint8_t(src[i] + a); break;
                case 2: dst[i] = uint8_t(src[i] + b); break;
                case 3: dst[i] = uint8_t(src[i] + (int(a) + int(b)) / 2); break;
                case 4: dst[i] = uint8_t(src[i] + paeth(a, b, c)); break;
                default: throw std::runtime_error("png: unknown filter");
            }
        }
        prev = dst;
    }

    if (img.bit_depth == 8) {
        img.data8 = std::move(pixels);
    } else {
        img.data16.resize(std::size_t(img.width) * std::size_t(img.height));
        for (std::size_t i = 0; i < img.data16.size(); ++i)
            img.data16[i] = uint16_t(uint16_t(pixels[i * 2]) << 8 | pixels[i * 2 + 1]);
    }
    return img;
}

std::vector<uint8_t> encode_pfm(std::span<const float> data, int width, int height) {
    std::string header = "Pf\n" + std::to_string(width) + " " + std::to_string(height) + "\n-1.0\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    // PFM stores rows bottom-up.
    for (int r = height - 1; r >= 0; --r) {
        const float* row = data.data() + std::size_t(r) * std::size_t(width);
        const uint8_t* p = reinterpret_cast<const uint8_t*>(row);
        out.insert(out.end(), p, p + std::size_t(width) * 4);
    }
    return out;
}

std::vector<float> decode_pfm(std::span<const uint8_t> bytes, int& width, int& height) {
    auto next_token = [&](std::size_t& p) {
        while (p < bytes.size() && std::isspace(bytes[p])) ++p;
        std::size_t start = p;
        while (p < bytes.size() && !std::isspace(bytes[p])) ++p;
        return std::string(bytes.begin() + long(start), bytes.begin() + long(p));
    };
    std::size_t pos = 0;
    if (next_token(pos) != "Pf") throw std::runtime_error("pfm: bad magic");
    width = std::stoi(next_token(pos));
    height = std::stoi(next_token(pos));
    double scale = std::stod(next_token(pos));
    if (scale >= 0) throw std::runtime_error("pfm: big-endian files unsupported");
    ++pos;  // single whitespace after the scale line
    std::size_t need = std::size_t(width) * std::size_t(height) * 4;
    if (bytes.size() - pos < need) throw std::runtime_error("pfm: truncated");

    std::vector<float> out(std::size_t(width) * std::size_t(height));
    for (int r = 0; r < height; ++r) {
        const uint8_t* src = bytes.data() + pos + std::size_t(height - 1 - r) * std::size_t(width) * 4;
        std::memcpy(out.data() + std::size_t(r) * std::size_t(width), src,
                    std::size_t(width) * 4);
    }
    return out;
}

void write_binary_file(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const uint8_t> data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        uint32_t v = uint32_t(data[i]) << 16 | uint32_t(data[i + 1]) << 8 | data[i + 2];
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back(kB64[(v >> 6) & 63]);
        out.push_back(kB64[v & 63]);
    }
    if (i + 1 == data.size()) {
        uint32_t v = uint32_t(data[i]) << 16;
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (i + 2 == data.size()) {
        uint32_t v = uint32_t(data[i]) << 16 | uint32_t(data[i + 1]) << 8;
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back(kB64[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || std::isspace(static_cast<unsigned char>(c))) continue;
        int v = value(c);
        if (v < 0) throw std::runtime_error("base64: invalid character");
        acc = acc << 6 | uint32_t(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(uint8_t(acc >> bits));
        }
    }
    return out;
}

}  // namespace fsgs
