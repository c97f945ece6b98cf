// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/scene_io.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace fsgs {

namespace {

// Serialization assumes little-endian IEEE floats, which holds on every
// platform this project targets.
static_assert(sizeof(float) == 4);

class Writer {
public:
    explicit Writer(std::vector<uint8_t>& out) : out_(out) {}

    void u32(uint32_t v) {
        uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
        out_.insert(out_.end(), b, b + 4);
    }
    void f32(float v) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void bytes(const void* p, std::size_t n) {
        const uint8_t* b = static_cast<const uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }

private:
    std::vector<uint8_t>& out_;
};

class Reader {
public:
    Reader(const uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    uint32_t u32() {
        need(4);
        uint32_t v = uint32_t(data_[pos_]) | uint32_t(data_[pos_ + 1]) << 8 |
                     uint32_t(data_[pos_ + 2]) << 16 | uint32_t(data_[pos_ + 3]) << 24;
        pos_ += 4;
        return v;
    }
    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    void f32_array(float* dst, std::size_t count) {
        need(count * 4);
        for (std::size_t i = 0; i < count; ++i) dst[i] = f32_raw(pos_ + i * 4);
        pos_ += count * 4;
    }
    void raw(void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }
    std::size_t remaining() const { return size_ - pos_; }

private:
    float f32_raw(std::size_t at) const {
        uint32_t bits = uint32_t(data_[at]) | uint32_t(data_[at + 1]) << 8 |
                        uint32_t(data_[at + 2]) << 16 | uint32_t(data_[at + 3]) << 24;
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    void need(std::size_t n) const {
        if (pos_ + n > size_) throw FormatError("scene file truncated");
    }

    const uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'F', 'S', 'G', 'S'};
constexpr uint32_t kVersion = 1;

}  // namespace

std::vector<uint8_t> encode_scene(const Scene& scene) {
    std::vector<uint8_t> out;
    Writer w(out);
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    const uint32_t n = uint32_t(scene.surfels.size());
    const uint32_t m = uint32_t(scene.queries.size());
    const uint32_t c = scene.decoder.num_classes;
    w.u32(n);
    w.u32(m);
    w.u32(scene.sem_dim);
    w.u32(scene.ins_dim);
    w.u32(c);

    for (const Surfel& s : scene.surfels) { w.f32(s.center.x); w.f32(s.center.y); w.f32(s.center.z); }
    for (const Surfel& s : scene.surfels) { w.f32(s.tangent_u.x); w.f32(s.tangent_u.y); w.f32(s.tangent_u.z); }
    for (const Surfel& s : scene.surfels) { w.f32(s.tangent_v.x); w.f32(s.tangent_v.y); w.f32(s.tangent_v.z); }
    for (const Surfel& s : scene.surfels) { w.f32(s.scale_u); w.f32(s.scale_v); }
    for (const Surfel& s : scene.surfels) w.f32(s.opacity);
    for (const Surfel& s : scene.surfels) { w.f32(s.rgb.x); w.f32(s.rgb.y); w.f32(s.rgb.z); }
    for (float v : scene.sem_features) w.f32(v);
    for (float v : scene.ins_features) w.f32(v);

    for (const InstanceQuery& q : scene.queries) { w.f32(q.center.x); w.f32(q.center.y); w.f32(q.center.z); }
    for (const InstanceQuery& q : scene.queries)
        for (float v : q.covariance.m) w.f32(v);
    for (const InstanceQuery& q : scene.queries)
        for (float v : q.feature) w.f32(v);

    for (float v : scene.decoder.weights) w.f32(v);
    for (float v : scene.decoder.bias) w.f32(v);
    for (const std::string& name : scene.decoder.class_names) {
        w.u32(uint32_t(name.size()));
        w.bytes(name.data(), name.size());
    }
    w.bytes(scene.decoder.thing_flags.data(), scene.decoder.thing_flags.size());
    return out;
}

Scene decode_scene(const std::vector<uint8_t>& bytes) {
    Reader r(bytes.data(), bytes.size());
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic, expected FSGS");
    uint32_t version = r.u32();
    if (version != kVersion)
        throw FormatError("unsupported format version " + std::to_string(version));

    Scene scene;
    scene.format_version = version;
    const uint32_t n = r.u32();
    const uint32_t m = r.u32();
    scene.sem_dim = r.u32();
    scene.ins_dim = r.u32();
    const uint32_t c = r.u32();

    // Guard absurd headers before allocating.
    const std::size_t min_needed = std::size_t(n) * (15 + scene.sem_dim + scene.ins_dim) * 4;
    if (min_needed > bytes.size()) throw FormatError("scene file truncated");

    scene.surfels.resize(n);
    std::vector<float> tmp(std::size_t(n) * 3);
    r.f32_array(tmp.data(), std::size_t(n) * 3);
    for (uint32_t i = 0; i < n; ++i)
        scene.surfels[i].center = {tmp[i * 3], tmp[i * 3 + 1], tmp[i * 3 + 2]};
    r.f32_array(tmp.data(), std::size_t(n) * 3);
    for (uint32_t i = 0; i < n; ++i)
        scene.surfels[i].tangent_u = {tmp[i * 3], tmp[i * 3 + 1], tmp[i * 3 + 2]};
    r.f32_array(tmp.data(), std::size_t(n) * 3);
    for (uint32_t i = 0; i < n; ++i)
        scene.surfels[i].tangent_v = {tmp[i * 3], tmp[i * 3 + 1], tmp[i * 3 + 2]};
    r.f32_array(tmp.data(), std::size_t(n) * 2);
    for (uint32_t i = 0; i < n; ++i) {
        scene.surfels[i].scale_u = tmp[i * 2];
        scene.surfels[i].scale_v = tmp[i * 2 + 1];
    }
    r.f32_array(tmp.data(), n);
    for (uint32_t i = 0; i < n; ++i) scene.surfels[i].opacity = tmp[i];
    r.f32_array(tmp.data(), std::size_t(n) * 3);
    for (uint32_t i = 0; i < n; ++i)
        scene.surfels[i].rgb = {tmp[i * 3], tmp[i * 3 + 1], tmp[i * 3 + 2]};

    scene.sem_features.resize(std::size_t(n) * scene.sem_dim);
    r.f32_array(scene.sem_features.data(), scene.sem_features.size());
    scene.ins_features.resize(std::size_t(n) * scene.ins_dim);
    r.f32_array(scene.ins_features.data(), scene.ins_features.size());

    scene.queries.resize(m);
    for (uint32_t q = 0; q < m; ++q) {
        float v[3];
        r.f32_array(v, 3);
        scene.queries[q].center = {v[0], v[1], v[2]};
    }
    for (uint32_t q = 0; q < m; ++q) r.f32_array(scene.queries[q].covariance.m.data(), 9);
    for (uint32_t q = 0; q < m; ++q) {
        scene.queries[q].feature.resize(scene.ins_dim);
        r.f32_array(scene.queries[q].feature.data(), scene.ins_dim);
    }

    scene.decoder.num_classes = c;
    scene.decoder.feature_dim = scene.sem_dim;
    scene.decoder.weights.resize(std::size_t(c) * scene.sem_dim);
    r.f32_array(scene.decoder.weights.data(), scene.decoder.weights.size());
    scene.decoder.bias.resize(c);
    r.f32_array(scene.decoder.bias.data(), c);
    scene.decoder.class_names.resize(c);
    for (uint32_t i = 0; i < c; ++i) {
        uint32_t len = r.u32();
        if (len > r.remaining()) throw FormatError("scene file truncated in class names");
        std::string name(len, '\0');
        r.raw(name.data(), len);
        scene.decoder.class_names[i] = std::move(name);
    }
    scene.decoder.thing_flags.resize(c);
    r.raw(scene.decoder.thing_flags.data(), c);
    if (r.remaining() != 0) throw FormatError("trailing bytes after scene payload");

    auto violations = validate_scene(scene);
    if (!violations.empty()) throw ValidationError(violations.front().message);
    for (InstanceQuery& q : scene.queries) q.refresh_inverse();
    return scene;
}

Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scene file: " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return decode_scene(bytes);
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
    std::vector<uint8_t> bytes = encode_scene(scene);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open output file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Camera> load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectory file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("trajectory parse error: ") + e.what());
    }
    if (!doc.is_array()) throw FormatError("trajectory must be a JSON array");

    std::vector<Camera> cams;
    cams.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& j = doc[i];
        Camera cam;
        try {
            cam.fx = j.at("fx").get<double>();
            cam.fy = j.at("fy").get<double>();
            cam.cx = j.at("cx").get<double>();
            cam.cy = j.at("cy").get<double>();
            cam.width = j.at("width").get<int>();
            cam.height = j.at("height").get<int>();
            auto rot = j.at("rotation").get<std::vector<double>>();
            auto tr = j.at("translation").get<std::vector<double>>();
            if (rot.size() != 9 || tr.size() != 3)
                throw FormatError("camera " + std::to_string(i) + ": bad rotation/translation size");
            std::copy(rot.begin(), rot.end(), cam.rotation.m.begin());
            cam.translation = {tr[0], tr[1], tr[2]};
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("camera " + std::to_string(i) + ": " + e.what());
        }
        auto violations = validate_camera(cam);
        if (!violations.empty())
            throw ValidationError("camera " + std::to_string(i) + ": " +
                                  violations.front().message);
        cams.push_back(cam);
    }
    return cams;
}

void save_trajectory(const std::vector<Camera>& cameras, const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::array();
    for (const Camera& cam : cameras) {
        nlohmann::json j;
        j["fx"] = cam.fx;
        j["fy"] = cam.fy;
        j["cx"] = cam.cx;
        j["cy"] = cam.cy;
        j["width"] = cam.width;
        j["height"] = cam.height;
        j["rotation"] = std::vector<double>(cam.rotation.m.begin(), cam.rotation.m.end());
        j["translation"] = std::vector<double>{cam.translation.x, cam.translation.y,
                                               cam.translation.z};
        doc.push_back(std::move(j));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open output file: " + path.string());
    out << doc.dump(2) << "\n";
}

std::size_t scene_file_size(std::size_t n_surfels, std::size_t n_queries, std::size_t sem_dim,
                            std::size_t ins_dim, std::size_t num_classes,
                            std::size_t class_name_bytes) {
    std::size_t header = 4 + 6 * 4;
    std::size_t surfel_record = (3 + 3 + 3 + 2 + 1 + 3 + sem_dim + ins_dim) * 4;
    std::size_t query_record = (3 + 9 + ins_dim) * 4;
    std::size_t decoder = num_classes * sem_dim * 4 + num_classes * 4;
    std::size_t names = num_classes * 4 + class_name_bytes + num_classes;
    return header + n_surfels * surfel_record + n_queries * query_record + decoder + names;
}

}  // namespace fsgs
