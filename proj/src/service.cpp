// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <stdexcept>

#include "fsgs/frame_output.hpp"
#include "fsgs/image_io.hpp"
#include "fsgs/parallel.hpp"

namespace fsgs {

namespace {

int service_threads(const ServiceConfig& config) {
    if (config.threads > 0) return config.threads;
    if (const char* env = std::getenv("FSGS_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return default_thread_count();
}

bool parse_camera(const nlohmann::json& j, Camera& cam, std::string& error) {
    try {
        cam.fx = j.at("fx").get<double>();
        cam.fy = j.at("fy").get<double>();
        cam.cx = j.at("cx").get<double>();
        cam.cy = j.at("cy").get<double>();
        cam.width = j.at("width").get<int>();
        cam.height = j.at("height").get<int>();
        auto rot = j.at("rotation").get<std::vector<double>>();
        auto tr = j.at("translation").get<std::vector<double>>();
        if (rot.size() != 9 || tr.size() != 3) {
            error = "bad rotation/translation size";
            return false;
        }
        std::copy(rot.begin(), rot.end(), cam.rotation.m.begin());
        cam.translation = {tr[0], tr[1], tr[2]};
    } catch (const nlohmann::json::exception& e) {
        error = std::string("bad camera: ") + e.what();
        return false;
    }
    auto violations = validate_camera(cam);
    if (!violations.empty()) {
        error = violations.front().message == "camera: rotation not orthonormal"
                    ? "invalid rotation"
                    : violations.front().message;
        return false;
    }
    return true;
}

ssize_t send_all(int fd, const char* data, std::size_t size) {
    std::size_t sent = 0;
    while (sent < size) {
        ssize_t n = ::send(fd, data + sent, size - sent, MSG_NOSIGNAL);
        if (n <= 0) return n;
        sent += std::size_t(n);
    }
    return ssize_t(sent);
}

}  // namespace

nlohmann::json handle_render_request(const SceneRenderData& data, const ServiceConfig& config,
                                     const nlohmann::json& request) {
    nlohmann::json response;
    std::string request_id;
    if (request.is_object() && request.contains("request_id") && request["request_id"].is_string())
        request_id = request["request_id"].get<std::string>();
    response["request_id"] = request_id;

    if (!request.is_object()) {
        response["error"] = "request must be a JSON object";
        return response;
    }
    if (!request.contains("camera")) {
        response["error"] = "missing camera";
        return response;
    }
    Camera cam;
    std::string cam_error;
    if (!parse_camera(request["camera"], cam, cam_error)) {
        response["error"] = cam_error;
        return response;
    }

    uint32_t channels = 0;
    if (!request.contains("channels") || !request["channels"].is_array()) {
        response["error"] = "missing channels";
        return response;
    }
    for (const auto& c : request["channels"]) {
        std::string name = c.get<std::string>();
        if (name == "rgb") channels |= kChannelRgb;
        else if (name == "depth") channels |= kChannelDepth;
        else if (name == "panoptic") channels |= kChannelPanoptic;
        else {
            response["error"] = "unknown channel: " + name;
            return response;
        }
    }
    if (channels == 0) {
        response["error"] = "no channels";
        return response;
    }

    RenderConfig rc;
    rc.mode = config.mode;
    rc.top_k = config.top_k;
    rc.channels = channels | kChannelAlpha;
    rc.threads = service_threads(config);
    if (request.contains("top_k") && !request["top_k"].is_null()) {
        int k = request["top_k"].get<int>();
        if (k < 1) {
            response["error"] = "top_k must be >= 1";
            return response;
        }
        rc.top_k = k;
    }

    FrameBundle frame = render(data, cam, rc);

    nlohmann::json payloads;
    if (channels & kChannelRgb) payloads["rgb"] = base64_encode(encode_rgb_png(frame));
    if (channels & kChannelDepth) payloads["depth"] = base64_encode(encode_depth_raw(frame));
    if (channels & kChannelPanoptic)
        payloads["panoptic"] = base64_encode(encode_panoptic_raw(frame));
    response["channels"] = std::move(payloads);
    response["width"] = frame.width;
    response["height"] = frame.height;
    response["render_ms"] = std::max(frame.stats.wall_time_ms, 1e-3);
    response["stats"] = {{"rn_total", frame.stats.rn_total},
                         {"rn_per_tile", frame.stats.rn_per_tile},
                         {"feature_mads", frame.stats.feature_mads}};
    return response;
}

RenderService::RenderService(const Scene& scene, ServiceConfig config)
    : scene_(scene), config_(config), data_(prepare_scene(scene, service_threads(config))) {}

RenderService::~RenderService() { stop(); }

void RenderService::start(int port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(uint16_t(port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::runtime_error("bind failed on port " + std::to_string(port));
    }
    if (::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::runtime_error("listen failed");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    stopping_ = false;
    acceptor_ = std::thread([this] { accept_loop(); });
}

void RenderService::stop() {
    if (listen_fd_ < 0 && !acceptor_.joinable()) return;
    stopping_ = true;
    // shutdown() unblocks accept(); the fd stays valid until the acceptor
    // thread has exited.
    if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
    if (acceptor_.joinable()) acceptor_.join();
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    std::vector<std::thread> workers;
    {
        std::lock_guard<std::mutex> lock(workers_mutex_);
        workers.swap(workers_);
    }
    for (auto& w : workers)
        if (w.joinable()) w.join();
}

void RenderService::accept_loop() {
    for (;;) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (stopping_) return;
            continue;
        }
        uint64_t id = ++connections_;
        std::clog << "[fsgs-serve] connection " << id << " opened\n";
        std::lock_guard<std::mutex> lock(workers_mutex_);
        workers_.emplace_back([this, fd, id] {
            serve_connection(fd);
            std::clog << "[fsgs-serve] connection " << id << " closed\n";
        });
    }
}

void RenderService::serve_connection(int fd) {
    std::string buffer;
    char chunk[4096];
    for (;;) {
        // Look for a complete request line first.
        std::size_t nl = buffer.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            if (line.empty()) continue;

            nlohmann::json response;
            nlohmann::json request = nlohmann::json::parse(line, nullptr, false);
            if (request.is_discarded()) {
                response["request_id"] = "";
                response["error"] = "malformed JSON";
            } else {
                response = handle_render_request(data_, config_, request);
            }
            std::string out = response.dump();
            out.push_back('\n');
            if (send_all(fd, out.data(), out.size()) <= 0) break;
            continue;
        }

        // No buffered request: between requests a shutdown may close the
        // connection; a request already being read is answered first.
        if (stopping_) break;
        pollfd pfd{fd, POLLIN, 0};
        int rv = ::poll(&pfd, 1, 100);
        if (rv < 0) break;
        if (rv == 0) continue;
        ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
        if (n <= 0) break;  // client closed
        buffer.append(chunk, std::size_t(n));
    }
    ::close(fd);
}

std::vector<std::string> ndjson_roundtrip(const std::string& host, int port,
                                          const std::vector<std::string>& lines) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(uint16_t(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw std::runtime_error("bad host: " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw std::runtime_error("connect failed");
    }

    std::vector<std::string> responses;
    std::string buffer;
    char chunk[65536];
    for (const std::string& line : lines) {
        std::string out = line;
        out.push_back('\n');
        if (send_all(fd, out.data(), out.size()) <= 0) {
            ::close(fd);
            throw std::runtime_error("send failed");
        }
        for (;;) {
            std::size_t nl = buffer.find('\n');
            if (nl != std::string::npos) {
                responses.push_back(buffer.substr(0, nl));
                buffer.erase(0, nl + 1);
                break;
            }
            ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
            if (n <= 0) {
                ::close(fd);
                throw std::runtime_error("connection closed before response");
            }
            buffer.append(chunk, std::size_t(n));
        }
    }
    ::close(fd);
    return responses;
}

}  // namespace fsgs
