// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsgs/rasterizer.hpp"

namespace fsgs {

// Pose-in / frames-out render service. Protocol: newline-delimited JSON over
// TCP. Request:
//   {"request_id": str, "camera": {fx,fy,cx,cy,width,height,rotation,translation},
//    "channels": ["rgb","depth","panoptic"], "top_k": optional int}
// Response payloads are base64: rgb = PNG bytes, depth = little-endian float32
// raster, panoptic = little-endian uint32 raster. Malformed requests produce
// {"request_id", "error"} objects without closing the connection.

struct ServiceConfig {
    CullMode mode = CullMode::Accutile;
    std::optional<int> top_k;
    int threads = 0;  // 0 = FSGS_THREADS env or hardware concurrency
};

// Pure request handler, shared by the server loop and tests.
nlohmann::json handle_render_request(const SceneRenderData& data, const ServiceConfig& config,
                                     const nlohmann::json& request);

class RenderService {
public:
    RenderService(const Scene& scene, ServiceConfig config);
    ~RenderService();

    RenderService(const RenderService&) = delete;
    RenderService& operator=(const RenderService&) = delete;

    // Binds and starts the accept loop; port 0 picks an ephemeral port.
    // Throws on bind failure.
    void start(int port);
    int port() const { return port_; }

    // Graceful shutdown: stops accepting, lets in-flight requests complete,
    // then joins all connection threads.
    void stop();

    uint64_t connections_served() const { return connections_.load(); }

private:
    void accept_loop();
    void serve_connection(int fd);

    const Scene& scene_;
    ServiceConfig config_;
    SceneRenderData data_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> stopping_{false};
    std::atomic<uint64_t> connections_{0};
    std::thread acceptor_;
    std::mutex workers_mutex_;
    std::vector<std::thread> workers_;
};

// Blocking test/client helper: connects, sends each line, reads one response
// line per request, disconnects.
std::vector<std::string> ndjson_roundtrip(const std::string& host, int port,
                                          const std::vector<std::string>& lines);

}  // namespace fsgs
