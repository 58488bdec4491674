#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "netoas/assessment.hpp"
#include "netoas/calibration.hpp"

namespace netoas {

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8765;  // 0 picks a free port
    CalibrationProfile calib;
    std::optional<SvmModel> model;
    std::filesystem::path user_store;  // empty: synopses are not persisted
    int fps = 50;
    double duration_s = 180;
    std::uint32_t seed = 1;
};

// WebSocket endpoint: clients stream FRAME messages and receive state, target, warning and synopsis texts.
class Server {
public:
    explicit Server(ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and starts serving on a background thread; returns the bound port.
    unsigned short start();
    // Blocks the caller until stop() is called from elsewhere.
    void wait();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace netoas
