#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ibis/segmenter.hpp"

namespace ibis {

// Loopback server for POST /predict that forwards every request to a local
// segmenter. Incoming prior payloads are re-tagged for the backend, so a remote
// client pointed here behaves exactly like the backend itself.
class MockSegmenterServer {
public:
    explicit MockSegmenterServer(std::shared_ptr<const Segmenter> backend, std::string backend_tag);
    ~MockSegmenterServer();
    MockSegmenterServer(const MockSegmenterServer&) = delete;
    MockSegmenterServer& operator=(const MockSegmenterServer&) = delete;

    // Binds 127.0.0.1 on `port` (0 picks a free port) and serves on a background thread.
    int start(int port = 0);
    // Serves on the calling thread until stop() from elsewhere.
    void run(const std::string& host, int port);
    void stop();

    int port() const { return port_; }
    std::string endpoint() const;
    std::vector<std::string> received_bodies() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
    std::thread thread_;
};

// Always returns the same mask with score 1; useful as an echo backend.
class FixedMaskSegmenter final : public Segmenter {
public:
    static constexpr const char* kTag = "fixed/v1";
    explicit FixedMaskSegmenter(Mask m) : mask_(std::move(m)) {}
    SegResult predict(const Image& img, const PromptSet& prompts) const override;
    std::string name() const override { return "fixed"; }

private:
    Mask mask_;
};

}  // namespace ibis
