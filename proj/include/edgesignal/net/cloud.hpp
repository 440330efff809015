#pragma once

#include "edgesignal/config.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace edgesignal::net {

struct CloudCounters {
    std::uint64_t requests = 0;
    /// Request and response lines, headers and bodies, as seen by the stub.
    std::uint64_t bytes_in = 0;
    std::uint64_t bytes_out = 0;

    std::uint64_t total() const { return bytes_in + bytes_out; }
};

/// Static file server for the configuration document at GET /config.json.
/// Re-reads the file per request and honours If-None-Match with 304.
class CloudStub {
public:
    CloudStub(std::filesystem::path config_file, std::string host = "127.0.0.1", std::uint16_t port = 0);
    ~CloudStub();
    CloudStub(const CloudStub&) = delete;
    CloudStub& operator=(const CloudStub&) = delete;

    /// Throws NetError when the address cannot be bound.
    void start();
    void stop();
    /// Blocks until stop() is called from another thread.
    void wait();

    std::uint16_t port() const { return port_; }
    std::string url() const;
    CloudCounters counters() const;

private:
    std::filesystem::path config_file_;
    std::string host_;
    std::uint16_t port_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::atomic<std::uint64_t> requests_{0};
    std::atomic<std::uint64_t> bytes_in_{0};
    std::atomic<std::uint64_t> bytes_out_{0};
};

enum class SyncStatus { Updated, Unchanged, Skipped, Rejected };

std::string_view to_string(SyncStatus status);

struct SyncOutcome {
    SyncStatus status = SyncStatus::Skipped;
    /// The config to run with: the remote one when Updated, the local one otherwise.
    SystemConfig config;
    std::string message;
};

/// Pulls the configuration document from a cloud endpoint into a local file.
class ConfigSyncer {
public:
    /// `endpoint` is a base URL such as http://127.0.0.1:8080.
    ConfigSyncer(std::string endpoint, std::filesystem::path local_path, Duration timeout = std::chrono::seconds(2));

    /// One attempt. A valid, different remote document atomically replaces
    /// the local file. Remote failures never throw; a local file that does not
    /// parse throws ConfigError.
    SyncOutcome sync_once();

    const std::string& endpoint() const { return endpoint_; }

private:
    std::string endpoint_;
    std::filesystem::path local_path_;
    Duration timeout_;
    std::string etag_;
};

/// One-shot sync returning the effective configuration.
SystemConfig config_sync(const std::string& endpoint, const std::filesystem::path& local_path);

} // namespace edgesignal::net
