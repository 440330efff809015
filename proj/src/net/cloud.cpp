#include "edgesignal/net/cloud.hpp"

#include "edgesignal/errors.hpp"
#include "edgesignal/net/socket.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

namespace edgesignal::net {

namespace {

std::string etag_of(std::string_view body)
{
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char c : body) {
        hash = (hash ^ c) * 0x100000001b3ULL;
    }
    return fmt::format("\"{:016x}\"", hash);
}

std::uint64_t header_bytes(const httplib::Headers& headers)
{
    std::uint64_t n = 2;
    for (const auto& [key, value] : headers) {
        n += key.size() + 2 + value.size() + 2;
    }
    return n;
}

std::uint64_t request_bytes(const httplib::Request& req)
{
    return req.method.size() + 1 + req.target.size() + 1 + req.version.size() + 2 + header_bytes(req.headers) +
           req.body.size();
}

std::uint64_t response_bytes(const httplib::Response& res)
{
    // Status line, plus the Content-Length header httplib adds when writing.
    std::uint64_t n = res.version.size() + 1 + 3 + 1 + std::string_view(httplib::status_message(res.status)).size() + 2;
    n += header_bytes(res.headers) + res.body.size();
    if (!res.body.empty() && !res.has_header("Content-Length")) {
        n += std::string_view("Content-Length: ").size() + std::to_string(res.body.size()).size() + 2;
    }
    return n;
}

} // namespace

CloudStub::CloudStub(std::filesystem::path config_file, std::string host, std::uint16_t port)
    : config_file_(std::move(config_file)), host_(std::move(host)), port_(port)
{
}

CloudStub::~CloudStub()
{
    stop();
}

void CloudStub::start()
{
    server_ = std::make_unique<httplib::Server>();
    server_->Get("/config.json", [this](const httplib::Request& req, httplib::Response& res) {
        std::string body;
        try {
            body = read_file(config_file_);
        } catch (const InputError&) {
            res.status = 404;
            return;
        }
        const auto etag = etag_of(body);
        res.set_header("ETag", etag);
        if (req.get_header_value("If-None-Match") == etag) {
            res.status = 304;
            return;
        }
        res.set_content(body, "application/json");
    });
    server_->set_logger([this](const httplib::Request& req, const httplib::Response& res) {
        requests_ += 1;
        bytes_in_ += request_bytes(req);
        bytes_out_ += response_bytes(res);
    });
    if (port_ == 0) {
        const int bound = server_->bind_to_any_port(host_);
        if (bound < 0) {
            throw NetError("cloud stub cannot bind " + host_);
        }
        port_ = static_cast<std::uint16_t>(bound);
    } else if (!server_->bind_to_port(host_, port_)) {
        throw NetError(fmt::format("cloud stub cannot bind {}:{}", host_, port_));
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void CloudStub::stop()
{
    if (server_) {
        server_->stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

void CloudStub::wait()
{
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::string CloudStub::url() const
{
    return fmt::format("http://{}:{}", host_, port_);
}

CloudCounters CloudStub::counters() const
{
    return {requests_.load(), bytes_in_.load(), bytes_out_.load()};
}

std::string_view to_string(SyncStatus status)
{
    switch (status) {
    case SyncStatus::Updated:
        return "updated";
    case SyncStatus::Unchanged:
        return "unchanged";
    case SyncStatus::Skipped:
        return "skipped";
    case SyncStatus::Rejected:
        return "rejected";
    }
    return "?";
}

ConfigSyncer::ConfigSyncer(std::string endpoint, std::filesystem::path local_path, Duration timeout)
    : endpoint_(std::move(endpoint)), local_path_(std::move(local_path)), timeout_(timeout)
{
}

SyncOutcome ConfigSyncer::sync_once()
{
    SyncOutcome outcome;
    outcome.config = load_config(local_path_);

    httplib::Client client(endpoint_);
    const auto us = timeout_.count();
    client.set_connection_timeout(us / 1000000, us % 1000000);
    client.set_read_timeout(us / 1000000, us % 1000000);
    httplib::Headers headers;
    if (!etag_.empty()) {
        headers.emplace("If-None-Match", etag_);
    }
    const auto res = client.Get("/config.json", headers);
    if (!res) {
        outcome.status = SyncStatus::Skipped;
        outcome.message = "cloud unreachable (" + httplib::to_string(res.error()) + "), keeping local config";
        spdlog::info("config sync skipped: {}", outcome.message);
        return outcome;
    }
    if (res->status == 304) {
        outcome.status = SyncStatus::Unchanged;
        outcome.message = "not modified";
        return outcome;
    }
    if (res->status != 200) {
        outcome.status = SyncStatus::Skipped;
        outcome.message = fmt::format("cloud answered HTTP {}, keeping local config", res->status);
        spdlog::info("config sync skipped: {}", outcome.message);
        return outcome;
    }
    SystemConfig remote;
    try {
        remote = parse_config(res->body);
    } catch (const InputError& e) {
        outcome.status = SyncStatus::Rejected;
        outcome.message = std::string("remote config rejected: ") + e.what();
        spdlog::warn("{}", outcome.message);
        return outcome;
    }
    etag_ = res->get_header_value("ETag");
    if (remote == outcome.config) {
        outcome.status = SyncStatus::Unchanged;
        outcome.message = "remote config matches local";
        return outcome;
    }
    write_file_atomically(local_path_, res->body);
    outcome.status = SyncStatus::Updated;
    outcome.config = std::move(remote);
    outcome.message = "local config replaced";
    spdlog::info("config sync: {}", outcome.message);
    return outcome;
}

SystemConfig config_sync(const std::string& endpoint, const std::filesystem::path& local_path)
{
    return ConfigSyncer(endpoint, local_path).sync_once().config;
}

} // namespace edgesignal::net
