#pragma once

#include "edgesignal/time.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace edgesignal::net {

/// Socket-level failure: bind, connect, or a peer going away mid-write.
class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Owns one connected stream socket.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket() { close(); }
    Socket(Socket&& other) noexcept : fd_(other.release()) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    int release();
    void close();
    /// Unblocks readers in other threads without releasing the descriptor.
    void shutdown();

    /// Throws NetError when the peer is gone.
    void send_all(std::string_view data);
    /// Returns 0 at end of stream; throws NetError on failure.
    std::size_t receive(char* buffer, std::size_t capacity);

private:
    int fd_ = -1;
};

/// Splits a byte stream into '\n'-terminated lines.
class LineReader {
public:
    explicit LineReader(Socket& socket, std::size_t max_line = 1 << 20)
        : socket_(socket), max_line_(max_line)
    {
    }

    /// Next line without its terminator; nullopt at end of stream. A line over
    /// max_line bytes throws NetError.
    std::optional<std::string> read_line();

private:
    Socket& socket_;
    std::size_t max_line_;
    std::string buffer_;
    std::size_t scanned_ = 0;
};

class Listener {
public:
    /// Binds and listens; port 0 picks an ephemeral port. Throws NetError.
    static Listener bind(const std::string& host, std::uint16_t port);

    std::uint16_t port() const { return port_; }
    /// Waits up to `timeout`; nullopt when nothing arrived or the listener closed.
    std::optional<Socket> accept(Duration timeout);
    void close() { socket_.close(); }

private:
    Socket socket_;
    std::uint16_t port_ = 0;
};

/// Throws NetError when the connection cannot be made.
Socket connect_tcp(const std::string& host, std::uint16_t port);

/// "host:port" into its parts. Throws InputError.
std::pair<std::string, std::uint16_t> split_host_port(std::string_view address);

} // namespace edgesignal::net
