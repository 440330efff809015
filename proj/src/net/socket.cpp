#include "edgesignal/net/socket.hpp"

#include "edgesignal/errors.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

namespace edgesignal::net {

namespace {

std::string errno_text(const char* what)
{
    return std::string(what) + ": " + std::strerror(errno);
}

void disable_nagle(int fd)
{
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive)
{
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = passive ? AI_PASSIVE : 0;
    addrinfo* result = nullptr;
    const auto service = std::to_string(port);
    const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &result);
    if (rc != 0) {
        throw NetError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    return result;
}

} // namespace

Socket& Socket::operator=(Socket&& other) noexcept
{
    if (this != &other) {
        close();
        fd_ = other.release();
    }
    return *this;
}

int Socket::release()
{
    const int fd = fd_;
    fd_ = -1;
    return fd;
}

void Socket::close()
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Socket::shutdown()
{
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
    }
}

void Socket::send_all(std::string_view data)
{
    while (!data.empty()) {
        const auto n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw NetError(errno_text("send"));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

std::size_t Socket::receive(char* buffer, std::size_t capacity)
{
    while (true) {
        const auto n = ::recv(fd_, buffer, capacity, 0);
        if (n >= 0) {
            return static_cast<std::size_t>(n);
        }
        if (errno != EINTR) {
            throw NetError(errno_text("recv"));
        }
    }
}

std::optional<std::string> LineReader::read_line()
{
    while (true) {
        const auto newline = buffer_.find('\n', scanned_);
        if (newline != std::string::npos) {
            std::string line = buffer_.substr(0, newline);
            buffer_.erase(0, newline + 1);
            scanned_ = 0;
            return line;
        }
        scanned_ = buffer_.size();
        if (buffer_.size() > max_line_) {
            throw NetError("line exceeds " + std::to_string(max_line_) + " bytes");
        }
        char chunk[4096];
        const auto n = socket_.receive(chunk, sizeof(chunk));
        if (n == 0) {
            return std::nullopt;
        }
        buffer_.append(chunk, n);
    }
}

Listener Listener::bind(const std::string& host, std::uint16_t port)
{
    addrinfo* info = resolve(host, port, true);
    Socket sock(::socket(info->ai_family, info->ai_socktype, info->ai_protocol));
    if (!sock.valid()) {
        ::freeaddrinfo(info);
        throw NetError(errno_text("socket"));
    }
    int one = 1;
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    const int rc = ::bind(sock.fd(), info->ai_addr, info->ai_addrlen);
    ::freeaddrinfo(info);
    if (rc != 0) {
        throw NetError(errno_text(("bind " + host + ":" + std::to_string(port)).c_str()));
    }
    if (::listen(sock.fd(), 64) != 0) {
        throw NetError(errno_text("listen"));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&bound), &len);

    Listener listener;
    listener.socket_ = std::move(sock);
    listener.port_ = ntohs(bound.sin_port);
    return listener;
}

std::optional<Socket> Listener::accept(Duration timeout)
{
    if (!socket_.valid()) {
        return std::nullopt;
    }
    pollfd pfd{socket_.fd(), POLLIN, 0};
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(timeout).count();
    if (::poll(&pfd, 1, static_cast<int>(ms)) <= 0 || !(pfd.revents & POLLIN)) {
        return std::nullopt;
    }
    const int fd = ::accept(socket_.fd(), nullptr, nullptr);
    if (fd < 0) {
        return std::nullopt;
    }
    disable_nagle(fd);
    return Socket(fd);
}

Socket connect_tcp(const std::string& host, std::uint16_t port)
{
    addrinfo* info = resolve(host, port, false);
    Socket sock(::socket(info->ai_family, info->ai_socktype, info->ai_protocol));
    if (!sock.valid()) {
        ::freeaddrinfo(info);
        throw NetError(errno_text("socket"));
    }
    const int rc = ::connect(sock.fd(), info->ai_addr, info->ai_addrlen);
    ::freeaddrinfo(info);
    if (rc != 0) {
        throw NetError(errno_text(("connect " + host + ":" + std::to_string(port)).c_str()));
    }
    disable_nagle(sock.fd());
    return sock;
}

std::pair<std::string, std::uint16_t> split_host_port(std::string_view address)
{
    const auto colon = address.rfind(':');
    if (colon == std::string_view::npos) {
        throw InputError("address '" + std::string(address) + "' is not host:port");
    }
    const auto port_text = address.substr(colon + 1);
    unsigned port = 0;
    const auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || end != port_text.data() + port_text.size() || port > 65535) {
        throw InputError("address '" + std::string(address) + "' has an invalid port");
    }
    return {std::string(address.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

} // namespace edgesignal::net
