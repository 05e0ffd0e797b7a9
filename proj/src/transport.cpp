#include "qkd/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <thread>

#include "qkd/errors.hpp"

namespace qkd::session {

void send_frame(Transport& t, const Frame& frame) {
    const auto bytes = encode_frame(frame);
    t.send(bytes.data(), bytes.size());
}

Frame recv_frame(Transport& t) {
    std::uint8_t header[5];
    t.recv_exact(header, 5);
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(header[i]) << (8 * i);
    if (len > (1u << 30))
        throw FramingError("frame payload exceeds size limit");
    const std::uint8_t tag = header[4];
    if (tag < static_cast<std::uint8_t>(FrameType::HELLO) ||
        tag > static_cast<std::uint8_t>(FrameType::ABORT))
        throw ProtocolError("unknown frame tag");
    Frame frame;
    frame.type = static_cast<FrameType>(tag);
    frame.payload.resize(len);
    if (len > 0) t.recv_exact(frame.payload.data(), len);
    return frame;
}

Frame expect_frame(Transport& t, FrameType type) {
    Frame f = recv_frame(t);
    if (f.type == type) return f;
    if (f.type == FrameType::ABORT) {
        std::string why = "peer aborted the session";
        if (!f.payload.empty())
            why += ": " + std::string(f.payload.begin(), f.payload.end());
        throw AbortError(why);
    }
    throw ProtocolError("unexpected frame type");
}

class InProcPipe::Endpoint final : public Transport {
  public:
    Endpoint(std::shared_ptr<Queue> out, std::shared_ptr<Queue> in)
        : out_(std::move(out)), in_(std::move(in)) {}

    ~Endpoint() override {
        std::lock_guard lock(out_->mutex);
        out_->closed = true;
        out_->ready.notify_all();
    }

    void send(const std::uint8_t* data, std::size_t n) override {
        std::lock_guard lock(out_->mutex);
        if (out_->closed) throw TransportError("pipe closed");
        out_->bytes.insert(out_->bytes.end(), data, data + n);
        out_->ready.notify_all();
    }

    void recv_exact(std::uint8_t* data, std::size_t n) override {
        std::unique_lock lock(in_->mutex);
        for (std::size_t got = 0; got < n;) {
            in_->ready.wait(lock, [&] { return !in_->bytes.empty() || in_->closed; });
            if (in_->bytes.empty()) throw TransportError("pipe closed by peer");
            while (got < n && !in_->bytes.empty()) {
                data[got++] = in_->bytes.front();
                in_->bytes.pop_front();
            }
        }
    }

    void close() noexcept override {
        for (auto* q : {out_.get(), in_.get()}) {
            std::lock_guard lock(q->mutex);
            q->closed = true;
            q->ready.notify_all();
        }
    }

  private:
    std::shared_ptr<Queue> out_, in_;
};

InProcPipe::InProcPipe()
    : a2b_(std::make_shared<Queue>()),
      b2a_(std::make_shared<Queue>()),
      alice_(std::make_unique<Endpoint>(a2b_, b2a_)),
      bob_(std::make_unique<Endpoint>(b2a_, a2b_)) {}

InProcPipe::~InProcPipe() = default;

Transport& InProcPipe::alice_end() { return *alice_; }
Transport& InProcPipe::bob_end() { return *bob_; }

namespace {

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

std::unique_ptr<TcpTransport> TcpTransport::listen(std::uint16_t port) {
    const int server = ::socket(AF_INET, SOCK_STREAM, 0);
    if (server < 0) throw TransportError("socket() failed");
    int one = 1;
    ::setsockopt(server, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(server, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(server);
        throw TransportError("bind() failed on port " + std::to_string(port));
    }
    if (::listen(server, 1) != 0) {
        ::close(server);
        throw TransportError("listen() failed");
    }
    const int fd = ::accept(server, nullptr, nullptr);
    ::close(server);
    if (fd < 0) throw TransportError("accept() failed");
    set_nodelay(fd);
    return std::unique_ptr<TcpTransport>(new TcpTransport(fd));
}

std::unique_ptr<TcpTransport> TcpTransport::connect(const std::string& host,
                                                    std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0)
        throw TransportError("cannot resolve host " + host);

    int fd = -1;
    // Tolerate a listener that is still starting up.
    for (int attempt = 0; attempt < 50; ++attempt) {
        fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
        if (fd < 0) break;
        if (::connect(fd, res->ai_addr, res->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw TransportError("connect to " + host + " failed");
    set_nodelay(fd);
    return std::unique_ptr<TcpTransport>(new TcpTransport(fd));
}

TcpTransport::~TcpTransport() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpTransport::close() noexcept {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpTransport::send(const std::uint8_t* data, std::size_t n) {
    while (n > 0) {
        const ssize_t sent = ::send(fd_, data, n, MSG_NOSIGNAL);
        if (sent <= 0) throw TransportError("send() failed");
        data += sent;
        n -= static_cast<std::size_t>(sent);
    }
}

void TcpTransport::recv_exact(std::uint8_t* data, std::size_t n) {
    while (n > 0) {
        const ssize_t got = ::recv(fd_, data, n, 0);
        if (got == 0) throw TransportError("connection closed by peer");
        if (got < 0) throw TransportError("recv() failed");
        data += got;
        n -= static_cast<std::size_t>(got);
    }
}

}  // namespace qkd::session
