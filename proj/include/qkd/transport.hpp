#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "qkd/frames.hpp"

namespace qkd::session {

/// Reliable ordered byte stream between the two roles. Blocking.
class Transport {
  public:
    virtual ~Transport() = default;
    virtual void send(const std::uint8_t* data, std::size_t n) = 0;
    /// Reads exactly n bytes or throws TransportError.
    virtual void recv_exact(std::uint8_t* data, std::size_t n) = 0;
    /// Tears the channel down; any blocked or future peer operation
    /// fails with TransportError.
    virtual void close() noexcept {}
};

void send_frame(Transport& t, const Frame& frame);
Frame recv_frame(Transport& t);
/// Receives a frame and requires the given type; ABORT or anything else
/// raises ProtocolError.
Frame expect_frame(Transport& t, FrameType type);

/// Bidirectional in-memory pipe. Each endpoint is a Transport; safe for
/// one thread per endpoint. Unbounded buffering, so writers never block.
class InProcPipe {
  public:
    InProcPipe();
    ~InProcPipe();
    Transport& alice_end();
    Transport& bob_end();

  private:
    struct Queue {
        std::mutex mutex;
        std::condition_variable ready;
        std::deque<std::uint8_t> bytes;
        bool closed = false;
    };
    class Endpoint;
    std::shared_ptr<Queue> a2b_, b2a_;
    std::unique_ptr<Endpoint> alice_, bob_;
};

/// Loopback-friendly TCP transport. listen() accepts one peer;
/// connect() retries briefly while the listener starts up.
class TcpTransport final : public Transport {
  public:
    static std::unique_ptr<TcpTransport> listen(std::uint16_t port);
    static std::unique_ptr<TcpTransport> connect(const std::string& host, std::uint16_t port);
    ~TcpTransport() override;

    void send(const std::uint8_t* data, std::size_t n) override;
    void recv_exact(std::uint8_t* data, std::size_t n) override;
    void close() noexcept override;

  private:
    explicit TcpTransport(int fd) : fd_(fd) {}
    int fd_ = -1;
};

}  // namespace qkd::session
