// Byte-stream transports: the in-memory pipe, TCP loopback, and the
// framed send/expect helpers shared by the protocol code.
#include <unistd.h>

#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "qkd/errors.hpp"
#include "qkd/transport.hpp"

using namespace qkd;
using namespace qkd::session;

namespace {

Frame make_frame(FrameType type, std::size_t size, std::uint8_t fill) {
    Frame f;
    f.type = type;
    f.payload.assign(size, fill);
    return f;
}

}  // namespace

TEST_CASE("in-process pipe carries framed traffic both ways") {
    InProcPipe pipe;
    const Frame ping = make_frame(FrameType::DETECTIONS, 100000, 0xAB);
    const Frame pong = make_frame(FrameType::BASIS_REVEAL, 3, 0x07);

    std::thread bob([&] {
        const Frame got = recv_frame(pipe.bob_end());
        CHECK(got.type == ping.type);
        CHECK(got.payload == ping.payload);
        send_frame(pipe.bob_end(), pong);
    });
    send_frame(pipe.alice_end(), ping);
    const Frame reply = recv_frame(pipe.alice_end());
    bob.join();
    CHECK(reply.type == pong.type);
    CHECK(reply.payload == pong.payload);
}

TEST_CASE("closing the pipe fails current and future operations") {
    InProcPipe pipe;

    // A blocked reader wakes up with a transport error.
    std::thread reader([&] {
        std::uint8_t byte = 0;
        CHECK_THROWS_AS(pipe.bob_end().recv_exact(&byte, 1), TransportError);
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    pipe.alice_end().close();
    reader.join();

    // Subsequent operations on either end fail too.
    std::uint8_t byte = 1;
    CHECK_THROWS_AS(pipe.alice_end().send(&byte, 1), TransportError);
    CHECK_THROWS_AS(pipe.alice_end().recv_exact(&byte, 1), TransportError);
    CHECK_THROWS_AS(pipe.bob_end().send(&byte, 1), TransportError);
}

TEST_CASE("expect_frame enforces the expected type and surfaces aborts") {
    InProcPipe pipe;

    send_frame(pipe.alice_end(), make_frame(FrameType::KEY_HASH, 8, 0x11));
    const Frame ok = expect_frame(pipe.bob_end(), FrameType::KEY_HASH);
    CHECK(ok.payload.size() == 8);

    send_frame(pipe.alice_end(), make_frame(FrameType::PARITIES, 1, 0));
    CHECK_THROWS_AS(expect_frame(pipe.bob_end(), FrameType::KEY_HASH), ProtocolError);

    Frame abort;
    abort.type = FrameType::ABORT;
    const std::string reason = "final key hash mismatch";
    abort.payload.assign(reason.begin(), reason.end());
    send_frame(pipe.alice_end(), abort);
    try {
        expect_frame(pipe.bob_end(), FrameType::KEY_HASH);
        FAIL("expected AbortError");
    } catch (const AbortError& e) {
        CHECK(std::string(e.what()).find(reason) != std::string::npos);
    }
}

TEST_CASE("TCP loopback carries frames and close is visible to the peer") {
    const auto port = static_cast<std::uint16_t>(40000 + ::getpid() % 20000);

    std::unique_ptr<TcpTransport> bob;
    std::thread listener([&] { bob = TcpTransport::listen(port); });
    auto alice = TcpTransport::connect("127.0.0.1", port);
    listener.join();
    REQUIRE(bob != nullptr);

    // A payload far larger than one TCP segment must arrive intact.
    const Frame big = make_frame(FrameType::DETECTIONS, 1 << 20, 0x5C);
    std::thread sender([&] { send_frame(*alice, big); });
    const Frame got = recv_frame(*bob);
    sender.join();
    CHECK(got.type == big.type);
    CHECK(got.payload == big.payload);

    send_frame(*bob, make_frame(FrameType::QBER_RESULT, 8, 0x01));
    CHECK(recv_frame(*alice).type == FrameType::QBER_RESULT);

    alice->close();
    std::uint8_t byte = 0;
    CHECK_THROWS_AS(bob->recv_exact(&byte, 1), TransportError);
}
