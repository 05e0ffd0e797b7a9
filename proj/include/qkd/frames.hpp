#pragma once

#include <cstdint>
#include <vector>

namespace qkd::session {

/// Classical-channel message types. Wire tags are consecutive from
/// HELLO = 0x01 in declaration order through ABORT = 0x0D.
enum class FrameType : std::uint8_t {
    HELLO = 0x01,
    PARAMS = 0x02,
    DETECTIONS = 0x03,
    BASIS_REVEAL = 0x04,
    SIFT_RESULT = 0x05,
    QBER_SAMPLE = 0x06,
    QBER_RESULT = 0x07,
    SHUFFLE_SEED = 0x08,
    PARITIES = 0x09,
    PARITY_REPLY = 0x0A,
    PA_SEED = 0x0B,
    KEY_HASH = 0x0C,
    ABORT = 0x0D,
};

/// Wire layout: 4-byte little-endian payload length, 1-byte type tag,
/// then the payload.
struct Frame {
    FrameType type = FrameType::HELLO;
    std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);

/// Decodes one frame from `data` starting at `offset`, advancing it.
/// Throws FramingError on truncation and ProtocolError on unknown tags.
Frame decode_frame(const std::vector<std::uint8_t>& data, std::size_t& offset);

/// Little-endian scalar packing used by all payloads.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f64(std::vector<std::uint8_t>& out, double v);

/// Payload cursor with bounds checking; throws ProtocolError on overrun.
struct PayloadReader {
    const std::vector<std::uint8_t>& data;
    std::size_t pos = 0;

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::vector<std::uint8_t> bytes(std::size_t n);
    bool done() const { return pos == data.size(); }
};

}  // namespace qkd::session
