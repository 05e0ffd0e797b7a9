#include "qkd/frames.hpp"

#include <bit>
#include <cstring>

#include "qkd/errors.hpp"

namespace qkd::session {

namespace {
constexpr std::size_t kMaxPayload = 1u << 30;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
    if (frame.payload.size() > kMaxPayload)
        throw FramingError("frame payload exceeds size limit");
    std::vector<std::uint8_t> out;
    out.reserve(5 + frame.payload.size());
    put_u32(out, static_cast<std::uint32_t>(frame.payload.size()));
    out.push_back(static_cast<std::uint8_t>(frame.type));
    out.insert(out.end(), frame.payload.begin(), frame.payload.end());
    return out;
}

Frame decode_frame(const std::vector<std::uint8_t>& data, std::size_t& offset) {
    if (offset > data.size() || data.size() - offset < 5)
        throw FramingError("truncated frame header");
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i)
        len |= static_cast<std::uint32_t>(data[offset + i]) << (8 * i);
    if (len > kMaxPayload)
        throw FramingError("frame payload exceeds size limit");
    const std::uint8_t tag = data[offset + 4];
    if (tag < static_cast<std::uint8_t>(FrameType::HELLO) ||
        tag > static_cast<std::uint8_t>(FrameType::ABORT))
        throw ProtocolError("unknown frame tag");
    if (data.size() - offset - 5 < len)
        throw FramingError("truncated frame payload");
    Frame frame;
    frame.type = static_cast<FrameType>(tag);
    frame.payload.assign(data.begin() + offset + 5, data.begin() + offset + 5 + len);
    offset += 5 + len;
    return frame;
}

std::uint8_t PayloadReader::u8() {
    if (pos + 1 > data.size()) throw ProtocolError("payload overrun");
    return data[pos++];
}

std::uint32_t PayloadReader::u32() {
    if (pos + 4 > data.size()) throw ProtocolError("payload overrun");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
    pos += 4;
    return v;
}

std::uint64_t PayloadReader::u64() {
    if (pos + 8 > data.size()) throw ProtocolError("payload overrun");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
    pos += 8;
    return v;
}

double PayloadReader::f64() {
    return std::bit_cast<double>(u64());
}

std::vector<std::uint8_t> PayloadReader::bytes(std::size_t n) {
    if (pos + n > data.size()) throw ProtocolError("payload overrun");
    std::vector<std::uint8_t> out(data.begin() + pos, data.begin() + pos + n);
    pos += n;
    return out;
}

}  // namespace qkd::session
