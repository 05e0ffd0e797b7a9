#pragma once

#include <cstdint>

#include "qkd/bits.hpp"
#include "qkd/frames.hpp"
#include "qkd/random.hpp"
#include "qkd/transport.hpp"

namespace qkd::test {

/// Transport decorator that forwards bytes untouched and tallies the
/// `count` fields of PARITIES frames passing through send(). Relies on
/// send_frame writing one whole frame per send() call.
class ParityTap final : public session::Transport {
  public:
    explicit ParityTap(session::Transport& inner) : inner_(inner) {}

    void send(const std::uint8_t* data, std::size_t n) override {
        if (n >= 9 && data[4] == static_cast<std::uint8_t>(session::FrameType::PARITIES)) {
            std::uint32_t count = 0;
            for (int i = 0; i < 4; ++i)
                count |= static_cast<std::uint32_t>(data[5 + i]) << (8 * i);
            parity_bits += count;
        }
        inner_.send(data, n);
    }
    void recv_exact(std::uint8_t* data, std::size_t n) override {
        inner_.recv_exact(data, n);
    }
    void close() noexcept override { inner_.close(); }

    std::uint64_t parity_bits = 0;

  private:
    session::Transport& inner_;
};

inline BitString random_key(std::size_t n, Rng& rng) {
    BitString key(n);
    for (auto& b : key) b = random_bit(rng) ? 1 : 0;
    return key;
}

/// key_b = key_a with `n_errors` distinct positions flipped.
inline BitString flip_errors(const BitString& key, std::size_t n_errors, Rng& rng) {
    BitString out = key;
    std::size_t flipped = 0;
    while (flipped < n_errors) {
        const std::size_t pos = uniform_below(rng, out.size());
        if (out[pos] == key[pos]) {
            out[pos] ^= 1;
            ++flipped;
        }
    }
    return out;
}

}  // namespace qkd::test
