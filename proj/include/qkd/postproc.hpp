#pragma once

#include <cstdint>
#include <vector>

#include "qkd/bits.hpp"
#include "qkd/random.hpp"
#include "qkd/transport.hpp"

namespace qkd::postproc {

/// Interactive error-correction schedule. Block size starts at
/// ceil(k1_coefficient / qber_est) and doubles each pass.
struct CascadeParams {
    int passes = 4;
    double k1_coefficient = 0.73;
};

/// Toeplitz extractor input: out_len rows over a key of n bits require
/// exactly n + out_len - 1 seed bits.
struct PaParams {
    BitString seed;
    std::size_t out_len = 0;
};

/// Margin subtracted from the extractable length to absorb estimation
/// error in the disclosed-sample QBER.
inline constexpr std::uint32_t kDefaultSafetyBits = 30;

/// Shannon entropy of a bit with bias q, in bits.
double binary_entropy(double q);

/// Collision-entropy penalty tau1(q) = log2(1 + 4q - 4q^2).
double tau1(double q);

/// Asymptotic secret fraction against individual attacks:
/// max(0, 1 - tau1(q) - h(q)). Defined on q in [0, 1/2].
double secret_fraction(double q);

/// The q where secret_fraction reaches zero (bisected once, cached).
double secret_fraction_threshold();

/// Final key length m = max(0, floor(n*(1 - tau1(q)) - leaked_ec - safety)).
std::uint64_t final_key_length(std::uint64_t n, double qber, std::uint64_t leaked_ec,
                               std::uint32_t safety_bits = kDefaultSafetyBits);

/// Sorted distinct positions for the disclosed QBER sample.
std::vector<std::uint32_t> sample_positions(std::size_t key_len, std::size_t sample_size,
                                            Rng& rng);

/// Removes the given sorted positions from a key.
BitString remove_positions(const BitString& key, const std::vector<std::uint32_t>& sorted);

struct QberEstimate {
    double qber = 0.0;
    BitString key_a;  ///< with the sample removed
    BitString key_b;
    std::vector<std::uint32_t> positions;
};

/// Discloses a random sample of positions, estimates the error rate and
/// burns the sample from both keys. Requires equal-length keys and
/// 1 <= sample_size <= key length.
QberEstimate estimate_qber(const BitString& key_a, const BitString& key_b,
                           std::size_t sample_size, Rng& rng);

/// Toeplitz hashing: out[i] = XOR_j seed[i - j + n - 1] * key[j].
BitString privacy_amplify(const BitString& key, const PaParams& pa);

/// Initial Cascade block size for a given estimate; degenerates to one
/// block per pass when the estimate is zero.
std::size_t cascade_block_size(double qber_est, std::size_t n, double k1_coefficient);

/// Reference-side Cascade: answers parity queries until the peer is
/// done. Shuffle seeds are drawn from `rng` and announced per pass.
/// Returns the number of parity bits disclosed.
std::uint64_t cascade_alice(const BitString& key, double qber_est, session::Transport& t,
                            Rng& rng, const CascadeParams& params = {});

struct CascadeBobResult {
    BitString corrected;
    std::uint64_t leaked_bits = 0;
};

/// Correcting-side Cascade: drives binary searches and back-tracking
/// over earlier passes until all disclosed blocks agree.
CascadeBobResult cascade_bob(const BitString& key, double qber_est, session::Transport& t,
                             const CascadeParams& params = {});

struct CascadeResult {
    BitString corrected_b;
    std::uint64_t leaked_bits = 0;
};

/// Runs both Cascade halves over the given transports (reference side on
/// a worker thread). The transports must be the two ends of one duplex
/// channel.
CascadeResult cascade_correct(const BitString& key_a, const BitString& key_b,
                              double qber_est, session::Transport& alice_side,
                              session::Transport& bob_side, std::uint64_t shuffle_seed,
                              const CascadeParams& params = {});

/// Same, over an internal in-memory pipe.
CascadeResult cascade_correct(const BitString& key_a, const BitString& key_b,
                              double qber_est, std::uint64_t shuffle_seed = 1,
                              const CascadeParams& params = {});

}  // namespace qkd::postproc
