#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qkd/analysis.hpp"
#include "qkd/bits.hpp"
#include "qkd/detector.hpp"
#include "qkd/optics.hpp"
#include "qkd/postproc.hpp"
#include "qkd/random.hpp"
#include "qkd/transport.hpp"

namespace qkd::session {

/// Sender-side state for one clock: the two modulation bits.
struct AliceRecord {
    std::uint64_t clock_index = 0;
    std::uint8_t b1 = 0;  ///< pi-phase bit
    std::uint8_t b2 = 0;  ///< pi/2-phase bit
};

/// Receiver-side state for one detected clock.
struct BobRecord {
    std::uint64_t clock_index = 0;
    std::uint8_t b3 = 0;  ///< measurement-phase bit
    std::uint8_t port = 0;
    optics::Timeslot slot = optics::Timeslot::middle;
};

/// Key bits plus the clocks they came from (strictly increasing).
struct SiftedKey {
    BitString bits;
    std::vector<std::uint64_t> clock_indices;
};

/// Draws the two modulation bits and builds the outgoing pulse.
std::pair<AliceRecord, optics::EncodedPulse> alice_emit(Rng& rng, double mean_photons,
                                                        std::uint64_t clock_index);

/// Draws b3, splits the pulse over the interferometer output and runs
/// the gated detectors on the middle slot; photons in the outer slots
/// fall outside the gate and are lost. Returns a record on a click.
std::optional<BobRecord> bob_receive(const optics::EncodedPulse& pulse, Rng& rng,
                                     const optics::OpticsParams& optics,
                                     const detector::DetectorParams& det,
                                     detector::DetectorState& state);

/// Basis reconciliation: keep clock i iff b2 == b3; key bits are b1
/// (sender) and the click port (receiver). Records must be sorted by
/// clock; every receiver clock must appear in the sender list.
std::pair<SiftedKey, SiftedKey> sift_bb84(const std::vector<AliceRecord>& alice,
                                          const std::vector<BobRecord>& bob);

/// State-pair reconciliation: the sender announces b1, the receiver his
/// click port. Keep iff the outcome is impossible under exactly one of
/// the two candidate phases b1*pi and b1*pi + pi/2; the receiver infers
/// the b2 of the surviving candidate, the sender keeps her b2.
std::pair<SiftedKey, SiftedKey> sift_sarg04(const std::vector<AliceRecord>& alice,
                                            const std::vector<BobRecord>& bob);

/// One full quantum exchange run by a single referee (no classical
/// protocol): emits, propagates, detects and sifts with the same seed
/// discipline as run_session, keeping only the kept clocks.
struct QuantumRunResult {
    std::uint64_t detections = 0;
    SiftedKey alice_key;
    SiftedKey bob_key;
};

QuantumRunResult run_quantum_referee(const analysis::SystemParams& params,
                                     double length_km, std::uint64_t n_clocks,
                                     std::uint64_t seed);

enum class Role : std::uint8_t { alice = 0, bob = 1 };

struct SessionConfig {
    analysis::SystemParams params{};
    double length_km = 0.0;
    std::uint64_t n_clocks = 0;
    std::uint64_t seed = 1;
    std::uint32_t safety_bits = postproc::kDefaultSafetyBits;
    postproc::CascadeParams cascade{};
};

struct SessionResult {
    std::uint64_t n_clocks = 0;
    std::uint64_t detections = 0;
    std::uint64_t sifted_bits = 0;     ///< before the disclosed sample is burned
    double qber_estimate = 0.0;
    std::uint64_t leaked_ec_bits = 0;
    std::uint64_t final_bits = 0;
    bool verified = false;
    double elapsed_s = 0.0;
    BitString final_key;  ///< populated only when verified
};

/// Runs one role of the full protocol over the given transport:
/// hello/parameter check, quantum exchange, sifting,
/// sample-based QBER estimate, interactive error correction, privacy
/// amplification and final hash comparison. Both roles must be driven
/// with identical configs; the two role RNG streams are derived from
/// config.seed. Returns matching results on success; a hash mismatch
/// aborts both sides.
SessionResult run_session(const SessionConfig& config, Transport& transport, Role role);

}  // namespace qkd::session
