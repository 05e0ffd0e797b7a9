#include "qkd/session.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>

#include "qkd/channel.hpp"
#include "qkd/errors.hpp"
#include "qkd/frames.hpp"

namespace qkd::session {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'Q', 'K', 'D', '1'};
constexpr std::uint32_t kPulseBatch = 65536;

/// Best-effort ABORT to the peer, then the local throw. Protocol
/// violations surface as ProtocolError; the negotiated failure mode
/// (hash mismatch) as AbortError.
[[noreturn]] void abort_session(Transport& t, const std::string& why, bool is_violation) {
    try {
        Frame f;
        f.type = FrameType::ABORT;
        f.payload.assign(why.begin(), why.end());
        send_frame(t, f);
    } catch (...) {
        // peer may already be gone; the local throw still reports
    }
    if (is_violation) throw ProtocolError(why);
    throw AbortError(why);
}

/// Unambiguous-discrimination outcome: -1 when the click is consistent
/// with both candidate phases b1*pi and b1*pi + pi/2, otherwise the b2
/// of the surviving candidate. In quarter-turn units an outcome with
/// phase omega excludes a candidate c exactly when c - omega = pi.
int sarg_infer(std::uint8_t b1, std::uint8_t b3, std::uint8_t port) {
    const int omega = (b3 + 2 * port) & 3;
    const bool excludes_c0 = ((2 * b1 - omega) & 3) == 2;
    const bool excludes_c1 = ((2 * b1 + 1 - omega) & 3) == 2;
    if (excludes_c0 == excludes_c1) return -1;
    return excludes_c0 ? 1 : 0;
}

/// Shared two-pointer walk for the referee sifts: every receiver clock
/// must exist in the (sorted) sender list; keep_fn yields the two key
/// bits or nothing.
template <typename KeepFn>
std::pair<SiftedKey, SiftedKey> sift_records(const std::vector<AliceRecord>& alice,
                                             const std::vector<BobRecord>& bob,
                                             KeepFn&& keep_fn) {
    SiftedKey key_a, key_b;
    std::size_t ai = 0;
    for (std::size_t bi = 0; bi < bob.size(); ++bi) {
        const BobRecord& br = bob[bi];
        if (bi > 0 && br.clock_index <= bob[bi - 1].clock_index)
            throw ProtocolError("receiver records out of order");
        while (ai < alice.size() && alice[ai].clock_index < br.clock_index) ++ai;
        if (ai == alice.size() || alice[ai].clock_index != br.clock_index)
            throw ProtocolError("receiver clock missing from sender records");
        if (br.slot != optics::Timeslot::middle) continue;  // diagnostics only
        if (const auto kept = keep_fn(alice[ai], br)) {
            key_a.bits.push_back(kept->first);
            key_a.clock_indices.push_back(br.clock_index);
            key_b.bits.push_back(kept->second);
            key_b.clock_indices.push_back(br.clock_index);
        }
    }
    return {std::move(key_a), std::move(key_b)};
}

std::vector<std::uint8_t> encode_params(const SessionConfig& c) {
    std::vector<std::uint8_t> p;
    put_f64(p, c.params.clock_hz);
    put_f64(p, c.params.mu);
    put_f64(p, c.params.alice_loss_db);
    put_f64(p, c.params.detector.qe);
    put_f64(p, c.params.detector.dark_per_gate);
    put_f64(p, c.params.detector.ap_prob);
    p.push_back(static_cast<std::uint8_t>(c.params.detector.policy));
    put_f64(p, c.params.optics.visibility);
    put_f64(p, c.params.alpha_db_per_km);
    p.push_back(static_cast<std::uint8_t>(c.params.protocol));
    put_f64(p, c.params.f_ec);
    p.push_back(static_cast<std::uint8_t>(c.params.qber_mode));
    put_f64(p, c.length_km);
    put_u64(p, c.n_clocks);
    put_u32(p, c.safety_bits);
    put_u32(p, static_cast<std::uint32_t>(c.cascade.passes));
    put_f64(p, c.cascade.k1_coefficient);
    return p;
}

void exchange_hello(Transport& t, Role role) {
    Frame hello;
    hello.type = FrameType::HELLO;
    hello.payload.assign(kMagic.begin(), kMagic.end());
    hello.payload.push_back(static_cast<std::uint8_t>(role));
    send_frame(t, hello);

    const Frame peer = expect_frame(t, FrameType::HELLO);
    if (peer.payload.size() != 5 ||
        !std::equal(kMagic.begin(), kMagic.end(), peer.payload.begin()))
        throw ProtocolError("peer is not speaking this protocol");
    if (peer.payload[4] > 1) throw ProtocolError("unknown peer role");
    if (static_cast<Role>(peer.payload[4]) == role)
        throw ProtocolError("both endpoints claim the same role");
}

void append_bits(std::vector<std::uint8_t>& payload, const BitString& bits) {
    const auto packed = pack_bits(bits);
    payload.insert(payload.end(), packed.begin(), packed.end());
}

/// Disclosed-sample size for a sifted key of the given length: a tenth
/// of the key but at least 4000 bits, capped at half the key so the
/// estimate never consumes it. Both roles evaluate this independently.
std::uint64_t qber_sample_size(std::uint64_t sifted_len) {
    const std::uint64_t want =
        std::max<std::uint64_t>(4000, (sifted_len + 9) / 10);
    return std::min(want, sifted_len / 2);
}

/// Error rate used to size correction blocks. A clean sample of size s
/// does not prove the key is clean: rates up to ~3/s slip through with
/// fair odds (rule of three), and sizing blocks for zero errors makes
/// the correction pass blind to any even residue. Both sides compute
/// this from the exchanged (mismatches, s) pair, so they stay in step.
double cascade_block_qber(double qber_estimate, std::uint64_t sample_size) {
    if (sample_size == 0) return qber_estimate;
    return std::max(qber_estimate, 3.0 / static_cast<double>(sample_size));
}

struct DistilledTail {
    double qber_estimate = 0.0;
    std::uint64_t leaked_ec = 0;
    std::uint64_t final_bits = 0;
    BitString final_key;
};

SessionResult run_alice(const SessionConfig& cfg, Transport& t) {
    exchange_hello(t, Role::alice);
    // Symmetric parameter exchange: the echoed copy doubles as the
    // go-ahead, so a disagreeing peer aborts before the pulse stream
    // starts and the reason still reaches us.
    Frame params_frame;
    params_frame.type = FrameType::PARAMS;
    params_frame.payload = encode_params(cfg);
    send_frame(t, params_frame);
    const Frame peer_params = expect_frame(t, FrameType::PARAMS);
    if (peer_params.payload != params_frame.payload)
        abort_session(t, "session parameters disagree between endpoints", true);

    const double mu_eff = cfg.params.mu_effective(cfg.length_km);
    Rng rng(derive_seed(cfg.seed, kSaltAlice));
    const std::uint64_t n = cfg.n_clocks;

    // Quantum phase: stream the pulse descriptions; remember both
    // modulation bit strings for sifting.
    std::vector<bool> b1s(n), b2s(n);
    for (std::uint64_t start = 0; start < n; start += kPulseBatch) {
        const auto count =
            static_cast<std::uint32_t>(std::min<std::uint64_t>(kPulseBatch, n - start));
        BitString phases(2 * static_cast<std::size_t>(count));
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto [rec, pulse] = alice_emit(rng, mu_eff, start + i);
            (void)pulse;  // the wire carries the equivalent phase bits
            b1s[start + i] = rec.b1 != 0;
            b2s[start + i] = rec.b2 != 0;
            phases[2 * i] = rec.b2;
            phases[2 * i + 1] = rec.b1;
        }
        Frame f;
        f.type = FrameType::DETECTIONS;
        put_u64(f.payload, start);
        put_u32(f.payload, count);
        put_f64(f.payload, mu_eff);
        append_bits(f.payload, phases);
        send_frame(t, f);
    }

    // Sifting.
    const Frame reveal = expect_frame(t, FrameType::BASIS_REVEAL);
    PayloadReader rr{reveal.payload};
    const std::uint64_t det_count = rr.u64();
    if (det_count > n) abort_session(t, "more detections than clocks", true);
    std::vector<std::uint64_t> clocks(det_count);
    for (std::uint64_t i = 0; i < det_count; ++i) {
        clocks[i] = rr.u64();
        if (clocks[i] >= n || (i > 0 && clocks[i] <= clocks[i - 1]))
            abort_session(t, "detection clocks not strictly increasing", true);
    }
    const BitString revealed =
        unpack_bits(rr.bytes((det_count + 7) / 8), det_count);
    if (!rr.done()) abort_session(t, "oversized basis reveal", true);

    BitString key;
    if (cfg.params.protocol == analysis::Protocol::bb84) {
        // revealed = b3; the sender decides keep and announces it.
        BitString keep(det_count);
        for (std::uint64_t i = 0; i < det_count; ++i) {
            keep[i] = b2s[clocks[i]] == (revealed[i] != 0);
            if (keep[i]) key.push_back(b1s[clocks[i]]);
        }
        Frame sr;
        sr.type = FrameType::SIFT_RESULT;
        put_u64(sr.payload, det_count);
        append_bits(sr.payload, keep);
        send_frame(t, sr);
    } else {
        // revealed = click ports; announce b1, the receiver decides.
        BitString b1_bits(det_count);
        for (std::uint64_t i = 0; i < det_count; ++i) b1_bits[i] = b1s[clocks[i]];
        Frame br;
        br.type = FrameType::BASIS_REVEAL;
        put_u64(br.payload, det_count);
        append_bits(br.payload, b1_bits);
        send_frame(t, br);

        const Frame sr = expect_frame(t, FrameType::SIFT_RESULT);
        PayloadReader sres{sr.payload};
        if (sres.u64() != det_count)
            abort_session(t, "sift result count mismatch", true);
        const BitString keep = unpack_bits(sres.bytes((det_count + 7) / 8), det_count);
        if (!sres.done()) abort_session(t, "oversized sift result", true);
        for (std::uint64_t i = 0; i < det_count; ++i) {
            // Keeping is possible iff the click port excludes one
            // candidate, which given b1 pins the port.
            const bool keepable = revealed[i] == (b1s[clocks[i]] ? 0 : 1);
            if (keep[i] && !keepable)
                abort_session(t, "sift result inconsistent with revealed bits", true);
            if (keep[i]) key.push_back(b2s[clocks[i]]);
        }
    }
    b1s.clear();
    b2s.clear();
    const std::uint64_t sifted_bits = key.size();

    // QBER estimate by disclosure.
    DistilledTail tail;
    double cascade_q = 0.0;
    if (sifted_bits >= 2) {
        if (sifted_bits > 0xffffffffull)
            throw ProtocolError("sifted key exceeds the sample wire format");
        const auto s = static_cast<std::uint32_t>(qber_sample_size(sifted_bits));
        const auto positions = postproc::sample_positions(key.size(), s, rng);
        Frame qs;
        qs.type = FrameType::QBER_SAMPLE;
        put_u32(qs.payload, s);
        BitString sample_bits(s);
        for (std::uint32_t i = 0; i < s; ++i) {
            put_u32(qs.payload, positions[i]);
            sample_bits[i] = key[positions[i]];
        }
        append_bits(qs.payload, sample_bits);
        send_frame(t, qs);

        const Frame qr = expect_frame(t, FrameType::QBER_RESULT);
        PayloadReader qres{qr.payload};
        const std::uint32_t mismatches = qres.u32();
        const std::uint32_t echo = qres.u32();
        if (!qres.done() || echo != s || mismatches > s)
            abort_session(t, "malformed sample result", true);
        tail.qber_estimate = static_cast<double>(mismatches) / s;
        cascade_q = cascade_block_qber(tail.qber_estimate, s);
        key = postproc::remove_positions(key, positions);
    }

    // Error correction, with this side answering parity queries.
    if (!key.empty())
        tail.leaked_ec = postproc::cascade_alice(key, cascade_q, t, rng, cfg.cascade);

    // Privacy amplification.
    tail.final_bits = postproc::final_key_length(key.size(), tail.qber_estimate,
                                                 tail.leaked_ec, cfg.safety_bits);
    postproc::PaParams pa;
    pa.out_len = tail.final_bits;
    if (tail.final_bits > 0) {
        pa.seed.resize(key.size() + tail.final_bits - 1);
        for (auto& bit : pa.seed) bit = random_bit(rng) ? 1 : 0;
    }
    Frame pf;
    pf.type = FrameType::PA_SEED;
    put_u64(pf.payload, tail.final_bits);
    put_u64(pf.payload, pa.seed.size());
    append_bits(pf.payload, pa.seed);
    send_frame(t, pf);
    tail.final_key =
        tail.final_bits > 0 ? postproc::privacy_amplify(key, pa) : BitString{};

    // Verification.
    Frame kh;
    kh.type = FrameType::KEY_HASH;
    put_u64(kh.payload, tail.final_key.size());
    put_u64(kh.payload, key_hash(tail.final_key));
    send_frame(t, kh);
    const Frame peer_hash = expect_frame(t, FrameType::KEY_HASH);
    PayloadReader hres{peer_hash.payload};
    const std::uint64_t peer_len = hres.u64();
    const std::uint64_t peer_fnv = hres.u64();
    if (!hres.done() || peer_len != tail.final_key.size() ||
        peer_fnv != key_hash(tail.final_key))
        abort_session(t, "final key hash mismatch", false);

    SessionResult result;
    result.n_clocks = n;
    result.detections = det_count;
    result.sifted_bits = sifted_bits;
    result.qber_estimate = tail.qber_estimate;
    result.leaked_ec_bits = tail.leaked_ec;
    result.final_bits = tail.final_bits;
    result.verified = true;
    result.final_key = std::move(tail.final_key);
    return result;
}

SessionResult run_bob(const SessionConfig& cfg, Transport& t) {
    exchange_hello(t, Role::bob);
    const Frame params_frame = expect_frame(t, FrameType::PARAMS);
    if (params_frame.payload != encode_params(cfg))
        abort_session(t, "session parameters disagree between endpoints", true);
    send_frame(t, params_frame);  // echo = agreement, releases the pulse stream

    const double mu_eff = cfg.params.mu_effective(cfg.length_km);
    Rng rng(derive_seed(cfg.seed, kSaltBob));
    detector::DetectorState state;
    const std::uint64_t n = cfg.n_clocks;

    // Quantum phase: detect each incoming pulse batch.
    std::vector<BobRecord> dets;
    std::uint64_t next_clock = 0;
    while (next_clock < n) {
        const Frame df = expect_frame(t, FrameType::DETECTIONS);
        PayloadReader r{df.payload};
        const std::uint64_t start = r.u64();
        const std::uint32_t count = r.u32();
        const double mu_frame = r.f64();
        if (start != next_clock || count == 0 || count > kPulseBatch ||
            start + count > n)
            abort_session(t, "pulse batch out of sequence", true);
        if (mu_frame != mu_eff)
            abort_session(t, "pulse intensity disagrees with local parameters", true);
        const std::size_t n_phase_bits = 2 * static_cast<std::size_t>(count);
        const BitString phases =
            unpack_bits(r.bytes((n_phase_bits + 7) / 8), n_phase_bits);
        if (!r.done()) abort_session(t, "oversized pulse batch", true);
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto pulse = optics::encode_pulse(
                phases[2 * i + 1] != 0, phases[2 * i] != 0, mu_eff, start + i);
            if (auto rec =
                    bob_receive(pulse, rng, cfg.params.optics, cfg.params.detector, state))
                dets.push_back(*rec);
        }
        next_clock = start + count;
    }

    // Sifting.
    const std::uint64_t det_count = dets.size();
    Frame reveal;
    reveal.type = FrameType::BASIS_REVEAL;
    put_u64(reveal.payload, det_count);
    for (const auto& d : dets) put_u64(reveal.payload, d.clock_index);
    BitString announced(det_count);
    const bool bb84 = cfg.params.protocol == analysis::Protocol::bb84;
    for (std::uint64_t i = 0; i < det_count; ++i)
        announced[i] = bb84 ? dets[i].b3 : dets[i].port;
    append_bits(reveal.payload, announced);
    send_frame(t, reveal);

    BitString key;
    if (bb84) {
        const Frame sr = expect_frame(t, FrameType::SIFT_RESULT);
        PayloadReader sres{sr.payload};
        if (sres.u64() != det_count)
            abort_session(t, "sift result count mismatch", true);
        const BitString keep = unpack_bits(sres.bytes((det_count + 7) / 8), det_count);
        if (!sres.done()) abort_session(t, "oversized sift result", true);
        for (std::uint64_t i = 0; i < det_count; ++i)
            if (keep[i]) key.push_back(dets[i].port);
    } else {
        const Frame br = expect_frame(t, FrameType::BASIS_REVEAL);
        PayloadReader bres{br.payload};
        if (bres.u64() != det_count)
            abort_session(t, "basis reveal count mismatch", true);
        const BitString b1_bits = unpack_bits(bres.bytes((det_count + 7) / 8), det_count);
        if (!bres.done()) abort_session(t, "oversized basis reveal", true);

        BitString keep(det_count);
        for (std::uint64_t i = 0; i < det_count; ++i) {
            const int inferred = sarg_infer(b1_bits[i], dets[i].b3, dets[i].port);
            keep[i] = inferred >= 0;
            if (inferred >= 0) key.push_back(static_cast<std::uint8_t>(inferred));
        }
        Frame sr;
        sr.type = FrameType::SIFT_RESULT;
        put_u64(sr.payload, det_count);
        append_bits(sr.payload, keep);
        send_frame(t, sr);
    }
    dets.clear();
    dets.shrink_to_fit();
    const std::uint64_t sifted_bits = key.size();

    // QBER estimate: check the disclosed sample against our bits.
    DistilledTail tail;
    double cascade_q = 0.0;
    if (sifted_bits >= 2) {
        const std::uint64_t s_expected = qber_sample_size(sifted_bits);
        const Frame qs = expect_frame(t, FrameType::QBER_SAMPLE);
        PayloadReader qres{qs.payload};
        const std::uint32_t s = qres.u32();
        if (s != s_expected)
            abort_session(t, "sample size contract violated", true);
        std::vector<std::uint32_t> positions(s);
        for (std::uint32_t i = 0; i < s; ++i) {
            positions[i] = qres.u32();
            if (positions[i] >= key.size() || (i > 0 && positions[i] <= positions[i - 1]))
                abort_session(t, "sample positions not strictly increasing", true);
        }
        const BitString sample_bits = unpack_bits(qres.bytes((s + 7) / 8), s);
        if (!qres.done()) abort_session(t, "oversized sample", true);

        std::uint32_t mismatches = 0;
        for (std::uint32_t i = 0; i < s; ++i)
            mismatches += (sample_bits[i] ^ key[positions[i]]) & 1u;
        Frame qr;
        qr.type = FrameType::QBER_RESULT;
        put_u32(qr.payload, mismatches);
        put_u32(qr.payload, s);
        send_frame(t, qr);
        tail.qber_estimate = static_cast<double>(mismatches) / s;
        cascade_q = cascade_block_qber(tail.qber_estimate, s);
        key = postproc::remove_positions(key, positions);
    }

    // Error correction, this side driving.
    if (!key.empty()) {
        auto corrected = postproc::cascade_bob(key, cascade_q, t, cfg.cascade);
        key = std::move(corrected.corrected);
        tail.leaked_ec = corrected.leaked_bits;
    }

    // Privacy amplification with the announced seed.
    tail.final_bits = postproc::final_key_length(key.size(), tail.qber_estimate,
                                                 tail.leaked_ec, cfg.safety_bits);
    const Frame pf = expect_frame(t, FrameType::PA_SEED);
    PayloadReader pres{pf.payload};
    const std::uint64_t m = pres.u64();
    const std::uint64_t seed_bits = pres.u64();
    if (m != tail.final_bits)
        abort_session(t, "final length disagrees between endpoints", true);
    const std::uint64_t seed_expected = m > 0 ? key.size() + m - 1 : 0;
    if (seed_bits != seed_expected)
        abort_session(t, "privacy seed length mismatch", true);
    postproc::PaParams pa;
    pa.out_len = m;
    pa.seed = unpack_bits(pres.bytes((seed_bits + 7) / 8), seed_bits);
    if (!pres.done()) abort_session(t, "oversized privacy seed", true);
    tail.final_key = m > 0 ? postproc::privacy_amplify(key, pa) : BitString{};

    // Verification: compare against the announced hash, then echo ours.
    const Frame peer_hash = expect_frame(t, FrameType::KEY_HASH);
    PayloadReader hres{peer_hash.payload};
    const std::uint64_t peer_len = hres.u64();
    const std::uint64_t peer_fnv = hres.u64();
    if (!hres.done()) abort_session(t, "malformed key hash", true);
    if (peer_len != tail.final_key.size() || peer_fnv != key_hash(tail.final_key))
        abort_session(t, "final key hash mismatch", false);
    Frame kh;
    kh.type = FrameType::KEY_HASH;
    put_u64(kh.payload, tail.final_key.size());
    put_u64(kh.payload, key_hash(tail.final_key));
    send_frame(t, kh);

    SessionResult result;
    result.n_clocks = n;
    result.detections = det_count;
    result.sifted_bits = sifted_bits;
    result.qber_estimate = tail.qber_estimate;
    result.leaked_ec_bits = tail.leaked_ec;
    result.final_bits = tail.final_bits;
    result.verified = true;
    result.final_key = std::move(tail.final_key);
    return result;
}

}  // namespace

std::pair<AliceRecord, optics::EncodedPulse> alice_emit(Rng& rng, double mean_photons,
                                                        std::uint64_t clock_index) {
    AliceRecord rec;
    rec.clock_index = clock_index;
    rec.b1 = random_bit(rng) ? 1 : 0;
    rec.b2 = random_bit(rng) ? 1 : 0;
    return {rec, optics::encode_pulse(rec.b1 != 0, rec.b2 != 0, mean_photons, clock_index)};
}

std::optional<BobRecord> bob_receive(const optics::EncodedPulse& pulse, Rng& rng,
                                     const optics::OpticsParams& optics_params,
                                     const detector::DetectorParams& det,
                                     detector::DetectorState& state) {
    const std::uint8_t b3 = random_bit(rng) ? 1 : 0;
    const auto dist =
        optics::detection_distribution(pulse.phase_a, optics::bob_phase(b3 != 0), optics_params);
    const std::array<double, 2> arrival_mean{
        pulse.mean_photons * dist.at(optics::Timeslot::middle, 0),
        pulse.mean_photons * dist.at(optics::Timeslot::middle, 1)};
    const auto click = detector::gate_detect(arrival_mean, det, state, rng);
    if (!click) return std::nullopt;
    BobRecord rec;
    rec.clock_index = pulse.clock_index;
    rec.b3 = b3;
    rec.port = click->port;
    rec.slot = click->slot;
    return rec;
}

std::pair<SiftedKey, SiftedKey> sift_bb84(const std::vector<AliceRecord>& alice,
                                          const std::vector<BobRecord>& bob) {
    return sift_records(alice, bob,
                        [](const AliceRecord& a, const BobRecord& b)
                            -> std::optional<std::pair<std::uint8_t, std::uint8_t>> {
                            if (a.b2 != b.b3) return std::nullopt;
                            return std::pair{a.b1, b.port};
                        });
}

std::pair<SiftedKey, SiftedKey> sift_sarg04(const std::vector<AliceRecord>& alice,
                                            const std::vector<BobRecord>& bob) {
    return sift_records(alice, bob,
                        [](const AliceRecord& a, const BobRecord& b)
                            -> std::optional<std::pair<std::uint8_t, std::uint8_t>> {
                            const int inferred = sarg_infer(a.b1, b.b3, b.port);
                            if (inferred < 0) return std::nullopt;
                            return std::pair{a.b2, static_cast<std::uint8_t>(inferred)};
                        });
}

QuantumRunResult run_quantum_referee(const analysis::SystemParams& params,
                                     double length_km, std::uint64_t n_clocks,
                                     std::uint64_t seed) {
    params.validate();
    const double mu_eff = params.mu_effective(length_km);
    Rng alice_rng(derive_seed(seed, kSaltAlice));
    Rng bob_rng(derive_seed(seed, kSaltBob));
    detector::DetectorState state;

    std::vector<AliceRecord> alice_det;
    std::vector<BobRecord> bob_det;
    for (std::uint64_t clock = 0; clock < n_clocks; ++clock) {
        const auto [rec, pulse] = alice_emit(alice_rng, mu_eff, clock);
        if (auto br = bob_receive(pulse, bob_rng, params.optics, params.detector, state)) {
            alice_det.push_back(rec);
            bob_det.push_back(*br);
        }
    }

    QuantumRunResult out;
    out.detections = bob_det.size();
    auto [key_a, key_b] = params.protocol == analysis::Protocol::bb84
                              ? sift_bb84(alice_det, bob_det)
                              : sift_sarg04(alice_det, bob_det);
    out.alice_key = std::move(key_a);
    out.bob_key = std::move(key_b);
    return out;
}

SessionResult run_session(const SessionConfig& config, Transport& transport, Role role) {
    config.params.validate();
    if (config.n_clocks == 0)
        throw std::invalid_argument("a session needs at least one clock");
    if (!(config.length_km >= 0.0))
        throw std::invalid_argument("length_km must be nonnegative");
    if (config.cascade.passes < 1)
        throw std::invalid_argument("cascade needs at least one pass");

    const auto t0 = std::chrono::steady_clock::now();
    SessionResult result = role == Role::alice ? run_alice(config, transport)
                                               : run_bob(config, transport);
    result.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace qkd::session
