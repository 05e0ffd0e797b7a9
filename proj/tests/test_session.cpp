// Protocol layer: modulation draws, sifting rules for both protocols,
// referee-vs-session agreement, and the full two-party session over an
// in-process pipe, including abort behavior.
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include <stdexcept>

#include "doctest.h"
#include "qkd/errors.hpp"
#include "qkd/session.hpp"
#include "support.hpp"

using namespace qkd;
using namespace qkd::session;

namespace {

constexpr double kPi = 3.14159265358979323846;

analysis::SystemParams bench_params() {
    analysis::SystemParams p;
    p.detector.qe = 0.25;
    p.detector.dark_per_gate = 1e-5;
    return p;
}

/// Runs both roles of one session over an in-process pipe; optional
/// decorators wrap either end.
struct PairResult {
    SessionResult alice;
    SessionResult bob;
};

PairResult run_pair(const SessionConfig& cfg, Transport* alice_t = nullptr,
                    Transport* bob_t = nullptr, InProcPipe* external_pipe = nullptr) {
    InProcPipe own_pipe;
    InProcPipe& pipe = external_pipe ? *external_pipe : own_pipe;
    Transport& at = alice_t ? *alice_t : pipe.alice_end();
    Transport& bt = bob_t ? *bob_t : pipe.bob_end();

    PairResult out;
    std::exception_ptr bob_error;
    std::thread bob([&] {
        try {
            out.bob = run_session(cfg, bt, Role::bob);
        } catch (...) {
            bob_error = std::current_exception();
            bt.close();
        }
    });
    std::exception_ptr alice_error;
    try {
        out.alice = run_session(cfg, at, Role::alice);
    } catch (...) {
        alice_error = std::current_exception();
        at.close();
    }
    bob.join();
    if (alice_error) std::rethrow_exception(alice_error);
    if (bob_error) std::rethrow_exception(bob_error);
    return out;
}

}  // namespace

TEST_CASE("alice_emit draws fair bits and stamps the matching phase") {
    Rng rng(41);
    int b1_ones = 0;
    int b2_ones = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const auto [rec, pulse] = alice_emit(rng, 0.07, static_cast<std::uint64_t>(i));
        CHECK(rec.clock_index == static_cast<std::uint64_t>(i));
        CHECK(pulse.clock_index == static_cast<std::uint64_t>(i));
        CHECK(pulse.mean_photons == 0.07);
        CHECK(pulse.phase_a ==
              (rec.b1 ? kPi : 0.0) + (rec.b2 ? kPi / 2.0 : 0.0));
        b1_ones += rec.b1;
        b2_ones += rec.b2;
    }
    // 4 sigma on a fair coin over 20000 draws: ~283.
    CHECK(std::abs(b1_ones - n / 2) < 300);
    CHECK(std::abs(b2_ones - n / 2) < 300);
}

TEST_CASE("bob_receive clicks at the thinned-Poisson rate and obeys interference") {
    optics::OpticsParams perfect;
    perfect.visibility = 1.0;
    detector::DetectorParams det;
    det.qe = 0.5;
    detector::DetectorState state;
    Rng rng(42);

    // Middle slot carries half the pulse: P(click) = 1 - exp(-mu*qe/2).
    const double mu = 0.2;
    const int n = 100000;
    int clicks = 0;
    int wrong_port = 0;
    for (int i = 0; i < n; ++i) {
        const auto pulse = optics::encode_pulse(true, false, mu, i);  // phase pi
        const auto rec = bob_receive(pulse, rng, perfect, det, state);
        if (rec) {
            ++clicks;
            // A matched basis (b3 = 0) at dphi = pi must land on port 1;
            // the conjugate basis can land anywhere.
            if (rec->b3 == 0 && rec->port != 1) ++wrong_port;
        }
    }
    CHECK(wrong_port == 0);
    const double expected = 1.0 - std::exp(-mu * det.qe / 2.0);
    const double sigma = std::sqrt(expected * (1.0 - expected) / n);
    CHECK(std::abs(static_cast<double>(clicks) / n - expected) < 4.0 * sigma);
}

TEST_CASE("BB84 sifting keeps matching bases and maps bits to ports") {
    std::vector<AliceRecord> alice;
    for (std::uint64_t c = 0; c < 8; ++c)
        alice.push_back({c, static_cast<std::uint8_t>((c >> 1) & 1),
                         static_cast<std::uint8_t>(c & 1)});
    // Bob detected clocks 1, 2, 5, 7; basis matches at 1 (b2=1,b3=1),
    // 2 (b2=0,b3=0) and 7 (b2=1,b3=1).
    std::vector<BobRecord> bob = {
        {1, 1, 0, optics::Timeslot::middle},
        {2, 0, 1, optics::Timeslot::middle},
        {5, 0, 1, optics::Timeslot::middle},  // b2(5)=1, b3=0: discarded
        {7, 1, 1, optics::Timeslot::middle},
    };
    const auto [ka, kb] = sift_bb84(alice, bob);
    CHECK(ka.clock_indices == std::vector<std::uint64_t>{1, 2, 7});
    CHECK(kb.clock_indices == ka.clock_indices);
    CHECK(ka.bits == BitString{0, 1, 1});  // alice keeps b1
    CHECK(kb.bits == BitString{0, 1, 1});  // bob keeps the port

    // An outer-slot click never reaches the key (records stay clock-sorted).
    const std::vector<BobRecord> with_outer = {
        {1, 1, 0, optics::Timeslot::middle},
        {2, 0, 1, optics::Timeslot::middle},
        {3, 1, 1, optics::Timeslot::late},
        {7, 1, 1, optics::Timeslot::middle},
    };
    // Clocks 1, 2 and 7 still match in basis; the late click at 3 is gone.
    const auto [ka2, kb2] = sift_bb84(alice, with_outer);
    CHECK(ka2.clock_indices == std::vector<std::uint64_t>{1, 2, 7});

    // A detection alice never sent is a protocol violation.
    std::vector<BobRecord> phantom = {{99, 0, 0, optics::Timeslot::middle}};
    CHECK_THROWS_AS(sift_bb84(alice, phantom), ProtocolError);
}

TEST_CASE("SARG04 sifting matches the exclusion oracle on all 16 outcomes") {
    // Oracle: at V = 1 the middle-slot port probabilities are
    // (1 +- cos(dphi))/4; a candidate phase is excluded iff the observed
    // port has probability zero under it. Keep iff exactly one of the
    // two candidate phases b1*pi, b1*pi + pi/2 is excluded; the key bit
    // is the b2 of the surviving candidate.
    const auto possible = [](int b2_candidate, int b1, int b3, int port) {
        const double dphi =
            (b1 * kPi + b2_candidate * kPi / 2.0) - b3 * kPi / 2.0;
        return 1.0 + (1 - 2 * port) * std::cos(dphi) > 1e-9;
    };

    int kept_total = 0;
    for (int b1 = 0; b1 < 2; ++b1)
        for (int b2 = 0; b2 < 2; ++b2)
            for (int b3 = 0; b3 < 2; ++b3)
                for (int port = 0; port < 2; ++port) {
                    const std::vector<AliceRecord> alice = {
                        {0, static_cast<std::uint8_t>(b1),
                         static_cast<std::uint8_t>(b2)}};
                    const std::vector<BobRecord> bob = {
                        {0, static_cast<std::uint8_t>(b3),
                         static_cast<std::uint8_t>(port), optics::Timeslot::middle}};
                    const auto [ka, kb] = sift_sarg04(alice, bob);

                    const bool e0 = !possible(0, b1, b3, port);
                    const bool e1 = !possible(1, b1, b3, port);
                    const bool keep = e0 != e1;
                    CHECK(ka.bits.size() == (keep ? 1u : 0u));
                    CHECK(kb.bits.size() == (keep ? 1u : 0u));
                    if (keep) {
                        ++kept_total;
                        CHECK(ka.bits[0] == b2);          // sender keeps her b2
                        CHECK(kb.bits[0] == (e0 ? 1 : 0));  // surviving candidate
                        // Derived laws of the exclusion rule:
                        CHECK(port == 1 - b1);
                        CHECK(kb.bits[0] == 1 - b3);
                    }
                }
    // The rule keeps exactly the port == 1 - b1 half of the raw table.
    // (The physical conclusive fraction is 1/4, not 1/2, because at V = 1
    // a matched-basis click can never land on that port.)
    CHECK(kept_total == 8);
}

TEST_CASE("referee sift fractions: 1/2 for BB84, 1/4 for SARG04 at V = 1") {
    analysis::SystemParams p = bench_params();
    p.optics.visibility = 1.0;
    p.detector.dark_per_gate = 0.0;

    const auto bb = run_quantum_referee(p, 0.0, 300000, 9001);
    REQUIRE(bb.detections > 500);
    const double bb_frac =
        static_cast<double>(bb.alice_key.bits.size()) / bb.detections;
    CHECK(std::abs(bb_frac - 0.5) < 4.0 * std::sqrt(0.25 / bb.detections));
    // Noiseless matched-basis clicks never disagree.
    CHECK(bb.alice_key.bits == bb.bob_key.bits);

    p.protocol = analysis::Protocol::sarg04;
    const auto sg = run_quantum_referee(p, 0.0, 300000, 9001);
    const double sg_frac =
        static_cast<double>(sg.alice_key.bits.size()) / sg.detections;
    CHECK(std::abs(sg_frac - 0.25) < 4.0 * std::sqrt(0.1875 / sg.detections));
    CHECK(sg.alice_key.bits == sg.bob_key.bits);
}

TEST_CASE("the full session reproduces the referee's quantum phase") {
    SessionConfig cfg;
    cfg.params = bench_params();
    cfg.length_km = 10.0;
    cfg.n_clocks = 300000;
    cfg.seed = 4242;

    const auto referee =
        run_quantum_referee(cfg.params, cfg.length_km, cfg.n_clocks, cfg.seed);
    const PairResult pair = run_pair(cfg);

    CHECK(pair.alice.detections == referee.detections);
    CHECK(pair.alice.sifted_bits == referee.alice_key.bits.size());
    CHECK(pair.bob.sifted_bits == referee.alice_key.bits.size());
}

TEST_CASE("both protocols distill identical verified keys over a pipe") {
    for (const auto protocol : {analysis::Protocol::bb84, analysis::Protocol::sarg04}) {
        SessionConfig cfg;
        cfg.params = bench_params();
        cfg.params.protocol = protocol;
        cfg.length_km = 10.0;
        cfg.n_clocks = 300000;
        cfg.seed = 4242;

        const PairResult pair = run_pair(cfg);
        CHECK(pair.alice.verified);
        CHECK(pair.bob.verified);
        REQUIRE(pair.alice.final_bits > 0);
        CHECK(pair.alice.final_key == pair.bob.final_key);
        CHECK(pair.alice.final_key.size() == pair.alice.final_bits);
        CHECK(pair.alice.sifted_bits == pair.bob.sifted_bits);
        CHECK(pair.alice.leaked_ec_bits == pair.bob.leaked_ec_bits);
        CHECK(pair.alice.qber_estimate == pair.bob.qber_estimate);
        CHECK(pair.alice.qber_estimate < 0.1);
        CHECK(pair.alice.leaked_ec_bits > 0);
    }
}

TEST_CASE("a session with almost no light still completes in lockstep") {
    SessionConfig cfg;
    cfg.params = bench_params();
    cfg.params.mu = 1e-4;  // a handful of detections at most
    cfg.params.detector.dark_per_gate = 0.0;
    cfg.n_clocks = 2000;
    cfg.seed = 3;

    const PairResult pair = run_pair(cfg);
    CHECK(pair.alice.verified);
    CHECK(pair.alice.final_bits == 0);
    CHECK(pair.alice.final_key.empty());
    CHECK(pair.alice.final_key == pair.bob.final_key);
}

namespace {

/// Flips the lowest bit of the first privacy-amplification seed byte
/// that passes through, leaving everything else untouched.
class PaSeedTamper final : public Transport {
  public:
    explicit PaSeedTamper(Transport& inner) : inner_(inner) {}
    void send(const std::uint8_t* data, std::size_t n) override {
        if (!done_ && n > 22 &&
            data[4] == static_cast<std::uint8_t>(FrameType::PA_SEED)) {
            std::vector<std::uint8_t> copy(data, data + n);
            // Flip 16 seed bits: the extractor is linear in the seed, so a
            // single flipped bit only alters the output when its paired key
            // bit is 1; sixteen flips make an unchanged key astronomically
            // unlikely.
            copy[21] ^= 0xffu;
            copy[22] ^= 0xffu;
            done_ = true;
            inner_.send(copy.data(), copy.size());
            return;
        }
        inner_.send(data, n);
    }
    void recv_exact(std::uint8_t* data, std::size_t n) override {
        inner_.recv_exact(data, n);
    }
    void close() noexcept override { inner_.close(); }

  private:
    Transport& inner_;
    bool done_ = false;
};

}  // namespace

TEST_CASE("a corrupted extractor seed aborts both sides at verification") {
    SessionConfig cfg;
    cfg.params = bench_params();
    cfg.n_clocks = 200000;
    cfg.seed = 11;

    InProcPipe pipe;
    PaSeedTamper tampered(pipe.alice_end());

    std::exception_ptr bob_error;
    std::thread bob([&] {
        try {
            (void)run_session(cfg, pipe.bob_end(), Role::bob);
        } catch (...) {
            bob_error = std::current_exception();
        }
    });
    CHECK_THROWS_AS((void)run_session(cfg, tampered, Role::alice), AbortError);
    bob.join();
    REQUIRE(bob_error != nullptr);
    CHECK_THROWS_AS(std::rethrow_exception(bob_error), AbortError);
}

TEST_CASE("run_session validates its configuration") {
    SessionConfig cfg;
    cfg.params = bench_params();
    cfg.n_clocks = 0;
    InProcPipe pipe;
    CHECK_THROWS_AS(run_session(cfg, pipe.alice_end(), Role::alice),
                    std::invalid_argument);
    cfg.n_clocks = 100;
    cfg.length_km = -1.0;
    CHECK_THROWS_AS(run_session(cfg, pipe.alice_end(), Role::alice),
                    std::invalid_argument);
    cfg.length_km = 0.0;
    cfg.cascade.passes = 0;
    CHECK_THROWS_AS(run_session(cfg, pipe.alice_end(), Role::alice),
                    std::invalid_argument);
}
