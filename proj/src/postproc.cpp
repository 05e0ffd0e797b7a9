#include "qkd/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "qkd/errors.hpp"

namespace qkd::postproc {

double binary_entropy(double q) {
    if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("binary_entropy requires q in [0, 1]");
    if (q == 0.0 || q == 1.0) return 0.0;
    return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

double tau1(double q) {
    if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("tau1 requires q in [0, 1]");
    return std::log2(1.0 + 4.0 * q - 4.0 * q * q);
}

double secret_fraction(double q) {
    if (!(q >= 0.0 && q <= 0.5))
        throw std::invalid_argument("secret_fraction requires q in [0, 1/2]");
    const double r = 1.0 - tau1(q) - binary_entropy(q);
    return r > 0.0 ? r : 0.0;
}

double secret_fraction_threshold() {
    static const double threshold = [] {
        double lo = 0.05, hi = 0.25;  // fraction is positive at lo, zero at hi
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (secret_fraction(mid) > 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }();
    return threshold;
}

std::uint64_t final_key_length(std::uint64_t n, double qber, std::uint64_t leaked_ec,
                               std::uint32_t safety_bits) {
    if (!(qber >= 0.0 && qber <= 1.0))
        throw std::invalid_argument("final_key_length requires qber in [0, 1]");
    const double usable = static_cast<double>(n) * (1.0 - tau1(qber)) -
                          static_cast<double>(leaked_ec) - static_cast<double>(safety_bits);
    if (usable <= 0.0) return 0;
    return static_cast<std::uint64_t>(std::floor(usable));
}

std::vector<std::uint32_t> sample_positions(std::size_t key_len, std::size_t sample_size,
                                            Rng& rng) {
    if (sample_size > key_len)
        throw InsufficientDataError("sample_size exceeds key length");
    std::vector<std::uint32_t> idx(key_len);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::size_t i = 0; i < sample_size; ++i) {
        const std::size_t j = i + uniform_below(rng, key_len - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(sample_size);
    std::sort(idx.begin(), idx.end());
    return idx;
}

BitString remove_positions(const BitString& key, const std::vector<std::uint32_t>& sorted) {
    BitString out;
    out.reserve(key.size() - sorted.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (next < sorted.size() && sorted[next] == i) {
            ++next;
            continue;
        }
        out.push_back(key[i]);
    }
    return out;
}

QberEstimate estimate_qber(const BitString& key_a, const BitString& key_b,
                           std::size_t sample_size, Rng& rng) {
    if (key_a.size() != key_b.size())
        throw std::invalid_argument("estimate_qber requires equal-length keys");
    if (sample_size == 0)
        throw std::invalid_argument("sample_size must be positive");
    if (sample_size > key_a.size())
        throw InsufficientDataError("sample_size exceeds key length");

    QberEstimate est;
    est.positions = sample_positions(key_a.size(), sample_size, rng);
    std::size_t mismatches = 0;
    for (std::uint32_t pos : est.positions)
        mismatches += (key_a[pos] ^ key_b[pos]) & 1u;
    est.qber = static_cast<double>(mismatches) / static_cast<double>(sample_size);
    est.key_a = remove_positions(key_a, est.positions);
    est.key_b = remove_positions(key_b, est.positions);
    return est;
}

BitString privacy_amplify(const BitString& key, const PaParams& pa) {
    const std::size_t n = key.size();
    const std::size_t m = pa.out_len;
    if (m > n)
        throw std::invalid_argument("output length exceeds key length");
    if (n == 0) return {};
    if (pa.seed.size() != n + m - 1)
        throw std::invalid_argument("seed must hold key_len + out_len - 1 bits");
    BitString out(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        std::uint8_t acc = 0;
        const std::size_t base = i + n - 1;  // seed index for j = 0
        for (std::size_t j = 0; j < n; ++j)
            acc ^= pa.seed[base - j] & key[j];
        out[i] = acc & 1u;
    }
    return out;
}

std::size_t cascade_block_size(double qber_est, std::size_t n, double k1_coefficient) {
    if (n == 0)
        throw std::invalid_argument("cascade requires a nonempty key");
    if (qber_est <= 0.0) return n;
    const double raw = std::ceil(k1_coefficient / qber_est);
    if (raw >= static_cast<double>(n)) return n;
    return std::max<std::size_t>(1, static_cast<std::size_t>(raw));
}

namespace {

using session::Frame;
using session::FrameType;
using session::PayloadReader;
using session::Transport;

struct ParityRange {
    std::uint8_t pass = 0;
    std::uint32_t start = 0;
    std::uint32_t len = 0;
};

Frame make_parity_request(const std::vector<ParityRange>& ranges) {
    Frame f;
    f.type = FrameType::PARITY_REPLY;
    session::put_u32(f.payload, static_cast<std::uint32_t>(ranges.size()));
    for (const auto& r : ranges) {
        f.payload.push_back(r.pass);
        session::put_u32(f.payload, r.start);
        session::put_u32(f.payload, r.len);
    }
    return f;
}

}  // namespace

std::uint64_t cascade_alice(const BitString& key, double qber_est, session::Transport& t,
                            Rng& rng, const CascadeParams& params) {
    const std::size_t n = key.size();
    if (n == 0) throw std::invalid_argument("cascade requires a nonempty key");
    (void)qber_est;  // block schedule is driven by the peer's requests

    std::uint64_t leaked = 0;
    std::vector<std::vector<std::uint32_t>> perms;
    for (int pass = 0; pass < params.passes; ++pass) {
        const std::uint64_t seed = rng();
        Frame sf;
        sf.type = FrameType::SHUFFLE_SEED;
        sf.payload.push_back(static_cast<std::uint8_t>(pass));
        session::put_u64(sf.payload, seed);
        session::send_frame(t, sf);

        if (pass == 0) {
            std::vector<std::uint32_t> identity(n);
            std::iota(identity.begin(), identity.end(), 0u);
            perms.push_back(std::move(identity));
        } else {
            std::vector<std::uint32_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0u);
            Rng prng(seed);
            for (std::size_t i = n - 1; i > 0; --i)
                std::swap(perm[i], perm[uniform_below(prng, i + 1)]);
            perms.push_back(std::move(perm));
        }

        for (;;) {
            Frame req = session::expect_frame(t, FrameType::PARITY_REPLY);
            PayloadReader r{req.payload};
            const std::uint32_t count = r.u32();
            if (count == 0) break;
            BitString parities(count, 0);
            for (std::uint32_t i = 0; i < count; ++i) {
                const std::uint8_t p = r.u8();
                const std::uint32_t start = r.u32();
                const std::uint32_t len = r.u32();
                if (p > pass || len == 0 ||
                    static_cast<std::size_t>(start) + len > n)
                    throw ProtocolError("parity request out of range");
                std::uint8_t acc = 0;
                const auto& perm = perms[p];
                for (std::uint32_t pos = start; pos < start + len; ++pos)
                    acc ^= key[perm[pos]];
                parities[i] = acc & 1u;
            }
            if (!r.done()) throw ProtocolError("trailing bytes in parity request");
            Frame rep;
            rep.type = FrameType::PARITIES;
            session::put_u32(rep.payload, count);
            const auto packed = pack_bits(parities);
            rep.payload.insert(rep.payload.end(), packed.begin(), packed.end());
            session::send_frame(t, rep);
            leaked += count;
        }
    }
    return leaked;
}

namespace {

/// Correcting-side bookkeeping for one disclosed pass.
struct PassState {
    std::vector<std::uint32_t> perm;    // position -> key index
    std::vector<std::uint32_t> pos_of;  // key index -> position
    std::size_t block_size = 0;
    BitString own_parity;    // per block, kept current as bits flip
    BitString peer_parity;   // per block, as disclosed
};

class CascadeBobRun {
  public:
    CascadeBobRun(const BitString& key, double qber_est, Transport& t,
                  const CascadeParams& params)
        : key_(key), transport_(t), params_(params) {
        k1_ = cascade_block_size(qber_est, key.size(), params.k1_coefficient);
    }

    CascadeBobResult run() {
        const std::size_t n = key_.size();
        for (int pass = 0; pass < params_.passes; ++pass) {
            open_pass(pass, n);
            while (!pending_.empty()) {
                const auto [p, block] = *pending_.begin();
                binary_search_and_flip(p, block);
            }
            session::send_frame(transport_, make_parity_request({}));
        }
        return CascadeBobResult{key_, leaked_};
    }

  private:
    void open_pass(int pass, std::size_t n) {
        Frame sf = session::expect_frame(transport_, FrameType::SHUFFLE_SEED);
        PayloadReader r{sf.payload};
        const std::uint8_t pass_id = r.u8();
        const std::uint64_t seed = r.u64();
        if (pass_id != pass) throw ProtocolError("shuffle seed for wrong pass");

        PassState st;
        st.perm.resize(n);
        std::iota(st.perm.begin(), st.perm.end(), 0u);
        if (pass > 0) {
            Rng prng(seed);
            for (std::size_t i = n - 1; i > 0; --i)
                std::swap(st.perm[i], st.perm[uniform_below(prng, i + 1)]);
        }
        st.pos_of.resize(n);
        for (std::size_t pos = 0; pos < n; ++pos) st.pos_of[st.perm[pos]] = pos;
        st.block_size = std::min(n, k1_ << pass);

        const std::size_t n_blocks = (n + st.block_size - 1) / st.block_size;
        st.own_parity.resize(n_blocks);
        std::vector<ParityRange> ranges(n_blocks);
        for (std::size_t b = 0; b < n_blocks; ++b) {
            const std::uint32_t start = static_cast<std::uint32_t>(b * st.block_size);
            const std::uint32_t len =
                static_cast<std::uint32_t>(std::min(st.block_size, n - start));
            ranges[b] = {static_cast<std::uint8_t>(pass), start, len};
            st.own_parity[b] = range_parity(st.perm, start, len);
        }
        st.peer_parity = request_parities(ranges);
        passes_.push_back(std::move(st));

        for (std::size_t b = 0; b < n_blocks; ++b)
            if (passes_[pass].own_parity[b] != passes_[pass].peer_parity[b])
                pending_.insert({pass, static_cast<std::uint32_t>(b)});
    }

    std::uint8_t range_parity(const std::vector<std::uint32_t>& perm, std::uint32_t start,
                              std::uint32_t len) const {
        std::uint8_t acc = 0;
        for (std::uint32_t pos = start; pos < start + len; ++pos)
            acc ^= key_[perm[pos]];
        return acc & 1u;
    }

    BitString request_parities(const std::vector<ParityRange>& ranges) {
        session::send_frame(transport_, make_parity_request(ranges));
        Frame rep = session::expect_frame(transport_, FrameType::PARITIES);
        PayloadReader r{rep.payload};
        const std::uint32_t count = r.u32();
        if (count != ranges.size()) throw ProtocolError("parity reply count mismatch");
        const auto packed = r.bytes((count + 7) / 8);
        if (!r.done()) throw ProtocolError("trailing bytes in parity reply");
        leaked_ += count;
        return unpack_bits(packed, count);
    }

    /// One disclosed parity for a sub-range, with caching so revisited
    /// ranges cost nothing extra.
    std::uint8_t peer_range_parity(int pass, std::uint32_t start, std::uint32_t len) {
        const auto cache_key = std::make_tuple(pass, start, len);
        if (const auto it = parity_cache_.find(cache_key); it != parity_cache_.end())
            return it->second;
        const BitString got =
            request_parities({{static_cast<std::uint8_t>(pass), start, len}});
        parity_cache_.emplace(cache_key, got[0]);
        return got[0];
    }

    /// Isolates one differing bit inside a parity-mismatched block, flips
    /// it, and re-checks every disclosed block containing that bit.
    void binary_search_and_flip(int pass, std::uint32_t block) {
        PassState& st = passes_[pass];
        std::uint32_t start = static_cast<std::uint32_t>(block * st.block_size);
        std::uint32_t len = static_cast<std::uint32_t>(
            std::min(st.block_size, key_.size() - start));
        while (len > 1) {
            const std::uint32_t len_left = (len + 1) / 2;
            const std::uint8_t peer_left = peer_range_parity(pass, start, len_left);
            const std::uint8_t own_left = range_parity(st.perm, start, len_left);
            if (peer_left != own_left) {
                len = len_left;
            } else {
                start += len_left;
                len -= len_left;
            }
        }
        const std::uint32_t key_index = st.perm[start];
        key_[key_index] ^= 1u;
        for (std::size_t p = 0; p < passes_.size(); ++p) {
            PassState& ps = passes_[p];
            const std::uint32_t b =
                static_cast<std::uint32_t>(ps.pos_of[key_index] / ps.block_size);
            ps.own_parity[b] ^= 1u;
            const auto entry = std::make_pair(static_cast<int>(p), b);
            if (ps.own_parity[b] != ps.peer_parity[b])
                pending_.insert(entry);
            else
                pending_.erase(entry);
        }
    }

    BitString key_;
    Transport& transport_;
    CascadeParams params_;
    std::size_t k1_ = 0;
    std::uint64_t leaked_ = 0;
    std::vector<PassState> passes_;
    std::set<std::pair<int, std::uint32_t>> pending_;  // ordered: earliest pass first
    std::map<std::tuple<int, std::uint32_t, std::uint32_t>, std::uint8_t> parity_cache_;
};

}  // namespace

CascadeBobResult cascade_bob(const BitString& key, double qber_est, session::Transport& t,
                             const CascadeParams& params) {
    if (key.empty()) throw std::invalid_argument("cascade requires a nonempty key");
    return CascadeBobRun(key, qber_est, t, params).run();
}

CascadeResult cascade_correct(const BitString& key_a, const BitString& key_b,
                              double qber_est, session::Transport& alice_side,
                              session::Transport& bob_side, std::uint64_t shuffle_seed,
                              const CascadeParams& params) {
    if (key_a.size() != key_b.size())
        throw std::invalid_argument("cascade requires equal-length keys");

    std::uint64_t leaked_a = 0;
    std::exception_ptr alice_error;
    std::thread alice_thread([&] {
        try {
            Rng rng(shuffle_seed);
            leaked_a = cascade_alice(key_a, qber_est, alice_side, rng, params);
        } catch (...) {
            alice_error = std::current_exception();
            alice_side.close();
        }
    });

    CascadeBobResult bob;
    std::exception_ptr bob_error;
    try {
        bob = cascade_bob(key_b, qber_est, bob_side, params);
    } catch (...) {
        bob_error = std::current_exception();
        bob_side.close();
    }
    alice_thread.join();
    if (bob_error) std::rethrow_exception(bob_error);
    if (alice_error) std::rethrow_exception(alice_error);
    if (leaked_a != bob.leaked_bits)
        throw ProtocolError("leak accounting diverged between the two sides");
    return CascadeResult{std::move(bob.corrected), bob.leaked_bits};
}

CascadeResult cascade_correct(const BitString& key_a, const BitString& key_b,
                              double qber_est, std::uint64_t shuffle_seed,
                              const CascadeParams& params) {
    session::InProcPipe pipe;
    return cascade_correct(key_a, key_b, qber_est, pipe.alice_end(), pipe.bob_end(),
                           shuffle_seed, params);
}

}  // namespace qkd::postproc
