#pragma once

#include <cstdint>

#include "qkd/channel.hpp"
#include "qkd/detector.hpp"
#include "qkd/optics.hpp"

namespace qkd::analysis {

enum class Protocol : std::uint8_t { bb84 = 0, sarg04 = 1 };

/// How the optical error weight of the QBER model is assembled: a single
/// lumped figure, or interference error plus the after-pulse share.
enum class QberMode : std::uint8_t { lumped = 0, decomposed = 1 };

/// Full parameterization of one link: source, channel law, receiver,
/// and the knobs the rate models and sessions share.
struct SystemParams {
    double clock_hz = 1e6;
    double mu = 0.1;             ///< mean photons per double pulse
    double alice_loss_db = 3.0;  ///< sender apparatus loss
    detector::DetectorParams detector{};
    optics::OpticsParams optics{};
    double alpha_db_per_km = 0.205;
    Protocol protocol = Protocol::bb84;
    double f_ec = 1.2;  ///< error-correction inefficiency vs Shannon
    QberMode qber_mode = QberMode::lumped;

    void validate() const;
    /// Combined middle-slot and sifting yield: 1/4 (bb84), 1/8 (sarg04).
    double sift_factor() const;
    /// Optical error weight of the QBER model; decomposed mode adds the
    /// after-pulse share ap/4.
    double qber_optical() const;
    /// Mean photons per pulse after sender loss and L km of fiber.
    double mu_effective(double length_km) const;
};

struct RatePoint {
    double length_km = 0.0;
    double r_sift = 0.0;   ///< bits/s
    double r_error = 0.0;  ///< bits/s, r_sift * qber
    double qber = 0.0;
    double r_final = 0.0;  ///< bits/s
};

/// Sifted-rate split into its two sources, in bits/s.
struct SiftedRate {
    double signal = 0.0;
    double dark = 0.0;
    double total() const { return signal + dark; }
};

/// signal = clock_hz * mu * 10^(-loss/10) * qe * sift_factor * T(L),
/// dark = clock_hz * d (two gates x 1/2 sifting survival).
SiftedRate sifted_rate_model(const SystemParams& p, double length_km);

/// (q_opt * signal + dark/2) / (signal + dark). Throws std::domain_error
/// when the total rate is zero.
double qber_model(const SystemParams& p, double length_km);

/// r_sift * max(0, 1 - tau1(q) - f_ec * h(q)).
double final_rate_model(const SystemParams& p, double length_km);

/// All model figures for one fiber length.
RatePoint rate_point(const SystemParams& p, double length_km);

/// Smallest L where the ideal-reconciliation (f_ec = 1) final rate
/// reaches zero, bisected to sub-meter precision. Returns +infinity
/// when the rate never dies (no dark floor); throws std::domain_error
/// when it is already zero at L = 0.
double distance_limit(const SystemParams& p);

/// Solves the QBER model for the per-gate dark probability that makes
/// QBER(L_ref) equal qber_ref at the given detector efficiency.
/// Requires q_opt < qber_ref < 1/2.
double calibrate_dark(const SystemParams& p, double qe, double length_ref_km,
                      double qber_ref);

/// Dark probability that places the ideal-reconciliation distance limit
/// exactly at limit_km for the given efficiency: the QBER there must sit
/// on the secret-fraction threshold.
double dark_from_limit(const SystemParams& p, double qe, double limit_km);

/// Exponential dark-vs-efficiency interpolation through the two
/// calibration points (qe = 5% and 10%).
detector::DarkModel build_dark_curve(double dark_at_5, double dark_at_10);

/// Counters from a simulated quantum exchange (no classical protocol).
struct McCounts {
    std::uint64_t n_clocks = 0;
    std::uint64_t detections = 0;  ///< middle-slot clicks
    std::uint64_t sifted = 0;
    std::uint64_t errors = 0;  ///< disagreements between the sifted keys
};

/// Runs emit -> fiber -> detect -> sift for n_clocks and counts.
McCounts simulate_quantum_run(const SystemParams& p, double length_km,
                              std::uint64_t n_clocks, std::uint64_t seed);

/// Monte-Carlo vs closed-form comparison at one operating point.
struct McReport {
    McCounts counts;
    double mc_sifted_per_clock = 0.0;
    double model_sifted_per_clock = 0.0;
    double z_rate = 0.0;
    double mc_qber = 0.0;
    double model_qber = 0.0;
    double z_qber = 0.0;
    bool low_stats = false;  ///< expected sifted count under 1000
};

McReport mc_vs_model(const SystemParams& p, double length_km, std::uint64_t n_clocks,
                     std::uint64_t seed);

}  // namespace qkd::analysis
