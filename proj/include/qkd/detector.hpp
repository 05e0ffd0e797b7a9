#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "qkd/optics.hpp"
#include "qkd/random.hpp"

namespace qkd::detector {

enum class DoubleClickPolicy : std::uint8_t { random_port = 0, discard = 1 };

/// Exponential dark-count model d(qe) = a * exp(b * qe), clamped to [0, 1).
struct DarkModel {
    double a = 0.0;
    double b = 0.0;
};

/// Gated APD pair. dark_per_gate and ap_prob are per gate per detector.
struct DetectorParams {
    double qe = 0.1;
    double dark_per_gate = 0.0;
    double ap_prob = 0.0;
    DarkModel dark_model{};
    DoubleClickPolicy policy = DoubleClickPolicy::random_port;

    void validate() const;
};

/// Carry-over state between gates: an avalanche in either detector arms
/// an after-pulse opportunity for the following gate only.
struct DetectorState {
    std::array<bool, 2> pending_afterpulse{false, false};
};

/// A registered click. Only middle-slot arrivals are gated, so the slot
/// is always the middle one.
struct Click {
    std::uint8_t port = 0;
    optics::Timeslot slot = optics::Timeslot::middle;
};

double dark_model_eval(double qe, const DarkModel& model);

/// Fits (a, b) through two measured (qe, dark) points, qe1 != qe2, darks > 0.
DarkModel fit_dark_model(double qe1, double dark1, double qe2, double dark2);

/// One gate. `arrival_mean` is the per-port mean photon number presented
/// inside the gate; photon counts are drawn here. A detector avalanches
/// if any photon is absorbed (prob 1-(1-qe)^k), a dark count fires, or a
/// pending after-pulse fires. Both-detector avalanches resolve per the
/// double-click policy. All avalanches re-arm the after-pulse flags,
/// whether or not a click is reported.
std::optional<Click> gate_detect(const std::array<double, 2>& arrival_mean,
                                 const DetectorParams& params, DetectorState& state,
                                 Rng& rng);

}  // namespace qkd::detector
