#pragma once

#include <array>
#include <cstdint>

#include "qkd/random.hpp"

namespace qkd::optics {

/// Interferometer quality. Visibility must lie in [0, 1].
struct OpticsParams {
    double visibility = 0.98;

    /// Extinction ratio e = (1 - V) / (1 + V).
    double extinction_ratio() const { return (1.0 - visibility) / (1.0 + visibility); }

    /// Baseline error rate of the optics alone: e / (1 + e) = (1 - V) / 2.
    double qber_opt() const { return (1.0 - visibility) / 2.0; }

    void validate() const;
};

/// One attenuated double pulse leaving the transmitter.
struct EncodedPulse {
    std::uint64_t clock_index = 0;
    double phase_a = 0.0;       ///< relative phase, one of {0, pi/2, pi, 3pi/2}
    double mean_photons = 0.0;  ///< Poisson mean for the whole pulse
};

enum class Timeslot : std::uint8_t { early = 0, middle = 1, late = 2 };

/// Joint probability of a single photon landing in (timeslot, port).
/// Only the middle slot interferes; the outer slots carry 1/8 each.
struct TimeslotDistribution {
    std::array<std::array<double, 2>, 3> p{};  // [timeslot][port]

    double at(Timeslot slot, int port) const {
        return p[static_cast<std::size_t>(slot)][static_cast<std::size_t>(port)];
    }
};

/// Phase for data bit b1 and basis bit b2: b1*pi + b2*pi/2.
EncodedPulse encode_pulse(bool b1, bool b2, double mean_photons, std::uint64_t clock_index);

/// Receiver phase for basis bit b3: b3*pi/2.
double bob_phase(bool b3);

/// Single-photon arrival distribution for transmitter phase `phase_a`
/// and receiver phase `phase_b`. Cells sum to 1; middle-slot cells are
/// (1 +- V cos(dphi)) / 4.
TimeslotDistribution detection_distribution(double phase_a, double phase_b,
                                            const OpticsParams& optics);

/// Poisson photon-count draw. Consumes exactly one engine value.
int sample_photon_count(double mean, Rng& rng);

}  // namespace qkd::optics
