#pragma once

#include <cmath>
#include <stdexcept>

#include "qkd/optics.hpp"

namespace qkd::channel {

/// Fiber span. Attenuation is the effective value including dispersion
/// penalties, not the bare material loss.
struct ChannelParams {
    double length_km = 0.0;
    double alpha_db_per_km = 0.205;

    void validate() const {
        if (!(length_km >= 0.0))
            throw std::invalid_argument("length_km must be nonnegative");
        if (!(alpha_db_per_km > 0.0))
            throw std::invalid_argument("alpha_db_per_km must be positive");
    }
};

/// Power transmittance 10^(-alpha*L/10).
inline double transmittance(double length_km, double alpha_db_per_km) {
    if (!(length_km >= 0.0))
        throw std::invalid_argument("length_km must be nonnegative");
    if (!(alpha_db_per_km > 0.0))
        throw std::invalid_argument("alpha_db_per_km must be positive");
    return std::pow(10.0, -alpha_db_per_km * length_km / 10.0);
}

/// dB loss to linear fraction.
inline double db_to_fraction(double loss_db) {
    return std::pow(10.0, -loss_db / 10.0);
}

/// Phase-preserving propagation: scales the Poisson mean, nothing else.
inline optics::EncodedPulse propagate(const optics::EncodedPulse& pulse,
                                      const ChannelParams& ch) {
    ch.validate();
    optics::EncodedPulse out = pulse;
    out.mean_photons = pulse.mean_photons * transmittance(ch.length_km, ch.alpha_db_per_km);
    return out;
}

}  // namespace qkd::channel
