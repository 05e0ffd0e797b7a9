#include "qkd/detector.hpp"

#include <cmath>
#include <stdexcept>

namespace qkd::detector {

void DetectorParams::validate() const {
    if (!(qe > 0.0 && qe <= 1.0))
        throw std::invalid_argument("qe must lie in (0, 1]");
    if (!(dark_per_gate >= 0.0 && dark_per_gate < 1.0))
        throw std::invalid_argument("dark_per_gate must lie in [0, 1)");
    if (!(ap_prob >= 0.0 && ap_prob < 1.0))
        throw std::invalid_argument("ap_prob must lie in [0, 1)");
}

double dark_model_eval(double qe, const DarkModel& model) {
    if (!(qe >= 0.0 && qe <= 1.0))
        throw std::invalid_argument("qe must lie in [0, 1]");
    const double d = model.a * std::exp(model.b * qe);
    if (d < 0.0) return 0.0;
    if (d >= 1.0) return std::nextafter(1.0, 0.0);
    return d;
}

DarkModel fit_dark_model(double qe1, double dark1, double qe2, double dark2) {
    if (!(dark1 > 0.0) || !(dark2 > 0.0))
        throw std::invalid_argument("dark rates must be positive");
    if (qe1 == qe2)
        throw std::invalid_argument("fit points must have distinct qe");
    DarkModel m;
    m.b = std::log(dark2 / dark1) / (qe2 - qe1);
    m.a = dark1 * std::exp(-m.b * qe1);
    return m;
}

std::optional<Click> gate_detect(const std::array<double, 2>& arrival_mean,
                                 const DetectorParams& params, DetectorState& state,
                                 Rng& rng) {
    std::array<bool, 2> avalanche{false, false};
    for (int j = 0; j < 2; ++j) {
        bool fired = false;
        const int k = optics::sample_photon_count(arrival_mean[j], rng);
        if (k > 0) {
            const double p_absorb = 1.0 - std::pow(1.0 - params.qe, k);
            fired = random_unit(rng) < p_absorb;
        }
        if (!fired && params.dark_per_gate > 0.0)
            fired = random_unit(rng) < params.dark_per_gate;
        if (!fired && state.pending_afterpulse[j] && params.ap_prob > 0.0)
            fired = random_unit(rng) < params.ap_prob;
        avalanche[j] = fired;
    }
    state.pending_afterpulse = avalanche;

    if (avalanche[0] && avalanche[1]) {
        if (params.policy == DoubleClickPolicy::discard) return std::nullopt;
        return Click{static_cast<std::uint8_t>(random_bit(rng) ? 1 : 0),
                     optics::Timeslot::middle};
    }
    if (avalanche[0]) return Click{0, optics::Timeslot::middle};
    if (avalanche[1]) return Click{1, optics::Timeslot::middle};
    return std::nullopt;
}

}  // namespace qkd::detector
