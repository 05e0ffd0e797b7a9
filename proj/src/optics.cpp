#include "qkd/optics.hpp"

#include <cmath>
#include <stdexcept>

namespace qkd::optics {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;

// The modulators only produce quarter-turn phases, so phase differences
// land on multiples of pi/2 up to rounding. Snapping to the exact
// {1, 0, -1, 0} grid keeps matched-basis outcomes deterministic and the
// port-swap symmetry exact; anything genuinely off-grid falls back to
// std::cos.
double quarter_cos(double phase) {
    const double q = phase / kHalfPi;
    const double qi = std::nearbyint(q);
    if (std::abs(phase - qi * kHalfPi) <= 1e-9) {
        const long long k = static_cast<long long>(qi);
        switch (((k % 4) + 4) % 4) {
            case 0: return 1.0;
            case 1: return 0.0;
            case 2: return -1.0;
            default: return 0.0;
        }
    }
    return std::cos(phase);
}

}  // namespace

void OpticsParams::validate() const {
    if (!(visibility >= 0.0 && visibility <= 1.0))
        throw std::invalid_argument("visibility must lie in [0, 1]");
}

EncodedPulse encode_pulse(bool b1, bool b2, double mean_photons, std::uint64_t clock_index) {
    if (!(mean_photons >= 0.0))
        throw std::invalid_argument("mean_photons must be nonnegative");
    EncodedPulse pulse;
    pulse.clock_index = clock_index;
    pulse.phase_a = (b1 ? kPi : 0.0) + (b2 ? kHalfPi : 0.0);
    pulse.mean_photons = mean_photons;
    return pulse;
}

double bob_phase(bool b3) {
    return b3 ? kHalfPi : 0.0;
}

TimeslotDistribution detection_distribution(double phase_a, double phase_b,
                                            const OpticsParams& optics) {
    const double c = optics.visibility * quarter_cos(phase_a - phase_b);
    TimeslotDistribution d;
    d.p[0][0] = 0.125;
    d.p[0][1] = 0.125;
    d.p[1][0] = (1.0 + c) / 4.0;
    d.p[1][1] = (1.0 - c) / 4.0;
    d.p[2][0] = 0.125;
    d.p[2][1] = 0.125;
    return d;
}

int sample_photon_count(double mean, Rng& rng) {
    if (!(mean >= 0.0))
        throw std::invalid_argument("mean must be nonnegative");
    // CDF inversion on a single uniform draw. Means here are O(0.1), so
    // the walk terminates after a couple of steps.
    const double u = random_unit(rng);
    double term = std::exp(-mean);
    double cum = term;
    int k = 0;
    while (u >= cum && k < 1024) {
        ++k;
        term *= mean / k;
        cum += term;
    }
    return k;
}

}  // namespace qkd::optics
