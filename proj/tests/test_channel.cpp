// Fiber-span model: exponential power law and phase-preserving
// propagation.
#include <stdexcept>

#include "doctest.h"
#include "qkd/channel.hpp"

using namespace qkd;
using namespace qkd::channel;

TEST_CASE("transmittance follows the decibel power law") {
    CHECK(transmittance(0.0, 0.205) == 1.0);
    // 100 km at 0.205 dB/km = 20.5 dB = 10^-2.05
    CHECK(transmittance(100.0, 0.205) ==
          doctest::Approx(0.008912509381337459).epsilon(1e-12));
    // Losses in dB add, so transmittances multiply.
    CHECK(transmittance(75.0, 0.205) ==
          doctest::Approx(transmittance(30.0, 0.205) * transmittance(45.0, 0.205))
              .epsilon(1e-12));

    CHECK_THROWS_AS(transmittance(-1.0, 0.205), std::invalid_argument);
    CHECK_THROWS_AS(transmittance(10.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(transmittance(10.0, -0.2), std::invalid_argument);
}

TEST_CASE("db_to_fraction anchors") {
    CHECK(db_to_fraction(0.0) == 1.0);
    CHECK(db_to_fraction(10.0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(db_to_fraction(3.0) == doctest::Approx(0.5011872336272722).epsilon(1e-14));
}

TEST_CASE("propagation scales the Poisson mean and nothing else") {
    const auto pulse = optics::encode_pulse(true, true, 0.1, 4242);
    ChannelParams ch;
    ch.length_km = 50.0;
    ch.alpha_db_per_km = 0.2;

    const auto out = propagate(pulse, ch);
    CHECK(out.phase_a == pulse.phase_a);
    CHECK(out.clock_index == pulse.clock_index);
    CHECK(out.mean_photons == doctest::Approx(0.1 * transmittance(50.0, 0.2)));

    ch.length_km = 0.0;
    const auto same = propagate(pulse, ch);
    CHECK(same.mean_photons == pulse.mean_photons);

    ch.length_km = -5.0;
    CHECK_THROWS_AS(propagate(pulse, ch), std::invalid_argument);
}
