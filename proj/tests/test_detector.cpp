// Gated APD pair: quantum-efficiency thinning, dark counts, after-pulse
// carry-over and the double-click policies.
#include <cmath>

#include <stdexcept>

#include "doctest.h"
#include "qkd/detector.hpp"

using namespace qkd;
using namespace qkd::detector;

TEST_CASE("parameter validation rejects out-of-range values") {
    DetectorParams p;
    p.qe = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.qe = 1.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.qe = 0.1;
    p.dark_per_gate = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.dark_per_gate = 1e-5;
    p.ap_prob = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.ap_prob = 0.0;
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("exponential dark model fits through its anchor points and clamps") {
    const DarkModel m = fit_dark_model(0.05, 6.3e-7, 0.10, 3.3e-6);
    CHECK(dark_model_eval(0.05, m) == doctest::Approx(6.3e-7).epsilon(1e-12));
    CHECK(dark_model_eval(0.10, m) == doctest::Approx(3.3e-6).epsilon(1e-12));
    // Monotone in qe for b > 0, and interpolation stays between anchors.
    CHECK(m.b > 0.0);
    const double mid = dark_model_eval(0.075, m);
    CHECK(mid > 6.3e-7);
    CHECK(mid < 3.3e-6);

    // Extreme extrapolation clamps below 1.
    const DarkModel steep{1e-3, 50.0};
    CHECK(dark_model_eval(1.0, steep) < 1.0);
    CHECK(dark_model_eval(0.0, DarkModel{}) == 0.0);

    CHECK_THROWS_AS(fit_dark_model(0.05, 6.3e-7, 0.05, 3.3e-6), std::invalid_argument);
    CHECK_THROWS_AS(fit_dark_model(0.05, 0.0, 0.10, 3.3e-6), std::invalid_argument);
    CHECK_THROWS_AS(dark_model_eval(-0.1, m), std::invalid_argument);
}

TEST_CASE("a Poisson arrival fires with probability 1 - exp(-mu*qe)") {
    // Poisson(mu) photons, each absorbed with probability qe, is a
    // thinned Poisson(mu*qe); the gate clicks unless zero are absorbed.
    DetectorParams p;
    p.qe = 0.25;
    DetectorState st;
    Rng rng(11);

    const double mu = 0.3;
    const int n = 200000;
    int clicks = 0;
    for (int i = 0; i < n; ++i) {
        const auto c = gate_detect({mu, 0.0}, p, st, rng);
        if (c) {
            CHECK(c->port == 0);  // nothing ever arrives at port 1
            CHECK(c->slot == optics::Timeslot::middle);
            ++clicks;
        }
    }
    const double expected = 1.0 - std::exp(-mu * p.qe);  // 0.0722565
    const double sigma = std::sqrt(expected * (1.0 - expected) / n);
    CHECK(std::abs(static_cast<double>(clicks) / n - expected) < 4.0 * sigma);
}

TEST_CASE("dark counts fire at the configured per-gate rate on both ports") {
    DetectorParams p;
    p.qe = 0.1;
    p.dark_per_gate = 0.01;
    DetectorState st;
    Rng rng(12);

    const int n = 200000;
    int clicks = 0;
    int port1 = 0;
    for (int i = 0; i < n; ++i) {
        const auto c = gate_detect({0.0, 0.0}, p, st, rng);
        if (c) {
            ++clicks;
            port1 += c->port;
        }
    }
    // P(any click) = 1 - (1-d)^2 with the double-click share resolved
    // to one port either way, so the click rate itself stays at
    // 1 - (1-d)^2 under random_port.
    const double expected = 0.01990000000000003;
    const double sigma = std::sqrt(expected * (1.0 - expected) / n);
    CHECK(std::abs(static_cast<double>(clicks) / n - expected) < 4.0 * sigma);
    // Ports are symmetric: the split is binomial(clicks, 1/2).
    const double split_sigma = std::sqrt(0.25 * clicks);
    CHECK(std::abs(port1 - clicks / 2.0) < 4.0 * split_sigma);
}

TEST_CASE("double clicks resolve per policy") {
    // Both ports saturated at qe = 1: every gate avalanches twice.
    DetectorParams p;
    p.qe = 1.0;

    SUBCASE("random_port assigns a fair port") {
        p.policy = DoubleClickPolicy::random_port;
        DetectorState st;
        Rng rng(13);
        const int n = 10000;
        int port1 = 0;
        for (int i = 0; i < n; ++i) {
            const auto c = gate_detect({30.0, 30.0}, p, st, rng);
            REQUIRE(c.has_value());
            port1 += c->port;
        }
        // Chi-squared with one degree of freedom; 6.635 = 1% critical.
        const double expected_half = n / 2.0;
        const double chi2 = (port1 - expected_half) * (port1 - expected_half) / expected_half +
                            ((n - port1) - expected_half) * ((n - port1) - expected_half) /
                                expected_half;
        CHECK(chi2 < 6.635);
    }

    SUBCASE("discard suppresses the click but still arms the after-pulse") {
        p.policy = DoubleClickPolicy::discard;
        DetectorState st;
        Rng rng(14);
        const auto c = gate_detect({30.0, 30.0}, p, st, rng);
        CHECK_FALSE(c.has_value());
        CHECK(st.pending_afterpulse[0]);
        CHECK(st.pending_afterpulse[1]);
    }
}

TEST_CASE("an avalanche arms a one-gate after-pulse opportunity") {
    // Alternate loaded and empty gates: the empty gate can only click
    // through the after-pulse armed by the preceding avalanche, so its
    // click rate measures ap_prob directly.
    DetectorParams p;
    p.qe = 1.0;
    p.ap_prob = 0.25;
    DetectorState st;
    Rng rng(15);

    const int pairs = 50000;
    int loaded_clicks = 0;
    int empty_clicks = 0;
    for (int i = 0; i < pairs; ++i) {
        if (gate_detect({20.0, 0.0}, p, st, rng)) ++loaded_clicks;
        const auto c = gate_detect({0.0, 0.0}, p, st, rng);
        if (c) {
            CHECK(c->port == 0);
            ++empty_clicks;
        }
    }
    CHECK(loaded_clicks == pairs);  // P(zero photons) = e^-20, never seen here
    const double rate = static_cast<double>(empty_clicks) / pairs;
    const double sigma = std::sqrt(0.25 * 0.75 / pairs);
    CHECK(std::abs(rate - 0.25) < 4.0 * sigma);

    // With ap_prob = 0 the empty gate is exactly silent.
    p.ap_prob = 0.0;
    DetectorState st2;
    Rng rng2(16);
    for (int i = 0; i < 1000; ++i) {
        (void)gate_detect({20.0, 0.0}, p, st2, rng2);
        CHECK_FALSE(gate_detect({0.0, 0.0}, p, st2, rng2).has_value());
    }
}
