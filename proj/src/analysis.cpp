#include "qkd/analysis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qkd/postproc.hpp"
#include "qkd/session.hpp"

namespace qkd::analysis {

void SystemParams::validate() const {
    if (!(clock_hz > 0.0))
        throw std::invalid_argument("clock_hz must be positive");
    if (!(mu >= 0.0))
        throw std::invalid_argument("mu must be nonnegative");
    if (!(alice_loss_db >= 0.0))
        throw std::invalid_argument("alice_loss_db must be nonnegative");
    if (!(alpha_db_per_km > 0.0))
        throw std::invalid_argument("alpha_db_per_km must be positive");
    if (!(f_ec >= 0.0))
        throw std::invalid_argument("f_ec must be nonnegative");
    detector.validate();
    optics.validate();
}

double SystemParams::sift_factor() const {
    return protocol == Protocol::bb84 ? 0.25 : 0.125;
}

double SystemParams::qber_optical() const {
    double q = optics.qber_opt();
    if (qber_mode == QberMode::decomposed) q += detector.ap_prob / 4.0;
    return q;
}

double SystemParams::mu_effective(double length_km) const {
    return mu * channel::db_to_fraction(alice_loss_db) *
           channel::transmittance(length_km, alpha_db_per_km);
}

SiftedRate sifted_rate_model(const SystemParams& p, double length_km) {
    p.validate();
    const double signal_per_clock = p.mu_effective(length_km) * p.detector.qe * p.sift_factor();
    // Two gated detectors, each firing darkly with probability d, and
    // half of those dark clicks survive sifting: 2 * 1/2 * d.
    const double dark_per_clock = p.detector.dark_per_gate;
    return SiftedRate{p.clock_hz * signal_per_clock, p.clock_hz * dark_per_clock};
}

double qber_model(const SystemParams& p, double length_km) {
    const SiftedRate r = sifted_rate_model(p, length_km);
    const double total = r.total();
    if (!(total > 0.0))
        throw std::domain_error("QBER undefined at zero sifted rate");
    return (p.qber_optical() * r.signal + 0.5 * r.dark) / total;
}

double final_rate_model(const SystemParams& p, double length_km) {
    const SiftedRate r = sifted_rate_model(p, length_km);
    const double total = r.total();
    if (total <= 0.0) return 0.0;
    const double q = (p.qber_optical() * r.signal + 0.5 * r.dark) / total;
    const double fraction =
        1.0 - postproc::tau1(q) - p.f_ec * postproc::binary_entropy(q);
    return fraction > 0.0 ? total * fraction : 0.0;
}

RatePoint rate_point(const SystemParams& p, double length_km) {
    RatePoint pt;
    pt.length_km = length_km;
    const SiftedRate r = sifted_rate_model(p, length_km);
    pt.r_sift = r.total();
    pt.qber = pt.r_sift > 0.0 ? qber_model(p, length_km) : 0.0;
    pt.r_error = pt.qber * pt.r_sift;
    pt.r_final = final_rate_model(p, length_km);
    return pt;
}

double distance_limit(const SystemParams& p) {
    SystemParams ideal = p;
    ideal.f_ec = 1.0;  // quoted limits assume reconciliation at the Shannon bound
    if (!(final_rate_model(ideal, 0.0) > 0.0))
        throw std::domain_error("final rate is already zero at L = 0");
    // Only the dark floor makes the QBER grow with length; without it the
    // secret fraction is length-independent and the rate never dies (the
    // doubling search below would instead stop where the rate underflows).
    if (ideal.detector.dark_per_gate == 0.0)
        return std::numeric_limits<double>::infinity();

    double lo = 0.0, hi = 1.0;
    while (final_rate_model(ideal, hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) return std::numeric_limits<double>::infinity();
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (final_rate_model(ideal, mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double calibrate_dark(const SystemParams& p, double qe, double length_ref_km,
                      double qber_ref) {
    SystemParams at_qe = p;
    at_qe.detector.qe = qe;
    at_qe.validate();
    const double q_opt = at_qe.qber_optical();
    if (!(qber_ref > q_opt) || !(qber_ref < 0.5))
        throw std::domain_error(
            "reference QBER must lie between the optical floor and 1/2");
    const double signal_per_clock =
        at_qe.mu_effective(length_ref_km) * qe * at_qe.sift_factor();
    return signal_per_clock * (qber_ref - q_opt) / (0.5 - qber_ref);
}

double dark_from_limit(const SystemParams& p, double qe, double limit_km) {
    // At the distance limit the QBER sits exactly on the secret-fraction
    // zero crossing, which turns the limit into a calibration anchor.
    return calibrate_dark(p, qe, limit_km, postproc::secret_fraction_threshold());
}

detector::DarkModel build_dark_curve(double dark_at_5, double dark_at_10) {
    return detector::fit_dark_model(0.05, dark_at_5, 0.10, dark_at_10);
}

McCounts simulate_quantum_run(const SystemParams& p, double length_km,
                              std::uint64_t n_clocks, std::uint64_t seed) {
    const auto run = session::run_quantum_referee(p, length_km, n_clocks, seed);
    McCounts counts;
    counts.n_clocks = n_clocks;
    counts.detections = run.detections;
    counts.sifted = run.alice_key.bits.size();
    for (std::size_t i = 0; i < run.alice_key.bits.size(); ++i)
        counts.errors += (run.alice_key.bits[i] ^ run.bob_key.bits[i]) & 1u;
    return counts;
}

McReport mc_vs_model(const SystemParams& p, double length_km, std::uint64_t n_clocks,
                     std::uint64_t seed) {
    McReport report;
    report.counts = simulate_quantum_run(p, length_km, n_clocks, seed);

    const SiftedRate model = sifted_rate_model(p, length_km);
    report.model_sifted_per_clock = std::min(1.0, model.total() / p.clock_hz);
    report.mc_sifted_per_clock =
        n_clocks > 0
            ? static_cast<double>(report.counts.sifted) / static_cast<double>(n_clocks)
            : 0.0;

    const double expected = report.model_sifted_per_clock * static_cast<double>(n_clocks);
    report.low_stats = expected < 1000.0;
    const double var_n = expected * (1.0 - report.model_sifted_per_clock);
    if (var_n > 0.0)
        report.z_rate =
            (static_cast<double>(report.counts.sifted) - expected) / std::sqrt(var_n);
    else
        report.z_rate = report.counts.sifted == 0 ? 0.0
                                                  : std::numeric_limits<double>::infinity();

    report.model_qber = model.total() > 0.0 ? qber_model(p, length_km) : 0.0;
    report.mc_qber = report.counts.sifted > 0
                         ? static_cast<double>(report.counts.errors) /
                               static_cast<double>(report.counts.sifted)
                         : 0.0;
    if (report.counts.sifted == 0) {
        report.low_stats = true;
        report.z_qber = 0.0;
        return report;
    }
    const double var_q = report.model_qber * (1.0 - report.model_qber) /
                         static_cast<double>(report.counts.sifted);
    if (var_q > 0.0)
        report.z_qber = (report.mc_qber - report.model_qber) / std::sqrt(var_q);
    else
        report.z_qber = report.mc_qber == report.model_qber
                            ? 0.0
                            : std::numeric_limits<double>::infinity();
    return report;
}

}  // namespace qkd::analysis
