#include "qkd/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string_view>
#include <thread>
#include <vector>

#include "qkd/errors.hpp"
#include "qkd/transport.hpp"

namespace qkd::cli {
namespace {

// Stock calibration references for the shipped detector pair: the 5%
// efficiency point is pinned by a 6% QBER measured over 100 km, the 10%
// point by its 98 km distance limit.
constexpr double kRefQeLow = 0.05;
constexpr double kRefQberLow = 0.06;
constexpr double kRefLengthLowKm = 100.0;
constexpr double kRefQeHigh = 0.10;
constexpr double kRefLimitHighKm = 98.0;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail_line(int lineno, const std::string& what) {
    throw ConfigError("line " + std::to_string(lineno) + ": " + what);
}

double parse_double(std::string_view v, int lineno, std::string_view key) {
    double out = 0.0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || end != v.data() + v.size())
        fail_line(lineno, std::string(key) + " expects a number");
    return out;
}

std::uint64_t parse_u64(std::string_view v, int lineno, std::string_view key) {
    std::uint64_t out = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || end != v.data() + v.size())
        fail_line(lineno, std::string(key) + " expects an unsigned integer");
    return out;
}

std::uint16_t parse_port(std::string_view v, int lineno) {
    const std::uint64_t raw = parse_u64(v, lineno, "port");
    if (raw < 1 || raw > 65535) fail_line(lineno, "port must lie in 1..65535");
    return static_cast<std::uint16_t>(raw);
}

std::vector<std::string_view> split(std::string_view v, char sep) {
    std::vector<std::string_view> parts;
    while (true) {
        const auto pos = v.find(sep);
        if (pos == std::string_view::npos) {
            parts.push_back(v);
            return parts;
        }
        parts.push_back(v.substr(0, pos));
        v.remove_prefix(pos + 1);
    }
}

std::string fmt(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;  // 32 bytes always suffice for the shortest representation
    return std::string(buf, end);
}

void apply_key(RunConfig& cfg, std::string_view key, std::string_view value, int lineno,
               bool& dark_given, bool& dark_model_given) {
    auto num = [&] { return parse_double(value, lineno, key); };
    if (key == "clock_hz") {
        cfg.params.clock_hz = num();
        if (!(cfg.params.clock_hz > 0.0)) fail_line(lineno, "clock_hz must be positive");
    } else if (key == "mu") {
        cfg.params.mu = num();
        if (!(cfg.params.mu >= 0.0)) fail_line(lineno, "mu must be nonnegative");
    } else if (key == "alice_loss_db") {
        cfg.params.alice_loss_db = num();
        if (!(cfg.params.alice_loss_db >= 0.0))
            fail_line(lineno, "alice_loss_db must be nonnegative");
    } else if (key == "qe") {
        cfg.params.detector.qe = num();
        if (!(cfg.params.detector.qe > 0.0 && cfg.params.detector.qe <= 1.0))
            fail_line(lineno, "qe must lie in (0, 1]");
    } else if (key == "dark_per_gate") {
        cfg.params.detector.dark_per_gate = num();
        if (!(cfg.params.detector.dark_per_gate >= 0.0 &&
              cfg.params.detector.dark_per_gate < 1.0))
            fail_line(lineno, "dark_per_gate must lie in [0, 1)");
        dark_given = true;
    } else if (key == "ap_prob") {
        cfg.params.detector.ap_prob = num();
        if (!(cfg.params.detector.ap_prob >= 0.0 && cfg.params.detector.ap_prob < 1.0))
            fail_line(lineno, "ap_prob must lie in [0, 1)");
    } else if (key == "dark_a") {
        cfg.params.detector.dark_model.a = num();
        if (!(cfg.params.detector.dark_model.a >= 0.0))
            fail_line(lineno, "dark_a must be nonnegative");
        dark_model_given = true;
    } else if (key == "dark_b") {
        cfg.params.detector.dark_model.b = num();
        dark_model_given = true;
    } else if (key == "double_click_policy") {
        if (value == "random_port")
            cfg.params.detector.policy = detector::DoubleClickPolicy::random_port;
        else if (value == "discard")
            cfg.params.detector.policy = detector::DoubleClickPolicy::discard;
        else
            fail_line(lineno, "double_click_policy must be random_port or discard");
    } else if (key == "visibility") {
        cfg.params.optics.visibility = num();
        if (!(cfg.params.optics.visibility >= 0.0 && cfg.params.optics.visibility <= 1.0))
            fail_line(lineno, "visibility must lie in [0, 1]");
    } else if (key == "alpha_db_per_km") {
        cfg.params.alpha_db_per_km = num();
        if (!(cfg.params.alpha_db_per_km > 0.0))
            fail_line(lineno, "alpha_db_per_km must be positive");
    } else if (key == "protocol") {
        if (value == "bb84")
            cfg.params.protocol = analysis::Protocol::bb84;
        else if (value == "sarg04")
            cfg.params.protocol = analysis::Protocol::sarg04;
        else
            fail_line(lineno, "protocol must be bb84 or sarg04");
    } else if (key == "f_ec") {
        cfg.params.f_ec = num();
        if (!(cfg.params.f_ec >= 0.0)) fail_line(lineno, "f_ec must be nonnegative");
    } else if (key == "qber_mode") {
        if (value == "lumped")
            cfg.params.qber_mode = analysis::QberMode::lumped;
        else if (value == "decomposed")
            cfg.params.qber_mode = analysis::QberMode::decomposed;
        else
            fail_line(lineno, "qber_mode must be lumped or decomposed");
    } else if (key == "length_km") {
        cfg.length_km = num();
        if (!(cfg.length_km >= 0.0)) fail_line(lineno, "length_km must be nonnegative");
    } else if (key == "sweep") {
        const auto parts = split(value, ',');
        if (parts.size() != 3) fail_line(lineno, "sweep expects start,end,step");
        cfg.sweep_start_km = parse_double(trim(parts[0]), lineno, "sweep start");
        cfg.sweep_end_km = parse_double(trim(parts[1]), lineno, "sweep end");
        cfg.sweep_step_km = parse_double(trim(parts[2]), lineno, "sweep step");
        if (!(cfg.sweep_start_km >= 0.0)) fail_line(lineno, "sweep start must be nonnegative");
        if (!(cfg.sweep_end_km >= cfg.sweep_start_km))
            fail_line(lineno, "sweep end must not precede start");
        if (!(cfg.sweep_step_km > 0.0)) fail_line(lineno, "sweep step must be positive");
    } else if (key == "n_clocks") {
        cfg.n_clocks = parse_u64(value, lineno, key);
    } else if (key == "seed") {
        cfg.seed = parse_u64(value, lineno, key);
    } else if (key == "safety_bits") {
        const std::uint64_t raw = parse_u64(value, lineno, key);
        if (raw > 0xffffffffull) fail_line(lineno, "safety_bits out of range");
        cfg.safety_bits = static_cast<std::uint32_t>(raw);
    } else if (key == "transport") {
        if (value == "inproc") {
            cfg.transport = TransportMode::inproc;
        } else if (value.starts_with("listen:")) {
            cfg.transport = TransportMode::listen;
            cfg.port = parse_port(value.substr(7), lineno);
        } else if (value.starts_with("connect:")) {
            cfg.transport = TransportMode::connect;
            const auto rest = value.substr(8);
            const auto colon = rest.rfind(':');
            if (colon == std::string_view::npos || colon == 0)
                fail_line(lineno, "connect expects host:port");
            cfg.host = std::string(rest.substr(0, colon));
            cfg.port = parse_port(rest.substr(colon + 1), lineno);
        } else {
            fail_line(lineno, "transport must be inproc, listen:<port> or connect:<host:port>");
        }
    } else if (key == "output_path") {
        cfg.output_path = std::string(value);
    } else {
        fail_line(lineno, "unknown key '" + std::string(key) + "'");
    }
}

session::SessionConfig to_session_config(const RunConfig& cfg) {
    session::SessionConfig s;
    s.params = cfg.params;
    s.length_km = cfg.length_km;
    s.n_clocks = cfg.n_clocks;
    s.seed = cfg.seed;
    s.safety_bits = cfg.safety_bits;
    return s;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open output path: " + path);
    out << text;
    out.flush();
    if (!out) throw ConfigError("cannot write output path: " + path);
}

int cmd_sweep(const RunConfig& cfg) {
    const std::string csv = format_sweep_csv(cfg);
    if (cfg.output_path.empty())
        std::cout << csv;
    else
        write_text_file(cfg.output_path, csv);
    return 0;
}

int cmd_session(const RunConfig& cfg) {
    const session::SessionResult res = run_two_party(cfg);
    std::cout << "sifted_bits=" << res.sifted_bits << '\n'
              << "qber=" << fmt(res.qber_estimate) << '\n'
              << "leaked_ec=" << res.leaked_ec_bits << '\n'
              << "final_bits=" << res.final_bits << '\n'
              << "elapsed_s=" << fmt(res.elapsed_s) << '\n';
    // Fail closed: the key only ever reaches disk after verification.
    if (!cfg.output_path.empty() && res.verified)
        write_text_file(cfg.output_path, bits_to_hex(res.final_key) + "\n");
    return 0;
}

int cmd_calibrate(const RunConfig& cfg) {
    const double dark_low =
        analysis::calibrate_dark(cfg.params, kRefQeLow, kRefLengthLowKm, kRefQberLow);
    const double dark_high =
        analysis::dark_from_limit(cfg.params, kRefQeHigh, kRefLimitHighKm);
    const auto model = analysis::build_dark_curve(dark_low, dark_high);

    analysis::SystemParams low = cfg.params;
    low.detector.qe = kRefQeLow;
    low.detector.dark_per_gate = dark_low;
    analysis::SystemParams high_tenth = cfg.params;
    high_tenth.detector.qe = kRefQeHigh;
    high_tenth.detector.dark_per_gate = dark_high / 10.0;

    std::cout << "dark_qe5=" << fmt(dark_low) << '\n'
              << "dark_qe10=" << fmt(dark_high) << '\n'
              << "dark_ratio=" << fmt(dark_high / dark_low) << '\n'
              << "model_a=" << fmt(model.a) << '\n'
              << "model_b=" << fmt(model.b) << '\n'
              << "limit_qe5_km=" << fmt(analysis::distance_limit(low)) << '\n'
              << "limit_qe10_tenth_km=" << fmt(analysis::distance_limit(high_tenth))
              << '\n';
    return 0;
}

int cmd_analyze(const RunConfig& cfg) {
    std::cout << "qber_threshold=" << fmt(postproc::secret_fraction_threshold()) << '\n'
              << "distance_limit_km=" << fmt(analysis::distance_limit(cfg.params))
              << '\n';
    return 0;
}

void usage(std::ostream& out) {
    out << "usage: qkdsim <sweep|session|calibrate|analyze> <config-file>\n";
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::set<std::string, std::less<>> seen;
    bool dark_given = false;
    bool dark_model_given = false;

    int lineno = 0;
    std::istringstream lines(text);
    for (std::string raw; std::getline(lines, raw);) {
        ++lineno;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail_line(lineno, "expected key=value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) fail_line(lineno, "missing key");
        if (!seen.emplace(key).second)
            fail_line(lineno, "duplicate key '" + std::string(key) + "'");
        apply_key(cfg, key, value, lineno, dark_given, dark_model_given);
    }

    // The exponential dark model fills in the per-gate rate when no
    // explicit figure is configured.
    if (!dark_given && dark_model_given)
        cfg.params.detector.dark_per_gate =
            detector::dark_model_eval(cfg.params.detector.qe, cfg.params.detector.dark_model);

    try {
        cfg.params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    RunConfig cfg = parse_config(buf.str());

    if (const char* env_seed = std::getenv("QKD_SEED")) {
        const std::string_view v(env_seed);
        std::uint64_t out = 0;
        const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || end != v.data() + v.size() || v.empty())
            throw ConfigError("QKD_SEED must be an unsigned integer");
        cfg.seed = out;
    }
    return cfg;
}

std::string format_sweep_csv(const RunConfig& cfg) {
    const double span = cfg.sweep_end_km - cfg.sweep_start_km;
    const auto rows = static_cast<std::uint64_t>(span / cfg.sweep_step_km + 1e-9) + 1;

    std::string csv =
        "length_km,model_sifted_bps,model_qber,model_final_bps,"
        "mc_sifted_bps,mc_qber,mc_final_bps\n";
    for (std::uint64_t i = 0; i < rows; ++i) {
        const double length = cfg.sweep_start_km + static_cast<double>(i) * cfg.sweep_step_km;
        const auto model = analysis::rate_point(cfg.params, length);
        csv += fmt(length);
        csv += ',';
        csv += fmt(model.r_sift);
        csv += ',';
        csv += fmt(model.qber);
        csv += ',';
        csv += fmt(model.r_final);
        if (cfg.n_clocks == 0) {
            csv += ",,,\n";
            continue;
        }
        const auto mc = analysis::simulate_quantum_run(
            cfg.params, length, cfg.n_clocks, derive_seed(cfg.seed, kSaltSweep + i));
        const double mc_sift_pc =
            static_cast<double>(mc.sifted) / static_cast<double>(mc.n_clocks);
        const double mc_qber =
            mc.sifted > 0
                ? static_cast<double>(mc.errors) / static_cast<double>(mc.sifted)
                : 0.0;
        const double fraction =
            1.0 - postproc::tau1(mc_qber) - cfg.params.f_ec * postproc::binary_entropy(mc_qber);
        const double mc_final =
            mc_sift_pc * cfg.params.clock_hz * (fraction > 0.0 ? fraction : 0.0);
        csv += ',';
        csv += fmt(mc_sift_pc * cfg.params.clock_hz);
        csv += ',';
        csv += fmt(mc_qber);
        csv += ',';
        csv += fmt(mc_final);
        csv += '\n';
    }
    return csv;
}

session::SessionResult run_two_party(const RunConfig& cfg) {
    const session::SessionConfig scfg = to_session_config(cfg);
    if (cfg.transport == TransportMode::listen) {
        auto t = session::TcpTransport::listen(cfg.port);
        return session::run_session(scfg, *t, session::Role::bob);
    }
    if (cfg.transport == TransportMode::connect) {
        auto t = session::TcpTransport::connect(cfg.host, cfg.port);
        return session::run_session(scfg, *t, session::Role::alice);
    }

    session::InProcPipe pipe;
    session::SessionResult bob_result;
    std::exception_ptr bob_error;
    std::thread bob([&] {
        try {
            bob_result = session::run_session(scfg, pipe.bob_end(), session::Role::bob);
        } catch (...) {
            bob_error = std::current_exception();
            pipe.bob_end().close();
        }
    });

    session::SessionResult alice_result;
    std::exception_ptr alice_error;
    try {
        alice_result = session::run_session(scfg, pipe.alice_end(), session::Role::alice);
    } catch (...) {
        alice_error = std::current_exception();
        pipe.alice_end().close();
    }
    bob.join();
    // When both roles fail, report the root cause: the side that died
    // first leaves the other with a secondary transport error.
    const auto is_transport = [](const std::exception_ptr& p) {
        try {
            std::rethrow_exception(p);
        } catch (const TransportError&) {
            return true;
        } catch (...) {
            return false;
        }
    };
    if (alice_error && bob_error)
        std::rethrow_exception(is_transport(alice_error) ? bob_error : alice_error);
    if (alice_error) std::rethrow_exception(alice_error);
    if (bob_error) std::rethrow_exception(bob_error);
    if (alice_result.final_key != bob_result.final_key)
        throw ProtocolError("verified keys differ between in-process roles");
    return alice_result;
}

int run_main(int argc, char** argv) {
    try {
        if (argc != 3) {
            usage(std::cerr);
            return 1;
        }
        const std::string_view command = argv[1];
        if (command != "sweep" && command != "session" && command != "calibrate" &&
            command != "analyze") {
            usage(std::cerr);
            return 1;
        }
        const RunConfig cfg = load_config(argv[2]);
        if (command == "sweep") return cmd_sweep(cfg);
        if (command == "session") return cmd_session(cfg);
        if (command == "calibrate") return cmd_calibrate(cfg);
        return cmd_analyze(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const AbortError& e) {
        std::cerr << "session aborted: " << e.what() << '\n';
        return 3;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace qkd::cli
