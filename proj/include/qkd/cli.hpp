#pragma once

#include <cstdint>
#include <string>

#include "qkd/analysis.hpp"
#include "qkd/postproc.hpp"
#include "qkd/session.hpp"

namespace qkd::cli {

enum class TransportMode : std::uint8_t { inproc = 0, listen = 1, connect = 2 };

/// Everything a subcommand needs, parsed from one key=value file.
struct RunConfig {
    analysis::SystemParams params{};
    double length_km = 0.0;
    double sweep_start_km = 0.0;
    double sweep_end_km = 100.0;
    double sweep_step_km = 10.0;
    std::uint64_t n_clocks = 1'000'000;  ///< 0 = model-only sweeps
    std::uint64_t seed = 1;
    std::uint32_t safety_bits = postproc::kDefaultSafetyBits;
    TransportMode transport = TransportMode::inproc;
    std::string host;        ///< connect mode
    std::uint16_t port = 0;  ///< listen/connect modes
    std::string output_path;
};

/// Parses key=value lines ('#' comments). Unknown or repeated keys and
/// out-of-range values raise ConfigError naming the offending line.
RunConfig parse_config(const std::string& text);

/// parse_config over a file's contents, then applies the QKD_SEED
/// environment override if present.
RunConfig load_config(const std::string& path);

/// The sweep table as CSV (fixed header, model columns always filled,
/// Monte-Carlo columns only when n_clocks > 0).
std::string format_sweep_csv(const RunConfig& cfg);

/// Runs a session per cfg.transport: inproc drives both roles on two
/// threads and returns the initiator's result after both verified; the
/// socket modes run the local role only (listener answers, connector
/// initiates).
session::SessionResult run_two_party(const RunConfig& cfg);

/// Full command-line entry point; returns the process exit code
/// (0 ok, 1 config, 2 transport/protocol, 3 verification abort).
int run_main(int argc, char** argv);

}  // namespace qkd::cli
