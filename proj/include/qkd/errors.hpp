#pragma once

#include <stdexcept>
#include <string>

namespace qkd {

/// Base for all simulator/protocol errors. Parameter misuse throws
/// std::invalid_argument, mathematically infeasible requests throw
/// std::domain_error; everything below is stack-specific.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed configuration input. Messages cite the offending line.
struct ConfigError : Error {
    using Error::Error;
};

/// Byte stream does not parse as a frame (truncation, oversized length).
struct FramingError : Error {
    using Error::Error;
};

/// Well-formed frames arriving in an order or with content the protocol
/// state machine cannot accept.
struct ProtocolError : Error {
    using Error::Error;
};

/// Transport failure: connect/accept failure, peer gone, short read.
struct TransportError : Error {
    using Error::Error;
};

/// Not enough data to carry out a statistical step.
struct InsufficientDataError : Error {
    using Error::Error;
};

/// Deliberate session teardown: one side announced ABORT (e.g. final
/// key hashes disagree) and both sides raise this.
struct AbortError : Error {
    using Error::Error;
};

}  // namespace qkd
