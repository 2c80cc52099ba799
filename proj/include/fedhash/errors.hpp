#pragma once

#include <stdexcept>
#include <string>

namespace fedhash {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Schema construction rejected (zero dimension, bad ratio, duplicate name).
struct InvalidSchemaError : Error {
    using Error::Error;
};

// Parameter containers with mismatched schema digests were combined.
struct IncompatibleParametersError : Error {
    using Error::Error;
};

// Array length or tensor shape does not match the expected layout.
struct ShapeError : Error {
    using Error::Error;
};

// Non-finite value encountered; carries the offending layer name in the message.
struct NumericError : Error {
    using Error::Error;
};

// Invalid run configuration (bad field, empty dataset, missing path).
struct ConfigError : Error {
    explicit ConfigError(const std::string& field, const std::string& msg)
        : Error("config field '" + field + "': " + msg), field_name(field) {}
    std::string field_name;
};

// Increment carries a round number other than the one being aggregated.
struct StaleIncrementError : Error {
    using Error::Error;
};

// A round was closed without one increment per registered client.
struct IncompleteRoundError : Error {
    using Error::Error;
};

// Non-blocking filesystem fetch found no message yet.
struct NotReadyError : Error {
    using Error::Error;
};

// Stored checkpoint failed validation on load.
struct CorruptCheckpointError : Error {
    using Error::Error;
};

// Peer violated the wire protocol (unknown digest, unexpected message kind).
struct ProtocolError : Error {
    using Error::Error;
};

// Malformed frame: bad magic, truncated payload, or oversize length prefix.
struct FramingError : Error {
    using Error::Error;
};

}  // namespace fedhash
