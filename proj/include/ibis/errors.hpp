#pragma once

#include <stdexcept>
#include <string>

namespace ibis {

// Two masks (or a mask and an image) with different extents were combined.
struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed on-disk or in-memory data (PNG, JSONL, record fields).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by segmenters; the remote client specializes it below.
struct SegmenterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidPrior : SegmenterError {
    using SegmenterError::SegmenterError;
};

struct ProtocolError : SegmenterError {
    ProtocolError(const std::string& what, std::string raw)
        : SegmenterError(what), payload(std::move(raw)) {}
    std::string payload;
};

struct TransportError : SegmenterError {
    TransportError(const std::string& what, std::string raw)
        : SegmenterError(what), payload(std::move(raw)) {}
    std::string payload;
};

// Unknown key or type mismatch in a config file. `path` is the dotted key path.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& what, std::string key_path)
        : std::runtime_error(what), path(std::move(key_path)) {}
    std::string path;
};

}  // namespace ibis
