#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aalr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The initial model produced a non-finite loss before any training.
class InitializationError : public Error {
public:
    using Error::Error;
};

/// The controller was driven outside its protocol (e.g. observed after Stop).
class ProtocolError : public Error {
public:
    using Error::Error;
};

class NoCheckpointError : public Error {
public:
    using Error::Error;
};

/// A checkpoint was rejected or could not be read back.
class CheckpointError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the byte offset where parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid user-supplied configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A dataset named by the configuration could not be found.
class DatasetNotFoundError : public Error {
public:
    using Error::Error;
};

} // namespace aalr
