#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace mercury {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value broke a documented domain rule (bad slug, empty identifier, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A coordinate or count outside its legal range.
class RangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A pair of bounds in the wrong order (south > north, start > end).
class OrderError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Text did not match any accepted shape.
class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// An API was called outside its contract.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Illegal OAI-PMH argument combination; names the offending argument.
class ProtocolUsageError : public UsageError {
public:
    ProtocolUsageError(std::string argument, const std::string& what)
        : UsageError(what), argument_(std::move(argument)) {}

    const std::string& argument() const noexcept { return argument_; }

private:
    std::string argument_;
};

/// Input was not well-formed XML.
class XmlParseError : public Error {
public:
    XmlParseError(std::size_t offset, const std::string& what)
        : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Well-formed XML that does not have the expected structure.
class StructureError : public Error {
public:
    using Error::Error;
};

/// Journal or state-file IO failure.
class StoreError : public Error {
public:
    using Error::Error;
};

/// A journal entry in the interior of the file failed its checksum or parse.
class IntegrityError : public StoreError {
public:
    IntegrityError(std::uint64_t seq, const std::string& what)
        : StoreError("journal entry seq " + std::to_string(seq) + ": " + what), seq_(seq) {}

    std::uint64_t seq() const noexcept { return seq_; }

private:
    std::uint64_t seq_;
};

/// Network or HTTP-level failure talking to a provider.
class TransportError : public Error {
public:
    using Error::Error;
};

/// A create request collided with an existing entity (duplicate provider key).
class ConflictError : public Error {
public:
    using Error::Error;
};

/// A harvest for the provider is already running.
class HarvestInProgress : public Error {
public:
    explicit HarvestInProgress(const std::string& provider_key)
        : Error("harvest in progress for provider '" + provider_key + "'") {}
};

} // namespace mercury
