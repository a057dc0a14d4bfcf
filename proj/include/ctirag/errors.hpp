#pragma once
// Error taxonomy shared across the library. The CLI maps these onto exit
// codes (config -> 1, I/O -> 2, transport -> 3).

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ctirag {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable paths, failed writes.
class IoError : public Error {
public:
    using Error::Error;
};

// A malformed record in a line-oriented file; carries the 1-based line number.
class RecordError : public Error {
public:
    RecordError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Bad configuration: invalid values, unknown keys, unsupported versions.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A caller violated an operation's contract (empty input, dimension mismatch).
class ContractError : public Error {
public:
    using Error::Error;
};

// A chunk id that is not present in an index or store.
class LookupError : public Error {
public:
    using Error::Error;
};

// Network or HTTP failure talking to a remote service. Carries the server's
// Retry-After hint when one was sent.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& msg,
                            std::optional<double> retry_after_s = std::nullopt,
                            bool retryable = true)
        : Error(msg), retry_after_s_(retry_after_s), retryable_(retryable) {}
    std::optional<double> retry_after_s() const { return retry_after_s_; }
    bool retryable() const { return retryable_; }

private:
    std::optional<double> retry_after_s_;
    bool retryable_;
};

} // namespace ctirag
