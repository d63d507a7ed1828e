// errors.hpp
// Exception hierarchy shared by all qcash modules.

#pragma once

#include <stdexcept>
#include <string>

namespace qcash {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid argument: bad qubit index, dimension mismatch, out-of-range
// parameter, weight violation.
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error(what) {}
};

// Minting past the configured polynomial issuance cap.
class IssuanceCapError : public Error {
public:
    explicit IssuanceCapError(const std::string& what) : Error(what) {}
};

// A label-register basis state outside the orbit image of the labeling map.
class UndefinedLabelError : public Error {
public:
    explicit UndefinedLabelError(const std::string& what) : Error(what) {}
};

// The bank's final-step correction exceeded its per-qubit X/Z budget.
class BudgetViolationError : public Error {
public:
    explicit BudgetViolationError(const std::string& what) : Error(what) {}
};

// Injected or real failure of the in-memory message channel.
class ChannelError : public Error {
public:
    explicit ChannelError(const std::string& what) : Error(what) {}
};

// Fixture serialization problems: bad magic, short reads, unwritable paths.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

// A protocol run produced a malformed transcript or payload.
class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& what) : Error(what) {}
};

} // namespace qcash
