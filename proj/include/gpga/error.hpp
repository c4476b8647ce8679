#pragma once

#include <stdexcept>
#include <string>

namespace gpga {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A documented precondition was violated by the caller.
struct ContractViolation : Error {
    explicit ContractViolation(const std::string& msg) : Error(msg) {}
};

// Checkpoint / dataset file problems, each with a distinct kind tag.
struct FileFormatError : Error {
    enum class Kind { BadMagic, VersionMismatch, Truncated, ShapeMismatch, CountMismatch, Io };
    Kind kind;
    FileFormatError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

}  // namespace gpga
