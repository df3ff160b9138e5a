#pragma once

#include <stdexcept>
#include <string>

namespace snicpath {

enum class ErrorCode {
    NonPositiveCapacity,
    BadMtu,
    EmptySkewTable,
    UnsupportedVerbForPath,
    ParseError,
    ValidationError,
    NotComparable,
    NegativeRatio,
    InvalidCapacities,
    UnknownAlternative,
    Infeasible,
    MissingColumn,
};

const char* to_string(ErrorCode code);

// All recoverable errors carry a code so callers (and tests) can dispatch
// without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace snicpath
