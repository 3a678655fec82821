#pragma once

#include <stdexcept>
#include <string>

namespace ctxrec {

enum class ErrorKind {
    Io,          // missing or unreadable file
    Validation,  // rejected rows, unresolved references
    Schema,      // column mapping does not cover a required field
    Config,      // invalid configuration value
    Contract,    // precondition violated by the caller
    Cohort,      // filtering left nothing to evaluate
    EmptyProfile // recommender has no usable preference signal
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::Contract, what);
}

}  // namespace ctxrec
