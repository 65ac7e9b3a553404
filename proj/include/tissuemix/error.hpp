#pragma once

#include <stdexcept>
#include <string>

namespace tissuemix {

// Bad input: wrong shape, out-of-range value, unsatisfiable parameters.
// The CLI maps this to exit code 1.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation (e.g. a curve
// parameter outside [0, 1]). Also exit code 1.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Filesystem and codec failures. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& what) { throw InvalidArgument(what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(what);
}

}  // namespace tissuemix
