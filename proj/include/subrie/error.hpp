#ifndef SUBRIE_ERROR_HPP
#define SUBRIE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace subrie {

/// Base of all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: parse failures, dimension mismatches, bad arguments.
class InputError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure did not reach its target within budget.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DomainExitError : public NumericalError {
public:
    DomainExitError(double time, const std::string& what) : NumericalError(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

}  // namespace subrie

#endif  // SUBRIE_ERROR_HPP
