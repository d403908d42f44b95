#pragma once

#include <stdexcept>
#include <string>

namespace shb {

/// Root of every error this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: arity mismatch, bad graph document, unknown name.
class InputError : public Error {
public:
    using Error::Error;
};

/// A parameter outside its admissible range (step sizes, probabilities...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The request is well formed but exceeds what the exact set machinery
/// supports (dimension > 3, too many active kinks, too many hull points).
class CapabilityError : public Error {
public:
    using Error::Error;
};

} // namespace shb
