#ifndef FLOWPRESS_ERRORS_HPP
#define FLOWPRESS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace flowpress {

// Base class for all domain errors thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Model construction rejected (GM1 gate, bad exponent window, ...).
class RejectedSpec : public Error {
public:
    using Error::Error;
};

// Fit requested on a grid that does not span enough decades / points.
class InsufficientRange : public Error {
public:
    using Error::Error;
};

// Series has no finite value on the requested domain (u = 0, s < 0).
class DivergentSeries : public Error {
public:
    using Error::Error;
};

// A requested tilted moment diverges; message names the exponent condition.
class InfiniteMoment : public Error {
public:
    using Error::Error;
};

// Root bracket for the implicit pressure equation is invalid.
class BracketFailure : public Error {
public:
    using Error::Error;
};

class OutOfDomain : public Error {
public:
    using Error::Error;
};

// Operation requires a specific regime (e.g. gamma = 1 for the counterexample).
class WrongRegime : public Error {
public:
    using Error::Error;
};

class NewtonStall : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class InvalidRoof : public Error {
public:
    using Error::Error;
};

class UnknownPreset : public Error {
public:
    using Error::Error;
};

} // namespace flowpress

#endif
