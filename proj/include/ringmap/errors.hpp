#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ringmap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nome outside the unit disk or a non-positive period height.
class InvalidLatticeError : public Error {
public:
    using Error::Error;
};

/// Argument within round-off of a lattice point (or of a pole of sn).
class PoleError : public Error {
public:
    using Error::Error;
};

/// Real argument outside the admissible interval of a special function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Integration path through a branch point of an elliptic integrand.
class BranchError : public Error {
public:
    using Error::Error;
};

/// Quadrature path could not keep clear of the singular points.
class PathError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature stopped above the requested tolerance.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double estimate)
        : Error(what), estimate_(estimate) {}
    double estimate() const noexcept { return estimate_; }

private:
    double estimate_;
};

/// Colliding prevertices, vanishing second derivative at a tip, or a
/// step-size underflow of the continuation.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Cyclic order of prevertices changed during a stage.
class TopologyError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or domain description. Carries a field path.
class ValidationError : public Error {
public:
    ValidationError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace ringmap
