#pragma once

#include <stdexcept>
#include <string>

namespace fuseforge {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A point with non-positive camera-frame depth cannot be projected.
class NonProjectableError : public Error {
public:
    explicit NonProjectableError(const std::string& msg) : Error(msg) {}
};

/// Zero or negative depth measurement.
class InvalidMeasurementError : public Error {
public:
    explicit InvalidMeasurementError(const std::string& msg) : Error(msg) {}
};

/// The 6x6 (or 6n x 6n) normal-equation system has no usable factorization.
class DegenerateGeometryError : public Error {
public:
    explicit DegenerateGeometryError(const std::string& msg) : Error(msg) {}
};

/// Frame-to-model tracking could not produce a pose.
class TrackingFailureError : public Error {
public:
    explicit TrackingFailureError(const std::string& msg) : Error(msg) {}
};

/// Non-rigid solver failed to reduce the energy.
class SolverDivergenceError : public Error {
public:
    explicit SolverDivergenceError(const std::string& msg) : Error(msg) {}
};

/// File / parsing problems, reported with context.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace fuseforge
