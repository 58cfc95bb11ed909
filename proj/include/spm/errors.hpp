#pragma once

#include <stdexcept>
#include <string>

namespace spm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numeric precondition was violated (definiteness, singularity, non-finite data).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A caller-supplied parameter is out of range or inconsistent.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A vertex has zero degree in a layer whose normalization needs D^{-1/2}.
class DegenerateDegreeError : public Error {
public:
    DegenerateDegreeError(const std::string& what, long vertex)
        : Error(what), vertex_(vertex) {}
    long vertex() const noexcept { return vertex_; }

private:
    long vertex_;
};

/// Malformed input file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

/// The selected operator carries no usable cluster signal (e.g. the Bethe
/// Hessian has fewer negative eigenvalues than requested eigenvectors).
class NoClusterSignalError : public Error {
public:
    using Error::Error;
};

} // namespace spm
