#pragma once

#include <stdexcept>
#include <string>

namespace fwseg {

/// Coarse classification used by the CLI to pick a process exit code.
enum class ErrorKind {
    Config,   // invalid configuration or parameters
    Data,     // malformed or missing input data
    Runtime,  // failures while training or evaluating
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Invalid numeric parameter (radius, proportion, spacing, width, ...).
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

// Mismatched grid or tensor dimensions.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// Missing files, unreadable images, bad pixel values.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// The dense mask cannot support the requested sparsity; callers resample.
class InfeasibleSparsity : public Error {
public:
    explicit InfeasibleSparsity(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// A loss was asked to average over zero labeled pixels.
class NoLabelsError : public Error {
public:
    explicit NoLabelsError(const std::string& what) : Error(ErrorKind::Runtime, what) {}
};

// One of the two classes has no labeled pixel where a prototype or solver needs it.
class MissingClassError : public Error {
public:
    explicit MissingClassError(const std::string& what) : Error(ErrorKind::Runtime, what) {}
};

class EpisodeSamplingError : public Error {
public:
    explicit EpisodeSamplingError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& what) : Error(ErrorKind::Runtime, what) {}
};

}  // namespace fwseg
