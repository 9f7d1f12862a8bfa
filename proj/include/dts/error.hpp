#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dts {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible matrix/tensor shapes. The message names both shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value or combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A class label outside [0, class_count).
class LabelError : public Error {
public:
    using Error::Error;
};

/// Invalid argument that is not a shape or config problem (empty batch, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Malformed input text; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// A statistical estimator was asked for something it cannot provide.
class EstimatorError : public Error {
public:
    using Error::Error;
};

/// A sampler time grid could not be constructed.
class PlanError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or gradient; carries the step index.
class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(std::size_t step, const std::string& what)
        : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_ = 0;
};

/// Sampling produced a non-finite state; carries the diffusion step index.
class SamplingDivergedError : public Error {
public:
    SamplingDivergedError(std::size_t step, const std::string& what)
        : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_ = 0;
};

/// Filesystem problem (missing file, unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace dts
