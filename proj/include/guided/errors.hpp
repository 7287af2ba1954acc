#pragma once

#include <stdexcept>
#include <string>

namespace guided {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor/operand dimensions do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value (hyperparameter, spec field, unknown name).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Dataset-level problem: bad split, checksum mismatch, empty class.
class DataError : public Error {
public:
    using Error::Error;
};

/// Class index outside [0, K).
class LabelError : public Error {
public:
    using Error::Error;
};

/// API misuse, e.g. backward() from a non-scalar node.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Training diverged (non-finite loss) or could not run.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// Metric undefined for the given input.
class MetricError : public Error {
public:
    using Error::Error;
};

/// Malformed input to an inference routine (e.g. missing criterion).
class InputError : public Error {
public:
    using Error::Error;
};

/// Filesystem / serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// A required checkpoint or stored artifact is missing.
class ArtifactError : public Error {
public:
    using Error::Error;
};

} // namespace guided
