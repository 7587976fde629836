#pragma once

#include <stdexcept>
#include <string>

namespace ccs {

// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor shape disagreement (names both shapes in the message).
class ShapeError : public Error {
public:
    using Error::Error;
};

// NaN/Inf produced by a numeric operation, or a singular solve.
class NumericError : public Error {
public:
    using Error::Error;
};

// Bad argument value (empty dimension, lo >= hi, too few rows, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Dataset/schema mismatch: missing column, wrong width, hash mismatch.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Categorical value or index outside the fitted vocabulary.
class VocabError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// File-system and serialization failures.
class IoError : public Error {
public:
    using Error::Error;
};

// Corrupt or incompatible model container bytes.
class FormatError : public Error {
public:
    using Error::Error;
};

// Training loss became non-finite.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(std::size_t epoch, const std::string& what)
        : Error(what), epoch_(epoch) {}
    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

} // namespace ccs
