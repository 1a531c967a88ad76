#pragma once

#include <stdexcept>
#include <string>

namespace lsd {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or model dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A NaN/Inf appeared where a finite value is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A file does not follow the expected binary or text layout.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Not enough qualifying data to satisfy a request (e.g. an exhausted latent set).
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid argument or configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace lsd
