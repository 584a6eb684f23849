#pragma once

#include <stdexcept>
#include <string>

namespace surropt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidSpecError : public Error {
public:
    using Error::Error;
};

class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

/// A ratio whose denominator is zero (r_{i,j} = 0, or NV_D^2 + P = 0).
class DegenerateDenominatorError : public Error {
public:
    using Error::Error;
};

/// Raised by configuration validation; key() carries the dotted key path.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)), detail_(what) {}

    const std::string& key() const noexcept { return key_; }
    /// The message without the key prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string key_;
    std::string detail_;
};

class DegenerateNormalizationError : public Error {
public:
    using Error::Error;
};

class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

class BackendUnavailableError : public Error {
public:
    using Error::Error;
};

class NestedScopeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Wraps a failure of the fitness function inside the optimizer loop.
class EvaluationError : public Error {
public:
    EvaluationError(long fe, long generation, const std::string& what)
        : Error("evaluation failed at FE=" + std::to_string(fe) + ", g=" + std::to_string(generation) +
                ": " + what),
          fe_(fe), generation_(generation) {}

    long fe() const noexcept { return fe_; }
    long generation() const noexcept { return generation_; }

private:
    long fe_;
    long generation_;
};

}  // namespace surropt
