// SPDX-License-Identifier: MIT
/**
 * @file errors.hpp
 * @brief Exception hierarchy shared by the library and the CLI.
 *
 * Every error carries a category so the CLI can map it to an exit code:
 * configuration problems exit with 2, numerical failures with 1.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gbsde {

enum class ErrorKind {
    configuration,  ///< inconsistent or malformed input; CLI exit 2
    numerical,      ///< solver or check failure; CLI exit 1
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigurationError : public Error {
public:
    explicit ConfigurationError(const std::string& what)
        : Error(ErrorKind::configuration, what) {}
};

/// Lattice too large for exhaustive policy enumeration.
class EnumerationLimitError : public ConfigurationError {
public:
    using ConfigurationError::ConfigurationError;
};

class GridMismatchError : public ConfigurationError {
public:
    using ConfigurationError::ConfigurationError;
};

/// Ordered-data precondition of the comparison check does not hold.
class OrderedDataError : public ConfigurationError {
public:
    using ConfigurationError::ConfigurationError;
};

/// Inner fixed point failed to converge: dt too large for the generator.
class StepSizeError : public Error {
public:
    explicit StepSizeError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Exponential quantity left the representable range.
class RangeError : public Error {
public:
    explicit RangeError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Picard iteration for a system did not reach its tolerance.
class IterationError : public Error {
public:
    IterationError(const std::string& what, std::vector<double> history)
        : Error(ErrorKind::numerical, what), history_(std::move(history)) {}
    [[nodiscard]] const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/**
 * Call inside a catch block: rethrows the active exception with `tag`
 * prepended, keeping its class (and history, for IterationError).
 */
[[noreturn]] inline void rethrow_tagged(const std::string& tag) {
    try {
        throw;
    } catch (const IterationError& e) {
        throw IterationError(tag + e.what(), e.history());
    } catch (const StepSizeError& e) {
        throw StepSizeError(tag + e.what());
    } catch (const RangeError& e) {
        throw RangeError(tag + e.what());
    } catch (const EnumerationLimitError& e) {
        throw EnumerationLimitError(tag + e.what());
    } catch (const GridMismatchError& e) {
        throw GridMismatchError(tag + e.what());
    } catch (const OrderedDataError& e) {
        throw OrderedDataError(tag + e.what());
    } catch (const ConfigurationError& e) {
        throw ConfigurationError(tag + e.what());
    } catch (const Error& e) {
        throw Error(e.kind(), tag + e.what());
    }
}

}  // namespace gbsde
