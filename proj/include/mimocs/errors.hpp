#pragma once

#include <stdexcept>
#include <string>

namespace mimocs {

/// Input outside the mathematical domain of an operation (bad grid index,
/// mismatched dimensions, non-Hermitian matrix, empty support).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A dense object would exceed the configured materialization cap.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Infeasible or invalid parameters (divisibility, capacity, negative values).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Column submatrix is numerically rank deficient.
class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    IoError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace mimocs
