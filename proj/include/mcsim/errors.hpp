#ifndef MCSIM_ERRORS_HPP
#define MCSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mcsim {

/// Input tensor/frame dimensions do not match what the operation expects.
class ShapeMismatchError : public std::invalid_argument {
public:
    explicit ShapeMismatchError(const std::string& what) : std::invalid_argument(what) {}
};

/// A label of the wrong misalignment kind was supplied.
class WrongKindError : public std::invalid_argument {
public:
    explicit WrongKindError(const std::string& what) : std::invalid_argument(what) {}
};

/// Requested misalignment lies outside the modeled sensor grid.
class OutOfRangeError : public std::domain_error {
public:
    explicit OutOfRangeError(const std::string& what) : std::domain_error(what) {}
};

/// A state-machine transition was requested on a terminal state.
class InvalidStateError : public std::logic_error {
public:
    explicit InvalidStateError(const std::string& what) : std::logic_error(what) {}
};

/// Every depth value in the grid is zero; no fallback pixel exists.
class AllHolesError : public std::runtime_error {
public:
    explicit AllHolesError(const std::string& what) : std::runtime_error(what) {}
};

/// Training loss became non-finite.
class DivergedError : public std::runtime_error {
public:
    explicit DivergedError(const std::string& what) : std::runtime_error(what) {}
};

/// Statistics input admits no F statistic (all groups constant and equal).
class DegenerateInputError : public std::invalid_argument {
public:
    explicit DegenerateInputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem read/write failure.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mcsim

#endif // MCSIM_ERRORS_HPP
