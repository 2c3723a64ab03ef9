#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chtd {

/// Bad argument or violated precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Coordinate outside a 1D mesh domain.
class OutOfDomain : public std::out_of_range {
public:
    OutOfDomain(const std::string& what, double coordinate)
        : std::out_of_range(what), coordinate_(coordinate) {}
    double coordinate() const noexcept { return coordinate_; }

private:
    double coordinate_;
};

/// Local radial + monomial moment matrix of a patch is numerically singular.
class IllConditionedPatch : public std::runtime_error {
public:
    IllConditionedPatch(std::size_t node, double condition_estimate)
        : std::runtime_error("ill-conditioned patch at node " + std::to_string(node) +
                             " (condition estimate " + std::to_string(condition_estimate) + ")"),
          node_(node),
          condition_(condition_estimate) {}
    std::size_t node() const noexcept { return node_; }
    double condition_estimate() const noexcept { return condition_; }

private:
    std::size_t node_;
    double condition_;
};

/// Every unknown was eliminated by constraints.
class EmptySystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A rank of the separated state vanishes in a dimension other than the
/// one being solved, so its block row is identically zero.
class SingularBlock : public std::runtime_error {
public:
    SingularBlock(const std::string& what, std::size_t dim, std::size_t rank)
        : std::runtime_error(what), dim_(dim), rank_(rank) {}
    std::size_t dim() const noexcept { return dim_; }
    std::size_t rank() const noexcept { return rank_; }

private:
    std::size_t dim_;
    std::size_t rank_;
};

/// Requested dense object exceeds a size cap.
class TooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CorruptFile : public std::runtime_error {
public:
    CorruptFile(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Explicit time stepping produced non-finite values.
class Divergence : public std::runtime_error {
public:
    explicit Divergence(std::size_t step)
        : std::runtime_error("non-finite field at step " + std::to_string(step)), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Iterative solver hit its iteration cap.
class NotConverged : public std::runtime_error {
public:
    NotConverged(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Error metric is undefined for the given reference (e.g. zero energy).
class UndefinedMetric : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& message)
        : std::runtime_error(key + ": " + message), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace chtd
