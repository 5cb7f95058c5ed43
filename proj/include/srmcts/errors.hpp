#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace srmcts {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t position, const std::string& reason)
        : std::runtime_error("parse error at token " + std::to_string(position) + ": " + reason),
          position_(position), reason_(reason) {}

    std::size_t position() const noexcept { return position_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t position_;
    std::string reason_;
};

class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class InvalidMutation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConstraintViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateSample : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PolicyExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OverflowToken : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OptimizationSkipped : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LengthMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class TooSmall : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class EmptySources : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace srmcts
