#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace embaug {

// Library version, recorded in run manifests and reports.
inline constexpr const char* kEmbaugVersion = "0.1.0";

// Dense shapes are row-major throughout the library.
using Shape = std::vector<std::size_t>;

/// A call violated an operation's precondition (bad arguments, empty input).
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes disagree; the message names both shapes.
class ShapeError : public ContractError {
public:
    using ContractError::ContractError;
};

/// A direction was required from a vector with near-zero norm.
class DegenerateVectorError : public ContractError {
public:
    using ContractError::ContractError;
};

/// NaN or infinity showed up where training cannot continue.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file content. `offset` is the byte position where parsing stopped.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::uint64_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

/// Rejection sampling exhausted its retry budget.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

}  // namespace embaug
