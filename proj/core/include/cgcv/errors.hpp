#pragma once

#include <stdexcept>
#include <string>

namespace cgcv {

// Shape or size disagreement between tensors / configured dims.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller broke a documented precondition (index range, missing state, ...).
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Malformed file content (bad magic, truncated payload, ...).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid runtime configuration (odd context channels, bad synth spec, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numeric evaluation produced NaN/Inf where finiteness is required.
struct EvaluationError : std::runtime_error {
    explicit EvaluationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cgcv
