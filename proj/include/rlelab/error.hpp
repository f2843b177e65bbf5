#pragma once

#include <stdexcept>
#include <string>

namespace rlelab {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    BudgetExceeded,
    NonFiniteEnergy,
    Config,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::BudgetExceeded: return "enumeration_budget_exceeded";
        case ErrorCode::NonFiniteEnergy: return "non_finite_energy";
        case ErrorCode::Config: return "config_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

#define RLELAB_REQUIRE(cond, code, msg)                       \
    do {                                                      \
        if (!(cond)) throw ::rlelab::Error((code), (msg));    \
    } while (0)

}  // namespace rlelab
