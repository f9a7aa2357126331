#pragma once

#include <stdexcept>
#include <string>

namespace dmw {

enum class ErrorCode {
    OutOfSupport,
    ZeroDensity,
    SaturatedCdf,
    UnboundedSupport,
    NotRegular,
    BadParams,
    CostOutOfSupport,
    AssumptionViolated,
    MissingTau,
    BadRange,
    NonConvergence,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace dmw
