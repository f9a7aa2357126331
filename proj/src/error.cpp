#include "dmw/error.hpp"

namespace dmw {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::OutOfSupport: return "OutOfSupport";
        case ErrorCode::ZeroDensity: return "ZeroDensity";
        case ErrorCode::SaturatedCdf: return "SaturatedCdf";
        case ErrorCode::UnboundedSupport: return "UnboundedSupport";
        case ErrorCode::NotRegular: return "NotRegular";
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::CostOutOfSupport: return "CostOutOfSupport";
        case ErrorCode::AssumptionViolated: return "AssumptionViolated";
        case ErrorCode::MissingTau: return "MissingTau";
        case ErrorCode::BadRange: return "BadRange";
        case ErrorCode::NonConvergence: return "NonConvergence";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace dmw
