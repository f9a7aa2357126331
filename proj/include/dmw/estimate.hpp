#pragma once

namespace dmw {

enum class Estimator { closed_form, quadrature, monte_carlo };

inline const char* to_string(Estimator e) noexcept {
    switch (e) {
        case Estimator::closed_form: return "closed_form";
        case Estimator::quadrature: return "quadrature";
        case Estimator::monte_carlo: return "monte_carlo";
    }
    return "unknown";
}

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

}  // namespace dmw
