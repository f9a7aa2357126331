#pragma once

#include <functional>
#include <vector>

namespace dmw::num {

using Fn = std::function<double(double)>;

struct Extremum {
    double arg = 0.0;
    double value = 0.0;
};

struct MaximizeOptions {
    int grid = 4096;
    double arg_tol = 1e-10;
    // Relative tolerance under which two values count as tied.
    double value_tol = 1e-12;
    // Points where f may jump or kink; always evaluated exactly.
    std::vector<double> breakpoints;
    // How many of the best grid peaks get golden-section refinement.
    int max_brackets = 8;
};

// Global maximum of f on [lo, hi], returning the largest maximizer when values tie.
// A grid scan brackets candidate peaks, golden section refines each bracket and a
// central-difference polish sharpens smooth interior optima below the value noise floor.
Extremum maximize_largest(const Fn& f, double lo, double hi, const MaximizeOptions& opts = {});

// Golden-section search for a maximum of a unimodal f on [a, b]; ties move right.
Extremum golden_section_max(const Fn& f, double a, double b, double tol);

// Largest x in [lo, hi] with pred(x) true; pred(lo) is assumed true and pred monotone.
double bisect_last_true(const std::function<bool(double)>& pred, double lo, double hi, double tol);

// Smallest x in [lo, hi] with pred(x) true; pred(hi) is assumed true and pred monotone.
double bisect_first_true(const std::function<bool(double)>& pred, double lo, double hi, double tol);

// Adaptive Gauss-Kronrod quadrature, split at the given breakpoints.
double integrate(const Fn& f, double lo, double hi, std::vector<double> breakpoints = {},
                 double tol = 1e-10);

}  // namespace dmw::num
