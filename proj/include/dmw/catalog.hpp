#pragma once

#include <vector>

#include "dmw/distribution.hpp"

namespace dmw {

Distribution make_uniform(double lo, double hi);
Distribution make_point_mass(double at);

// Distribution of w = r - c for c ~ g.
Distribution contribution_from_cost(const Distribution& g, double r);
// Distribution of c = r - w for w ~ f; rejects an atom that would land at the bottom of the cost support.
Distribution cost_from_contribution(const Distribution& f, double r);

// F(z) = 1 - r_star / z on [r_star, w_bar) with mass r_star / w_bar at w_bar.
Distribution make_trunc_equal_revenue(double r_star, double w_bar);

// K-piece staircase: F(z) = 1 - 1/z on [1, z_K), then 1 - a_k / (z - 2^{K-k+1}) on [z_k, z_{k-1}).
// The top piece has a_1 = 0, so the support ends at z_1 = 2^K with mass q_1 there.
Distribution make_staircase(int K);
double staircase_breakpoint(int K, int k);  // z_k = k 2^K / (2^k - 1); z_0 = 2^K / ln 2
double staircase_tail(int K, int k);        // q_k = (2^k - 1) / (K 2^K)

// F(z) = (1/K)(1 - e^{-z}) / (1 - e^{-r}) + 1 - 1/K on [-ln(K - (K-1)e^{-r}), r].
Distribution make_cond_exponential(double r, double K);

// Piecewise-linear cdf through (z[i], cdf[i]); cdf[0] must be 0 and any shortfall
// of the last value below 1 becomes mass at the last knot.
Distribution make_tabulated(std::vector<double> z, std::vector<double> cdf);

Distribution distribution_from_json(const nlohmann::json& j);

}  // namespace dmw
