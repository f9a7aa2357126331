#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmw/distribution.hpp"
#include "dmw/estimate.hpp"

namespace dmw {

// e / (e - 1): the anonymous-pricing approximation ratio for regular distributions.
inline constexpr double kEta = 1.5819767068693265;

// E[(max of n draws)^+]
double first_best(const Distribution& f, int n);
// E[(max of n virtual values)^+]
double second_best(const Distribution& f, int n);

struct RatioReport {
    double u_fb = 0.0;
    double u_sb = 0.0;
    double u_star = 0.0;
    double u_posted = 0.0;
    double podm = 0.0;
    double poa = 0.0;
    double podm_posted = 0.0;
    double poa_posted = 0.0;
    double z_star = 0.0;
    double alpha_star = 0.0;
    double z_posted = 0.0;
    double alpha_posted = 0.0;
    Estimator fb_estimator = Estimator::quadrature;
    Estimator sb_estimator = Estimator::quadrature;
    Estimator star_estimator = Estimator::closed_form;
    Estimator posted_estimator = Estimator::closed_form;

    nlohmann::json to_json() const;
};

RatioReport ratios(const Distribution& f, double r, int n);

struct OrderStatSummary {
    int n = 1;
    double mu = 0.0;  // E[max of n draws]
    Estimator method = Estimator::quadrature;
};

OrderStatSummary order_stat_summary(const Distribution& f, int n);

double harmonic(int n);
// sum_{k=1}^{n} (1 - (1 - t)^k) / k
double h_hat(int n, double t);
// First-best for n draws from a mixture: mass F0 on non-positive values, a standard
// exponential above zero.
double fb_exponential_mixture(double f0, int n);

// Z_n(z) = (1 - z^n) / (1 - (1 - (1 - z)/e)^n)
double z_factor(int n, double z);

struct TauTable {
    int first_n = 2;
    std::vector<double> taus;
    std::string version;
    std::string source;
};

TauTable taus_from_json(const nlohmann::json& j);
TauTable load_taus(const std::string& path);
std::string default_taus_path();

struct PodmBoundRow {
    int n;
    double tau;
    double z;
    double bound;
};

// Rows n = 2..n_max of tau_n * Z_n((1 - 1/e)^{1/n}); taus[k] holds tau_{k+2}.
std::vector<PodmBoundRow> podm_upper_table(const std::vector<double>& taus, int n_max);

double asymptotic_poa_bound(int n, double f0);

struct NonmonotonicityReport {
    double u_unrestricted = 0.0;
    double u_never_assign = 0.0;
    double u_second_lowest = 0.0;
    double second_lowest_std_error = 0.0;
    double alpha_probe = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    bool restriction_hurts = false;   // never-assign leaves the principal worse off
    bool restriction_helps = false;   // second-lowest leaves the principal better off

    nlohmann::json to_json() const;
};

NonmonotonicityReport nonmonotonicity_demo(std::size_t samples = 100'000, std::uint64_t seed = 7);

}  // namespace dmw
