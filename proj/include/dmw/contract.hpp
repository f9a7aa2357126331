#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmw/distribution.hpp"
#include "dmw/estimate.hpp"
#include "dmw/market.hpp"

namespace dmw {

struct ContractSolution {
    Contract contract;
    // Linear share when the contract is linear, NaN otherwise.
    double alpha = 0.0;
    // Threshold contribution z; NaN for the general heuristic.
    double threshold_z = 0.0;
    // Per-agent thresholds when agents differ.
    std::vector<double> thresholds;
    double utility = 0.0;
    Estimator estimator = Estimator::closed_form;
    std::size_t samples = 0;
    double std_error = 0.0;
    bool converged = true;
    // The optimum sits on a right-endpoint atom, where phi(w_bar) = w_bar is a convention.
    bool atom_convention = false;
    // Some agent's threshold was clamped to its support.
    bool clamped = false;

    nlohmann::json to_json() const;
};

// phi(z) * P(max of n draws >= z)
double principal_utility_iid(const Distribution& f, double r, int n, double z);
ContractSolution optimize_contract_iid(const Distribution& f, double r, int n);
// Same program with the virtual value of F^n in place of phi.
ContractSolution optimize_contract_posted(const Distribution& f, double r, int n);

// Principal's utility under the linear contract alpha: (1 - alpha) r times the chance that
// some agent clears z_alpha = (1 - alpha) r + theta_alpha.
double linear_contract_utility_iid(const Distribution& f, double r, int n, double alpha);
// z_alpha = (1 - alpha) r + theta_alpha
double threshold_for_alpha(const Distribution& f, double r, double alpha);

struct IdenticalRewardOptions {
    int quadrature_max_n = 3;
    std::size_t mc_samples = 1'000'000;
    std::uint64_t seed = 1;
    int alpha_grid = 48;
};

struct IdenticalRewardValue {
    double utility = 0.0;
    double std_error = 0.0;
    std::vector<double> thresholds;
    std::vector<double> win_probability;
    Estimator estimator = Estimator::quadrature;
    bool clamped = false;
};

IdenticalRewardValue identical_reward_objective(const MarketInstance& inst, double alpha,
                                                const IdenticalRewardOptions& opts = {});
ContractSolution optimize_contract_identical_reward(const MarketInstance& inst,
                                                    const IdenticalRewardOptions& opts = {});

struct GeneralSearch {
    int restarts = 16;
    int max_iters = 400;
    std::size_t mc_samples = 20'000;
    std::uint64_t seed = 1;
    double t_max = 1.0;
};

// Monte-Carlo estimate of the principal's utility under contract t with the VWM intermediary.
Estimate general_objective(const MarketInstance& inst, const Contract& t, std::size_t samples, std::uint64_t seed);
// Heuristic multi-start simplex search over t in [0, t_max]^m.
ContractSolution optimize_contract_general(const MarketInstance& inst, const GeneralSearch& search = {});

enum class RobustRegime { regular_design_for_ell, mhr_design_for_s };

const char* to_string(RobustRegime regime) noexcept;
RobustRegime robust_regime_from_string(const std::string& name);

struct RobustRow {
    int n;
    double utility;
    double u_sb;
    double u_fb;
    double podm;
    double poa;
};

struct RobustDesign {
    int s = 1;
    int ell = 1;
    RobustRegime regime = RobustRegime::regular_design_for_ell;
    double alpha = 0.0;
    double threshold_z = 0.0;
    double worst_podm = 0.0;
    int worst_podm_n = 0;
    double worst_poa = 0.0;
    int worst_poa_n = 0;
    std::vector<RobustRow> rows;

    nlohmann::json to_json() const;
};

RobustDesign robust_contract(const Distribution& f, double r, int s, int ell, RobustRegime regime);

}  // namespace dmw
