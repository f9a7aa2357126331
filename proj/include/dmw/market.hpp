#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dmw/distribution.hpp"

namespace dmw {

// One agent: outcome distribution rho and either a cost distribution G or, equivalently,
// the contribution distribution F of w = r - c.
struct AgentSpec {
    std::vector<double> rho;
    std::optional<Distribution> cost;
    std::optional<Distribution> contribution;
};

class MarketInstance {
public:
    MarketInstance(std::vector<double> lambda, std::vector<AgentSpec> agents);

    // n ex-ante identical agents with a single outcome worth r.
    static MarketInstance symmetric(const Distribution& contribution, double r, int n);

    std::size_t n() const { return agents_.size(); }
    std::size_t m() const { return lambda_.size(); }
    const std::vector<double>& lambda() const { return lambda_; }
    const std::vector<double>& rho(std::size_t i) const { return agents_.at(i).rho; }
    const std::vector<double>& gamma(std::size_t i) const { return agents_.at(i).gamma; }
    double reward(std::size_t i) const { return agents_.at(i).reward; }
    const Distribution& contribution(std::size_t i) const { return agents_.at(i).contribution; }
    const std::optional<Distribution>& cost_dist(std::size_t i) const { return agents_.at(i).cost; }
    const DistClass& classification(std::size_t i) const { return agents_.at(i).cls; }
    double cost_lo(std::size_t i) const { return reward(i) - contribution(i).support_hi(); }
    double cost_hi(std::size_t i) const { return reward(i) - contribution(i).support_lo(); }

    bool identical_rewards(double tol = 1e-12) const;
    // Identical expected-reward profiles and identical contribution distributions.
    bool ex_ante_identical(double tol = 1e-12) const;

    // Inverse-cdf cost draw keyed by (seed, agent, sample).
    double sample_cost(std::size_t i, std::uint64_t seed, std::uint64_t sample) const;
    std::vector<double> sample_costs(std::uint64_t seed, std::uint64_t sample) const;

    nlohmann::json to_json() const;

private:
    struct Agent {
        std::vector<double> rho;
        std::vector<double> gamma;
        double reward;
        std::optional<Distribution> cost;
        Distribution contribution;
        DistClass cls;
    };

    std::vector<double> lambda_;
    std::vector<Agent> agents_;
};

MarketInstance market_from_json(const nlohmann::json& j);

// Outcome-indexed transfer shares; the linear contract alpha is t = alpha * 1.
struct Contract {
    std::vector<double> t;

    static Contract linear(double alpha, std::size_t m);
    // <t, gamma>
    double share(const std::vector<double>& gamma) const;
    // <1 - t, gamma>
    double principal_share(const std::vector<double>& gamma) const;
    void validate(std::size_t m) const;
    nlohmann::json to_json() const;
};

}  // namespace dmw
