#include "dmw/market.hpp"

#include <cmath>
#include <numeric>

#include "dmw/catalog.hpp"
#include "dmw/error.hpp"
#include "dmw/parallel.hpp"

namespace dmw {

MarketInstance::MarketInstance(std::vector<double> lambda, std::vector<AgentSpec> agents) : lambda_(std::move(lambda)) {
    if (lambda_.empty()) fail(ErrorCode::BadParams, "instance needs at least one outcome");
    if (agents.empty()) fail(ErrorCode::BadParams, "instance needs at least one agent");
    for (double l : lambda_) {
        if (!(l >= 0.0) || !std::isfinite(l)) fail(ErrorCode::BadParams, "rewards must be finite and non-negative");
    }
    std::vector<std::pair<const DistributionModel*, DistClass>> seen;
    for (auto& spec : agents) {
        if (spec.rho.size() != lambda_.size()) fail(ErrorCode::BadParams, "rho length must match lambda");
        double total = 0.0;
        for (double p : spec.rho) {
            if (!(p >= 0.0)) fail(ErrorCode::BadParams, "rho entries must be non-negative");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) fail(ErrorCode::BadParams, "rho must sum to 1");

        std::vector<double> gamma(lambda_.size());
        for (std::size_t j = 0; j < lambda_.size(); ++j) gamma[j] = lambda_[j] * spec.rho[j];
        const double reward = std::accumulate(gamma.begin(), gamma.end(), 0.0);

        if (spec.cost.has_value() == spec.contribution.has_value()) {
            fail(ErrorCode::BadParams, "each agent needs exactly one of cost_dist or contribution_dist");
        }
        Distribution f = spec.contribution ? *spec.contribution : contribution_from_cost(*spec.cost, reward);
        if (reward - f.support_hi() < -1e-12) fail(ErrorCode::BadParams, "costs must be non-negative");
        if (!(f.cdf(0.0) < 1.0)) fail(ErrorCode::BadParams, "contribution is never positive");

        DistClass cls;
        bool cached = false;
        for (const auto& [model, c] : seen) {
            if (model == f.model_ptr().get()) {
                cls = c;
                cached = true;
            }
        }
        if (!cached) {
            cls = classify(f);
            seen.emplace_back(f.model_ptr().get(), cls);
        }
        agents_.push_back({std::move(spec.rho), std::move(gamma), reward, spec.cost, f, cls});
    }
}

MarketInstance MarketInstance::symmetric(const Distribution& contribution, double r, int n) {
    if (n < 1) fail(ErrorCode::BadParams, "market size must be at least 1");
    std::vector<AgentSpec> agents(n, AgentSpec{{1.0}, std::nullopt, contribution});
    return MarketInstance({r}, std::move(agents));
}

bool MarketInstance::identical_rewards(double tol) const {
    for (const auto& a : agents_) {
        for (std::size_t j = 0; j < lambda_.size(); ++j) {
            if (std::abs(a.gamma[j] - agents_.front().gamma[j]) > tol) return false;
        }
    }
    return true;
}

bool MarketInstance::ex_ante_identical(double tol) const {
    if (!identical_rewards(tol)) return false;
    const auto& first = agents_.front().contribution;
    const auto ref = first.to_json();
    for (const auto& a : agents_) {
        if (a.contribution.model_ptr() == first.model_ptr()) continue;
        if (a.contribution.to_json() != ref) return false;
    }
    return true;
}

double MarketInstance::sample_cost(std::size_t i, std::uint64_t seed, std::uint64_t sample) const {
    const auto& a = agents_.at(i);
    const double w = a.contribution.quantile(uniform01(seed, i, sample));
    return std::max(0.0, a.reward - w);
}

std::vector<double> MarketInstance::sample_costs(std::uint64_t seed, std::uint64_t sample) const {
    std::vector<double> c(n());
    for (std::size_t i = 0; i < n(); ++i) c[i] = sample_cost(i, seed, sample);
    return c;
}

nlohmann::json MarketInstance::to_json() const {
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& a : agents_) {
        nlohmann::json j{{"rho", a.rho}};
        if (a.cost) j["cost_dist"] = a.cost->to_json();
        else j["contribution_dist"] = a.contribution.to_json();
        agents.push_back(std::move(j));
    }
    return {{"lambda", lambda_}, {"agents", std::move(agents)}};
}

MarketInstance market_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorCode::BadParams, "instance must be a JSON object");
    try {
        auto agent_dists = [](const nlohmann::json& a, AgentSpec& spec) {
            if (a.contains("cost_dist")) spec.cost = distribution_from_json(a.at("cost_dist"));
            if (a.contains("contribution_dist")) spec.contribution = distribution_from_json(a.at("contribution_dist"));
        };
        if (j.contains("lambda")) {
            auto lambda = j.at("lambda").get<std::vector<double>>();
            std::vector<AgentSpec> agents;
            for (const auto& a : j.at("agents")) {
                AgentSpec spec;
                spec.rho = a.at("rho").get<std::vector<double>>();
                agent_dists(a, spec);
                agents.push_back(std::move(spec));
            }
            return MarketInstance(std::move(lambda), std::move(agents));
        }
        // Shorthand: {"reward": r, "n": n, "cost_dist" | "contribution_dist": {...}}
        const double r = j.at("reward").get<double>();
        const int n = j.at("n").get<int>();
        if (n < 1) fail(ErrorCode::BadParams, "market size must be at least 1");
        AgentSpec spec{{1.0}, std::nullopt, std::nullopt};
        agent_dists(j, spec);
        return MarketInstance({r}, std::vector<AgentSpec>(n, spec));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadParams, std::string("malformed instance: ") + e.what());
    }
}

Contract Contract::linear(double alpha, std::size_t m) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::BadParams, "linear contract share must lie in [0, 1]");
    return {std::vector<double>(m, alpha)};
}

double Contract::share(const std::vector<double>& gamma) const {
    if (gamma.size() != t.size()) fail(ErrorCode::BadParams, "contract length must match the outcome count");
    double s = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) s += t[j] * gamma[j];
    return s;
}

double Contract::principal_share(const std::vector<double>& gamma) const {
    if (gamma.size() != t.size()) fail(ErrorCode::BadParams, "contract length must match the outcome count");
    double s = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) s += (1.0 - t[j]) * gamma[j];
    return s;
}

void Contract::validate(std::size_t m) const {
    if (t.size() != m) fail(ErrorCode::BadParams, "contract length must match the outcome count");
    for (double x : t) {
        if (!(x >= 0.0) || !std::isfinite(x)) fail(ErrorCode::BadParams, "contract shares must be finite and non-negative");
    }
}

nlohmann::json Contract::to_json() const { return {{"t", t}}; }

}  // namespace dmw
