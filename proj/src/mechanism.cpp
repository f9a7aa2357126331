#include "dmw/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmw/error.hpp"
#include "dmw/parallel.hpp"

namespace dmw {

namespace {

constexpr double kCostSlack = 1e-12;

struct Shares {
    std::vector<double> agent;      // <t, gamma_i>
    std::vector<double> principal;  // <1 - t, gamma_i>
};

Shares contract_shares(const MarketInstance& inst, const Contract& t) {
    t.validate(inst.m());
    Shares s;
    for (std::size_t i = 0; i < inst.n(); ++i) {
        s.agent.push_back(t.share(inst.gamma(i)));
        s.principal.push_back(t.principal_share(inst.gamma(i)));
    }
    return s;
}

void check_costs(const MarketInstance& inst, const std::vector<double>& costs) {
    if (costs.size() != inst.n()) fail(ErrorCode::BadParams, "cost profile length must match the agent count");
    for (std::size_t i = 0; i < inst.n(); ++i) {
        const double slack = kCostSlack * std::max(1.0, std::abs(costs[i]));
        if (!(costs[i] >= inst.cost_lo(i) - slack && costs[i] <= inst.cost_hi(i) + slack)) {
            fail(ErrorCode::CostOutOfSupport, "cost of agent " + std::to_string(i) + " lies outside its support");
        }
    }
}

// Fills principal / intermediary / agent utilities from alloc and payments.
void settle(MechanismOutcome& out, const Shares& s, const std::vector<double>& costs) {
    out.principal_utility = 0.0;
    out.intermediary_utility = 0.0;
    out.agent_utilities.assign(costs.size(), 0.0);
    for (std::size_t i = 0; i < costs.size(); ++i) {
        out.principal_utility += s.principal[i] * out.alloc[i];
        out.intermediary_utility += s.agent[i] * out.alloc[i] - out.payments[i];
        out.agent_utilities[i] = out.payments[i] - costs[i] * out.alloc[i];
    }
}

MechanismOutcome empty_outcome(std::size_t n) {
    MechanismOutcome out;
    out.alloc.assign(n, 0.0);
    out.payments.assign(n, 0.0);
    out.agent_utilities.assign(n, 0.0);
    return out;
}

class AnonymousPricing final : public Mechanism {
public:
    AnonymousPricing(const MarketInstance& inst, const Contract& t, double price)
        : shares_(contract_shares(inst, t)), price_(price), n_(inst.n()) {
        if (!inst.ex_ante_identical()) fail(ErrorCode::AssumptionViolated, "anonymous pricing needs ex-ante identical agents");
    }

    MechanismOutcome run(const std::vector<double>& costs, std::uint64_t draw) const override {
        MechanismOutcome out = empty_outcome(n_);
        std::vector<std::size_t> willing;
        for (std::size_t i = 0; i < n_; ++i) {
            if (costs[i] <= price_) willing.push_back(i);
        }
        if (!willing.empty()) {
            const double x = 1.0 / static_cast<double>(willing.size());
            for (std::size_t i : willing) {
                out.alloc[i] = x;
                out.payments[i] = price_ * x;
            }
            const auto pick = static_cast<std::size_t>(uniform01(draw, 0, 0) * static_cast<double>(willing.size()));
            out.winner = willing[std::min(pick, willing.size() - 1)];
        }
        settle(out, shares_, costs);
        return out;
    }

private:
    Shares shares_;
    double price_;
    std::size_t n_;
};

// Lowest reported cost among those worth contracting wins and is paid its own report.
class FirstPriceFixture final : public Mechanism {
public:
    FirstPriceFixture(const MarketInstance& inst, const Contract& t) : shares_(contract_shares(inst, t)) {}

    MechanismOutcome run(const std::vector<double>& costs, std::uint64_t) const override {
        MechanismOutcome out = empty_outcome(costs.size());
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < costs.size(); ++i) {
            if (costs[i] > shares_.agent[i]) continue;
            if (!best || costs[i] < costs[*best]) best = i;
        }
        if (best) {
            out.winner = best;
            out.alloc[*best] = 1.0;
            out.payments[*best] = costs[*best];
        }
        settle(out, shares_, costs);
        return out;
    }

private:
    Shares shares_;
};

// Always assigns the lowest cost and pays the second-lowest cost.
class SecondLowest final : public Mechanism {
public:
    SecondLowest(const MarketInstance& inst, const Contract& t) : shares_(contract_shares(inst, t)) {
        for (std::size_t i = 0; i < inst.n(); ++i) ceiling_ = std::max(ceiling_, inst.cost_hi(i));
    }

    MechanismOutcome run(const std::vector<double>& costs, std::uint64_t) const override {
        MechanismOutcome out = empty_outcome(costs.size());
        std::size_t best = 0;
        for (std::size_t i = 1; i < costs.size(); ++i) {
            if (costs[i] < costs[best]) best = i;
        }
        double second = ceiling_;
        for (std::size_t i = 0; i < costs.size(); ++i) {
            if (i != best) second = std::min(second, costs[i]);
        }
        out.winner = best;
        out.alloc[best] = 1.0;
        out.payments[best] = second;
        settle(out, shares_, costs);
        return out;
    }

private:
    Shares shares_;
    double ceiling_ = 0.0;
};

class NeverAssign final : public Mechanism {
public:
    explicit NeverAssign(const MarketInstance& inst) : n_(inst.n()) {}
    MechanismOutcome run(const std::vector<double>&, std::uint64_t) const override { return empty_outcome(n_); }

private:
    std::size_t n_;
};

}  // namespace

const char* to_string(MechanismKind kind) noexcept {
    switch (kind) {
        case MechanismKind::vwm: return "vwm";
        case MechanismKind::anonymous: return "anonymous";
        case MechanismKind::first_price_fixture: return "first_price_fixture";
        case MechanismKind::second_lowest: return "second_lowest";
        case MechanismKind::never_assign: return "never_assign";
    }
    return "unknown";
}

MechanismKind mechanism_from_string(const std::string& name) {
    for (auto k : {MechanismKind::vwm, MechanismKind::anonymous, MechanismKind::first_price_fixture,
                   MechanismKind::second_lowest, MechanismKind::never_assign}) {
        if (name == to_string(k)) return k;
    }
    fail(ErrorCode::BadParams, "unknown mechanism '" + name + "'");
}

nlohmann::json MechanismOutcome::to_json() const {
    return {{"winner", winner ? nlohmann::json(*winner) : nlohmann::json()},
            {"alloc", alloc},
            {"payments", payments},
            {"principal_utility", principal_utility},
            {"intermediary_utility", intermediary_utility},
            {"agent_utilities", agent_utilities}};
}

VirtualWelfareMaximizer::VirtualWelfareMaximizer(const MarketInstance& inst, const Contract& t) : inst_(inst) {
    const Shares s = contract_shares(inst, t);
    share_ = s.agent;
    principal_share_ = s.principal;
    for (std::size_t i = 0; i < inst.n(); ++i) {
        if (!inst.classification(i).regular) {
            fail(ErrorCode::NotRegular, "agent " + std::to_string(i) + " has an irregular contribution distribution");
        }
    }
}

double VirtualWelfareMaximizer::contracted_virtual_value(std::size_t i, double cost) const {
    // phi_{t,i}(z) = phi_i(z + <1-t, gamma_i>) - <1-t, gamma_i>, evaluated at z + offset = r_i - c_i.
    const auto& f = inst_.contribution(i);
    const double w = std::clamp(inst_.reward(i) - cost, f.support_lo(), f.support_hi());
    return virtual_value(f, w) - principal_share_[i];
}

std::optional<std::size_t> VirtualWelfareMaximizer::allocate(const std::vector<double>& costs) const {
    std::optional<std::size_t> best;
    double best_phi = 0.0;
    for (std::size_t i = 0; i < costs.size(); ++i) {
        const double phi = contracted_virtual_value(i, costs[i]);
        if (phi >= 0.0 && (!best || phi > best_phi)) {
            best = i;
            best_phi = phi;
        }
    }
    return best;
}

MechanismOutcome VirtualWelfareMaximizer::run(const std::vector<double>& costs, std::uint64_t) const {
    check_costs(inst_, costs);
    const std::size_t n = inst_.n();
    std::vector<double> phi(n);
    for (std::size_t i = 0; i < n; ++i) phi[i] = contracted_virtual_value(i, costs[i]);

    MechanismOutcome out = empty_outcome(n);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < n; ++i) {
        if (phi[i] >= 0.0 && (!best || phi[i] > phi[*best])) best = i;
    }
    if (best) {
        const std::size_t i = *best;
        double level = 0.0;
        bool lose_ties = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) level = std::max(level, phi[j]);
        }
        for (std::size_t j = 0; j < i; ++j) lose_ties = lose_ties || (phi[j] >= 0.0 && phi[j] == level);
        // Critical contribution: the winner keeps the task down to this value. When a lower
        // index holds the same level the winner must beat it strictly, otherwise matching suffices.
        const auto& f = inst_.contribution(i);
        const double target = level + principal_share_[i];
        const double critical = lose_ties ? inverse_virtual_value(f, target, AssumeRegular{})
                                          : lower_inverse_virtual_value(f, target, AssumeRegular{});
        out.winner = i;
        out.alloc[i] = 1.0;
        out.payments[i] = inst_.reward(i) - critical;
    }
    settle(out, {share_, principal_share_}, costs);
    return out;
}

std::unique_ptr<Mechanism> make_mechanism(MechanismKind kind, const MarketInstance& inst, const Contract& t) {
    switch (kind) {
        case MechanismKind::vwm: return std::make_unique<VirtualWelfareMaximizer>(inst, t);
        case MechanismKind::anonymous:
            return std::make_unique<AnonymousPricing>(inst, t, optimal_anonymous_price(inst, t));
        case MechanismKind::first_price_fixture: return std::make_unique<FirstPriceFixture>(inst, t);
        case MechanismKind::second_lowest: return std::make_unique<SecondLowest>(inst, t);
        case MechanismKind::never_assign: return std::make_unique<NeverAssign>(inst);
    }
    fail(ErrorCode::BadParams, "unknown mechanism kind");
}

MechanismOutcome vwm_run(const MarketInstance& inst, const Contract& t, const std::vector<double>& costs) {
    return VirtualWelfareMaximizer(inst, t).run(costs);
}

AuctionView to_auction(const MarketInstance& inst, const Contract& t, const std::vector<double>& costs) {
    const auto out = vwm_run(inst, t, costs);
    AuctionView view;
    for (std::size_t i = 0; i < inst.n(); ++i) {
        const double a = t.share(inst.gamma(i));
        view.values.push_back(a - costs[i]);
        view.alloc.push_back(out.alloc[i]);
        view.buyer_payments.push_back(a * out.alloc[i] - out.payments[i]);
        view.revenue += view.buyer_payments.back();
    }
    if (std::abs(view.revenue - out.intermediary_utility) > 1e-12 * std::max(1.0, std::abs(view.revenue))) {
        fail(ErrorCode::AssumptionViolated, "seller revenue differs from the intermediary's utility");
    }
    return view;
}

MechanismOutcome anonymous_run(const MarketInstance& inst, const Contract& t, double price,
                               const std::vector<double>& costs, std::uint64_t seed) {
    check_costs(inst, costs);
    return AnonymousPricing(inst, t, price).run(costs, seed);
}

double optimal_anonymous_price(const MarketInstance& inst, const Contract& t) {
    if (!inst.ex_ante_identical()) fail(ErrorCode::AssumptionViolated, "anonymous pricing needs ex-ante identical agents");
    const double a = t.share(inst.gamma(0));
    const double b = t.principal_share(inst.gamma(0));
    const auto contracted = shift_by_contract(inst.contribution(0), b);
    return a - monopoly_point(power(contracted, static_cast<int>(inst.n()))).theta;
}

AuditReport audit_incentives(MechanismKind kind, const MarketInstance& inst, const Contract& t,
                             int misreport_grid, std::size_t samples, std::uint64_t seed) {
    if (misreport_grid < 10) fail(ErrorCode::BadParams, "misreport grid needs at least 10 points");
    if (samples < 1) fail(ErrorCode::BadParams, "audit needs at least one sample");
    const auto mech = make_mechanism(kind, inst, t);
    const std::size_t n = inst.n();

    std::vector<double> dsic(samples), ir(samples);
    parallel_for(samples, [&](std::size_t s) {
        const auto costs = inst.sample_costs(seed, s);
        const std::uint64_t draw = mechanism_draw(seed, s);
        const auto truthful = mech->run(costs, draw);
        double worst_gain = -std::numeric_limits<double>::infinity();
        double worst_ir = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double honest = truthful.agent_utilities[i];
            worst_ir = std::max(worst_ir, -honest);
            std::vector<double> reports{costs[i]};
            for (int k = 0; k < misreport_grid; ++k) {
                reports.push_back(inst.cost_lo(i) + (inst.cost_hi(i) - inst.cost_lo(i)) * k / (misreport_grid - 1));
            }
            auto lied = costs;
            for (double r : reports) {
                lied[i] = r;
                const auto o = mech->run(lied, draw);
                worst_gain = std::max(worst_gain, o.payments[i] - costs[i] * o.alloc[i] - honest);
            }
        }
        dsic[s] = worst_gain;
        ir[s] = worst_ir;
    });
    AuditReport rep;
    rep.max_dsic_violation = *std::max_element(dsic.begin(), dsic.end());
    rep.max_ir_violation = *std::max_element(ir.begin(), ir.end());
    rep.profiles = samples;
    rep.reports_checked = samples * n * static_cast<std::size_t>(misreport_grid + 1);
    return rep;
}

std::uint64_t mechanism_draw(std::uint64_t seed, std::uint64_t index) {
    return mix64(mix64(seed ^ 0x6d656368616e6973ULL) ^ index);
}

nlohmann::json UtilityEstimate::to_json() const {
    auto est = [](const Estimate& e) { return nlohmann::json{{"mean", e.mean}, {"stderr", e.std_error}}; };
    nlohmann::json agent_list = nlohmann::json::array();
    for (const auto& a : agents) agent_list.push_back(est(a));
    return {{"principal", est(principal)},
            {"intermediary", est(intermediary)},
            {"agents_total", est(agents_total)},
            {"agents", agent_list},
            {"welfare", est(welfare)},
            {"samples", samples},
            {"seed", seed}};
}

UtilityEstimate simulate_market(const MarketInstance& inst, const Contract& t, MechanismKind kind,
                                std::size_t samples, std::uint64_t seed) {
    if (samples < 1) fail(ErrorCode::BadParams, "simulation needs at least one sample");
    const auto mech = make_mechanism(kind, inst, t);
    const std::size_t n = inst.n();
    const std::size_t q = 4 + n;  // principal, intermediary, agents total, welfare, each agent
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (samples + kChunk - 1) / kChunk;

    // Fixed chunk boundaries and an ordered final reduction keep results bit-identical
    // for any worker count.
    std::vector<std::vector<double>> sums(chunks, std::vector<double>(2 * q, 0.0));
    parallel_for(chunks, [&](std::size_t c) {
        auto& acc = sums[c];
        std::vector<double> v(q);
        const std::size_t end = std::min(samples, (c + 1) * kChunk);
        for (std::size_t s = c * kChunk; s < end; ++s) {
            const auto costs = inst.sample_costs(seed, s);
            const auto o = mech->run(costs, mechanism_draw(seed, s));
            double agents_total = 0.0;
            double welfare = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                agents_total += o.agent_utilities[i];
                welfare += o.alloc[i] * (inst.reward(i) - costs[i]);
                v[4 + i] = o.agent_utilities[i];
            }
            v[0] = o.principal_utility;
            v[1] = o.intermediary_utility;
            v[2] = agents_total;
            v[3] = welfare;
            for (std::size_t k = 0; k < q; ++k) {
                acc[k] += v[k];
                acc[q + k] += v[k] * v[k];
            }
        }
    });
    std::vector<double> total(2 * q, 0.0);
    for (const auto& acc : sums) {
        for (std::size_t k = 0; k < 2 * q; ++k) total[k] += acc[k];
    }
    const double N = static_cast<double>(samples);
    auto make = [&](std::size_t k) {
        const double mean = total[k] / N;
        double var = samples > 1 ? (total[q + k] - N * mean * mean) / (N - 1.0) : 0.0;
        return Estimate{mean, std::sqrt(std::max(var, 0.0) / N)};
    };
    UtilityEstimate est;
    est.principal = make(0);
    est.intermediary = make(1);
    est.agents_total = make(2);
    est.welfare = make(3);
    for (std::size_t i = 0; i < n; ++i) est.agents.push_back(make(4 + i));
    est.samples = samples;
    est.seed = seed;
    return est;
}

}  // namespace dmw
