#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dmw/estimate.hpp"
#include "dmw/market.hpp"

namespace dmw {

enum class MechanismKind {
    vwm,
    anonymous,
    // Test fixtures: pay-your-bid, lowest cost at the second-lowest cost, and never assigning.
    first_price_fixture,
    second_lowest,
    never_assign,
};

const char* to_string(MechanismKind kind) noexcept;
MechanismKind mechanism_from_string(const std::string& name);

// Allocation and money for one cost profile. Utilities are expectations over any
// internal randomization; winner is the realized draw.
struct MechanismOutcome {
    std::optional<std::size_t> winner;
    std::vector<double> alloc;
    std::vector<double> payments;
    double principal_utility = 0.0;
    double intermediary_utility = 0.0;
    std::vector<double> agent_utilities;

    nlohmann::json to_json() const;
};

class Mechanism {
public:
    virtual ~Mechanism() = default;
    // draw keys the mechanism's own randomness, if any.
    virtual MechanismOutcome run(const std::vector<double>& costs, std::uint64_t draw) const = 0;
};

std::unique_ptr<Mechanism> make_mechanism(MechanismKind kind, const MarketInstance& inst, const Contract& t);

// Highest non-negative contracted virtual value wins (lowest index on ties) and is paid
// her critical cost.
class VirtualWelfareMaximizer final : public Mechanism {
public:
    VirtualWelfareMaximizer(const MarketInstance& inst, const Contract& t);

    MechanismOutcome run(const std::vector<double>& costs, std::uint64_t draw = 0) const override;
    // Contracted virtual value phi_{t,i}(<t, gamma_i> - c_i).
    double contracted_virtual_value(std::size_t i, double cost) const;
    std::optional<std::size_t> allocate(const std::vector<double>& costs) const;

private:
    MarketInstance inst_;
    std::vector<double> share_;
    std::vector<double> principal_share_;
};

MechanismOutcome vwm_run(const MarketInstance& inst, const Contract& t, const std::vector<double>& costs);

struct AuctionView {
    std::vector<double> values;
    std::vector<double> alloc;
    std::vector<double> buyer_payments;
    double revenue = 0.0;
};

// Equivalent single-item auction: buyer values <t, gamma_i> - c_i, payments <t, gamma_i> x_i - p_i.
AuctionView to_auction(const MarketInstance& inst, const Contract& t, const std::vector<double>& costs);

MechanismOutcome anonymous_run(const MarketInstance& inst, const Contract& t, double price,
                               const std::vector<double>& costs, std::uint64_t seed);
double optimal_anonymous_price(const MarketInstance& inst, const Contract& t);

struct AuditReport {
    double max_dsic_violation = 0.0;
    double max_ir_violation = 0.0;
    std::size_t profiles = 0;
    std::size_t reports_checked = 0;
};

AuditReport audit_incentives(MechanismKind kind, const MarketInstance& inst, const Contract& t,
                             int misreport_grid, std::size_t samples, std::uint64_t seed);

struct UtilityEstimate {
    Estimate principal;
    Estimate intermediary;
    Estimate agents_total;
    std::vector<Estimate> agents;
    // Realized contribution of the assigned agent, zero when nobody is assigned.
    Estimate welfare;
    std::size_t samples = 0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

UtilityEstimate simulate_market(const MarketInstance& inst, const Contract& t, MechanismKind kind,
                                std::size_t samples, std::uint64_t seed);

// Key for a mechanism's internal randomness on Monte-Carlo sample `index`.
std::uint64_t mechanism_draw(std::uint64_t seed, std::uint64_t index);

}  // namespace dmw
