#include <cmath>

#include "doctest.h"
#include "dmw/catalog.hpp"
#include "dmw/error.hpp"
#include "dmw/mechanism.hpp"
#include "oracles.hpp"

using namespace dmw;
using doctest::Approx;

namespace {

MarketInstance example_instance(std::size_t n = 2) {
    const auto g = make_uniform(0.0, 1.0);
    return MarketInstance({4.0, 0.0}, std::vector<AgentSpec>(n, AgentSpec{{0.5, 0.5}, g, std::nullopt}));
}

MarketInstance mixed_instance() {
    // Same expected reward 2, different contribution shapes.
    return MarketInstance({2.0}, {AgentSpec{{1.0}, std::nullopt, make_uniform(1.0, 2.0)},
                                  AgentSpec{{1.0}, std::nullopt, make_uniform(1.2, 2.0)},
                                  AgentSpec{{1.0}, std::nullopt, make_trunc_equal_revenue(0.8, 2.0)}});
}

}  // namespace

TEST_CASE("market instance validation and derived quantities") {
    const auto inst = example_instance();
    CHECK(inst.n() == 2);
    CHECK(inst.m() == 2);
    CHECK(inst.reward(0) == 2.0);
    CHECK(inst.gamma(1)[0] == 2.0);
    CHECK(inst.contribution(0).support_lo() == 1.0);
    CHECK(inst.ex_ante_identical());
    CHECK_THROWS_AS(MarketInstance({4.0}, {AgentSpec{{0.5, 0.4}, make_uniform(0.0, 1.0), std::nullopt}}), Error);
    CHECK_THROWS_AS(MarketInstance({-1.0}, {AgentSpec{{1.0}, make_uniform(0.0, 1.0), std::nullopt}}), Error);
    CHECK_THROWS_AS(MarketInstance({1.0}, {}), Error);
}

TEST_CASE("instance JSON forms") {
    const auto a = market_from_json(nlohmann::json::parse(R"({"lambda": [4, 0], "agents": [
        {"rho": [0.5, 0.5], "cost_dist": {"kind": "uniform", "params": {"lo": 0, "hi": 1}}},
        {"rho": [0.5, 0.5], "cost_dist": {"kind": "uniform", "params": {"lo": 0, "hi": 1}}}]})"));
    CHECK(a.n() == 2);
    CHECK(a.reward(1) == 2.0);
    const auto b = market_from_json(nlohmann::json::parse(
        R"({"reward": 2, "n": 3, "contribution_dist": {"kind": "uniform", "params": {"lo": 1, "hi": 2}}})"));
    CHECK(b.n() == 3);
    CHECK(b.cost_hi(0) == 1.0);
    CHECK_THROWS_AS(market_from_json(nlohmann::json::parse(R"({"lambda": [1]})")), Error);
}

TEST_CASE("virtual welfare maximizer on the running example") {
    const auto inst = example_instance();
    const auto t = Contract::linear(0.5, 2);

    auto o = vwm_run(inst, t, {0.8, 0.9});
    CHECK_FALSE(o.winner.has_value());
    CHECK(o.principal_utility == 0.0);
    CHECK(o.intermediary_utility == 0.0);
    CHECK(o.agent_utilities[0] == 0.0);

    o = vwm_run(inst, t, {0.3, 0.7});
    REQUIRE(o.winner.has_value());
    CHECK(*o.winner == 0);
    CHECK(o.payments[0] == Approx(0.5).epsilon(1e-10));
    CHECK(o.payments[1] == 0.0);
    CHECK(o.principal_utility == Approx(1.0));
    CHECK(o.intermediary_utility == Approx(0.5).epsilon(1e-10));
    CHECK(o.agent_utilities[0] == Approx(0.2).epsilon(1e-10));

    // The agent is paid her critical cost min(0.5, c_2) = 0.4; the buyer in the auction view
    // pays max(0.5, 1 - c_2) = 0.6.
    o = vwm_run(inst, t, {0.3, 0.4});
    REQUIRE(o.winner.has_value());
    CHECK(*o.winner == 0);
    CHECK(o.payments[0] == Approx(0.4).epsilon(1e-10));
    const auto view = to_auction(inst, t, {0.3, 0.4});
    CHECK(view.buyer_payments[0] == Approx(0.6).epsilon(1e-10));
}

TEST_CASE("rejects costs outside the support") {
    try {
        vwm_run(example_instance(), Contract::linear(0.5, 2), {1.5, 0.2});
        FAIL("expected CostOutOfSupport");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CostOutOfSupport);
    }
}

TEST_CASE("auction view") {
    const auto inst = example_instance();
    auto v = to_auction(inst, Contract::linear(0.5, 2), {0.3, 0.7});
    CHECK(v.values[0] == Approx(0.7));
    CHECK(v.values[1] == Approx(0.3));
    CHECK(v.revenue == Approx(0.5).epsilon(1e-10));
    v = to_auction(inst, Contract::linear(0.5, 2), {0.8, 0.9});
    CHECK(v.revenue == 0.0);
    v = to_auction(inst, Contract::linear(1.0, 2), {0.25, 0.6});
    CHECK(v.values[0] == Approx(2.0 - 0.25));
    CHECK(v.values[1] == Approx(2.0 - 0.6));
}

TEST_CASE("anonymous pricing") {
    const auto inst = example_instance();
    const auto t = Contract::linear(0.5, 2);
    int first = 0;
    const int seeds = 10000;
    for (int s = 0; s < seeds; ++s) {
        const auto o = anonymous_run(inst, t, 0.5, {0.3, 0.4}, static_cast<std::uint64_t>(s));
        REQUIRE(o.winner.has_value());
        first += *o.winner == 0;
        CHECK(o.alloc[0] == 0.5);
    }
    CHECK(std::abs(first / double(seeds) - 0.5) <= 0.01);
    CHECK_FALSE(anonymous_run(inst, t, 0.5, {0.8, 0.9}, 1).winner.has_value());
    const auto o = anonymous_run(inst, t, 0.5, {0.3, 0.9}, 1);
    REQUIRE(o.winner.has_value());
    CHECK(*o.winner == 0);
    CHECK(o.payments[0] == 0.5);

    try {
        anonymous_run(mixed_instance(), Contract::linear(0.5, 1), 0.5, {0.3, 0.3, 0.3}, 1);
        FAIL("expected AssumptionViolated");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AssumptionViolated);
    }
}

TEST_CASE("optimal anonymous price") {
    CHECK(optimal_anonymous_price(example_instance(), Contract::linear(0.5, 2)) == Approx(1.0 - 1.0 / std::sqrt(3.0)).epsilon(1e-9));
    const auto single = MarketInstance::symmetric(make_uniform(1.0, 2.0), 2.0, 1);
    CHECK(optimal_anonymous_price(single, Contract::linear(1.0, 1)) == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("single agent: posted price and VWM give the intermediary the same utility") {
    const auto single = MarketInstance::symmetric(make_uniform(1.0, 2.0), 2.0, 1);
    const auto t = Contract::linear(0.7, 1);
    const auto a = simulate_market(single, t, MechanismKind::vwm, 20000, 3);
    const auto b = simulate_market(single, t, MechanismKind::anonymous, 20000, 3);
    CHECK(a.intermediary.mean == Approx(b.intermediary.mean).epsilon(1e-9));
}

TEST_CASE("incentive audits") {
    const auto inst = example_instance();
    const auto t = Contract::linear(0.5, 2);
    auto rep = audit_incentives(MechanismKind::vwm, inst, t, 50, 200, 11);
    CHECK(rep.max_dsic_violation <= 1e-9);
    CHECK(rep.max_ir_violation <= 1e-9);
    CHECK(rep.profiles == 200);
    rep = audit_incentives(MechanismKind::anonymous, inst, t, 50, 200, 11);
    CHECK(rep.max_dsic_violation <= 1e-9);
    CHECK(rep.max_ir_violation <= 1e-9);
    rep = audit_incentives(MechanismKind::first_price_fixture, inst, t, 50, 200, 11);
    CHECK(rep.max_dsic_violation > 0.01);
}

TEST_CASE("pay-your-bid fixture loses to shading on a two-point grid") {
    // Brute force: with true cost 0.1 the agent gains by reporting 0.4 instead.
    const auto inst = example_instance();
    const auto mech = make_mechanism(MechanismKind::first_price_fixture, inst, Contract::linear(0.5, 2));
    const auto truthful = mech->run({0.1, 0.9}, 0);
    const auto shaded = mech->run({0.4, 0.9}, 0);
    const double gain = (shaded.payments[0] - 0.1 * shaded.alloc[0]) - truthful.agent_utilities[0];
    CHECK(gain > 0.01);
}

TEST_CASE("simulation on the running example") {
    const auto inst = example_instance();
    const auto est = simulate_market(inst, Contract::linear(0.5, 2), MechanismKind::vwm, 200000, 5);
    CHECK(std::abs(est.principal.mean - 0.75) <= 3.0 * est.principal.std_error + 1e-12);
    const auto full = simulate_market(inst, Contract::linear(1.0, 2), MechanismKind::vwm, 1000, 5);
    CHECK(full.principal.mean == 0.0);
    CHECK(full.principal.std_error == 0.0);
    const double total = est.principal.mean + est.intermediary.mean + est.agents_total.mean;
    CHECK(total == Approx(est.welfare.mean).epsilon(1e-12));
}

TEST_CASE("simulation is reproducible bit for bit") {
    const auto inst = mixed_instance();
    const auto t = Contract::linear(0.4, 1);
    const auto a = simulate_market(inst, t, MechanismKind::vwm, 9000, 77);
    const auto b = simulate_market(inst, t, MechanismKind::vwm, 9000, 77);
    CHECK(a.to_json().dump() == b.to_json().dump());
    const auto c = simulate_market(inst, t, MechanismKind::vwm, 9000, 78);
    CHECK(a.principal.mean != c.principal.mean);
}

TEST_CASE("VWM winner carries the largest non-negative virtual value") {
    const auto inst = mixed_instance();
    const auto t = Contract::linear(0.6, 1);
    const VirtualWelfareMaximizer vwm(inst, t);
    for (std::uint64_t s = 0; s < 2000; ++s) {
        const auto costs = inst.sample_costs(9, s);
        const auto o = vwm.run(costs);
        double top = -1.0;
        for (std::size_t i = 0; i < inst.n(); ++i) top = std::max(top, vwm.contracted_virtual_value(i, costs[i]));
        if (top < 0.0) {
            CHECK_FALSE(o.winner.has_value());
            continue;
        }
        REQUIRE(o.winner.has_value());
        CHECK(vwm.contracted_virtual_value(*o.winner, costs[*o.winner]) == top);
        // Paid at least her cost and at most her contracted reward.
        const double share = t.share(inst.gamma(*o.winner));
        CHECK(o.payments[*o.winner] >= costs[*o.winner] - 1e-12);
        CHECK(o.payments[*o.winner] <= share + 1e-12);
        double sum = 0.0;
        for (double x : o.alloc) sum += x;
        CHECK(sum <= 1.0 + 1e-12);
    }
}

TEST_CASE("contracts with equal expected shares give equal outcomes") {
    const auto inst = example_instance();
    const Contract a{{0.5, 0.0}};
    const Contract b{{0.5, 0.9}};
    for (std::uint64_t s = 0; s < 500; ++s) {
        const auto costs = inst.sample_costs(4, s);
        CHECK(vwm_run(inst, a, costs).to_json() == vwm_run(inst, b, costs).to_json());
    }
}

TEST_CASE("fixture mechanisms") {
    const auto inst = example_instance();
    const auto never = make_mechanism(MechanismKind::never_assign, inst, Contract::linear(0.5, 2))->run({0.1, 0.2}, 0);
    CHECK_FALSE(never.winner.has_value());
    const auto second = make_mechanism(MechanismKind::second_lowest, inst, Contract::linear(0.0, 2))->run({0.9, 0.95}, 0);
    REQUIRE(second.winner.has_value());
    CHECK(*second.winner == 0);
    CHECK(second.payments[0] == Approx(0.95));
    CHECK(mechanism_from_string("vwm") == MechanismKind::vwm);
    CHECK_THROWS_AS(mechanism_from_string("auction"), Error);
}
