// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dmw/benchmarks.hpp"
#include "dmw/catalog.hpp"
#include "dmw/contract.hpp"
#include "dmw/market.hpp"
#include "dmw/mechanism.hpp"
#include "oracles.hpp"

using namespace dmw;

namespace {

namespace ex = oracle::example1;

const double kE = std::exp(1.0);

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

bool near(double got, double want, double tol) { return std::abs(got - want) <= tol; }

MarketInstance example_costs(std::size_t n = 2) {
    // Reward 4 on the good outcome with probability 1/2, costs U[0, 1]: contributions U[1, 2].
    return MarketInstance({4.0, 0.0}, std::vector<AgentSpec>(n, AgentSpec{{0.5, 0.5}, make_uniform(0.0, 1.0), std::nullopt}));
}

Check c1() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const auto f = make_uniform(1.0, 2.0);
    const auto sol = optimize_contract_iid(f, 2.0, 2);
    const auto rep = ratios(f, 2.0, 2);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(near(sol.alpha, ex::alpha_star, 1e-8), fmt("alpha %.12g", sol.alpha));
    c.require(near(sol.utility, ex::u_star, 1e-8), fmt("U* %.12g", sol.utility));
    c.require(near(sol.threshold_z, ex::z_star, 1e-8), fmt("z* %.12g", sol.threshold_z));
    c.require(near(rep.u_fb, ex::u_fb, 1e-8), fmt("U_fb %.12g", rep.u_fb));
    c.require(near(rep.u_sb, ex::u_sb, 1e-8), fmt("U_sb %.12g", rep.u_sb));
    c.require(near(rep.poa, ex::poa, 1e-8), fmt("PoA %.12g", rep.poa));
    c.require(near(rep.podm, ex::podm, 1e-8), fmt("PoDM %.12g", rep.podm));
    c.require(secs < 1.0, fmt("runtime %.3g s", secs));
    if (c.ok) c.detail = fmt("alpha*=%.10f U*=%.10f PoA=%.10f", sol.alpha, sol.utility, rep.poa);
    return c;
}

Check c2() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const auto inst = example_costs();
    const auto at_star = simulate_market(inst, Contract::linear(ex::alpha_star, 2), MechanismKind::vwm, 1'000'000, 2024);
    const auto at_half = simulate_market(inst, Contract::linear(0.5, 2), MechanismKind::vwm, 1'000'000, 2025);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& p = at_star.principal;
    const auto& h = at_half.principal;
    c.require(std::abs(p.mean - ex::u_star) <= 3.0 * p.std_error, fmt("alpha*: %.6f +- %.2g", p.mean, p.std_error));
    c.require(p.std_error < 1e-3, fmt("stderr %.3g", p.std_error));
    c.require(std::abs(h.mean - 0.75) <= 3.0 * h.std_error, fmt("alpha=0.5: %.6f +- %.2g", h.mean, h.std_error));
    c.require(secs < 30.0, fmt("runtime %.3g s", secs));
    if (c.ok) c.detail = fmt("U*~%.5f (se %.1e), alpha=0.5 ~%.5f", p.mean, p.std_error, h.mean);
    return c;
}

Check c3() {
    Check c;
    std::vector<double> podm;
    for (int K : {4, 6, 10}) {
        const auto f = make_staircase(K);
        const auto rep = ratios(f, staircase_breakpoint(K, 0), 1);
        c.require(near(rep.u_star, oracle::staircase_u_star(K), 1e-10), fmt("K=%g U*=%.12g", K, rep.u_star));
        c.require(near(rep.u_sb, 1.0, 1e-10), fmt("K=%g U_sb=%.12g", K, rep.u_sb));
        c.require(near(rep.podm, oracle::staircase_podm(K), 1e-9), fmt("K=%g PoDM=%.12g", K, rep.podm));
        podm.push_back(rep.podm);
    }
    // Linear growth in K: equal increments per unit of K up to the vanishing 2^{1-K} term.
    const double s1 = (podm[1] - podm[0]) / 2.0, s2 = (podm[2] - podm[1]) / 4.0;
    c.require(s1 > 0.4 && s2 > 0.4 && std::abs(s1 - s2) < 0.05, fmt("slopes %.4f %.4f", s1, s2));
    if (c.ok) c.detail = fmt("PoDM(4,6,10) = %.6f %.6f %.6f", podm[0], podm[1], podm[2]);
    return c;
}

Check c4() {
    Check c;
    const double r = 10.0;
    const int n = 2;
    const double K = std::pow(n, r + 1) / -std::expm1(-r);
    const auto rep = ratios(make_cond_exponential(r, K), r, n);
    c.require(rep.poa >= kE * kE - 0.05 && rep.poa <= kE * kE, fmt("PoA %.8f", rep.poa));
    c.require(rep.podm >= kE - 0.05 && rep.podm <= kE, fmt("PoDM %.8f", rep.podm));
    if (c.ok) c.detail = fmt("PoA=%.6f PoDM=%.6f", rep.poa, rep.podm);
    return c;
}

Check c5() {
    // Published bound table for n = 2..44.
    const std::vector<double> published{
        3.000, 3.025, 3.031, 3.032, 3.033, 3.033, 3.033, 3.032, 3.032, 3.032, 3.032, 3.031, 3.031, 3.031, 3.030,
        3.029, 3.027, 3.025, 3.023, 3.022, 3.019, 3.017, 3.015, 3.013, 3.011, 3.009, 3.007, 3.005, 3.003, 3.001,
        2.998, 2.997, 2.995, 2.993, 2.991, 2.989, 2.987, 2.986, 2.984, 2.982, 2.980, 2.979, 2.977};
    Check c;
    const auto taus = load_taus(default_taus_path());
    const auto rows = podm_upper_table(taus.taus, 44);
    c.require(rows.size() == published.size(), "row count");
    double worst = 0.0, top = 0.0;
    int top_n = 0;
    for (std::size_t k = 0; k < rows.size() && k < published.size(); ++k) {
        worst = std::max(worst, std::abs(rows[k].bound - published[k]));
        if (rows[k].bound > top + 1e-12) {
            top = rows[k].bound;
            top_n = rows[k].n;
        }
    }
    c.require(worst <= 1e-3, fmt("max deviation %.3g", worst));
    c.require(near(rows[5].bound, 3.033, 1e-3), fmt("n=7 bound %.6f", rows[5].bound));
    c.require(near(top, 3.033, 1e-3), fmt("maximum %.6f", top));
    if (c.ok) c.detail = fmt("max deviation %.2e, n=7 bound %.6f, max %.6f", worst, rows[5].bound, top) + " at n=" + std::to_string(top_n);
    return c;
}

Check c6() {
    Check c;
    const auto f = make_cond_exponential(10.0, 2.0);
    std::vector<double> bounds;
    for (int n : {10, 100, 1000}) {
        const double poa = ratios(f, 10.0, n).poa;
        const double b = asymptotic_poa_bound(n, 0.5);
        c.require(poa <= b + 1e-6, "n=" + std::to_string(n) + fmt(" PoA %.6f > bound %.6f", poa, b));
        c.require(b > 1.0, "bound not above 1");
        bounds.push_back(b);
    }
    c.require(bounds[2] < bounds[1] && bounds[1] < bounds[0], "bounds not decreasing");
    if (c.ok) c.detail = fmt("bounds %.4f > %.4f > %.4f", bounds[0], bounds[1], bounds[2]);
    return c;
}

Check c7() {
    Check c;
    struct Case {
        std::string name;
        MarketInstance inst;
        Contract t;
    };
    const std::vector<Case> cases{
        {"uniform costs", example_costs(), Contract::linear(0.5, 2)},
        {"heterogeneous", MarketInstance({2.0}, {AgentSpec{{1.0}, std::nullopt, make_uniform(1.0, 2.0)},
                                                 AgentSpec{{1.0}, std::nullopt, make_uniform(1.2, 2.0)},
                                                 AgentSpec{{1.0}, std::nullopt, make_trunc_equal_revenue(0.8, 2.0)}}),
         Contract::linear(0.4, 1)},
        {"cond_exponential", MarketInstance::symmetric(make_cond_exponential(10.0, 2.0), 10.0, 3), Contract::linear(0.3, 1)},
    };
    double worst = 0.0, fixture = 0.0;
    for (const auto& cs : cases) {
        // Anonymous pricing is only defined for ex-ante identical agents.
        std::vector<MechanismKind> kinds{MechanismKind::vwm};
        if (cs.inst.ex_ante_identical()) kinds.push_back(MechanismKind::anonymous);
        for (auto kind : kinds) {
            const auto rep = audit_incentives(kind, cs.inst, cs.t, 50, 200, 31);
            worst = std::max({worst, rep.max_dsic_violation, rep.max_ir_violation});
            c.require(rep.max_dsic_violation <= 1e-9 && rep.max_ir_violation <= 1e-9,
                      cs.name + " " + to_string(kind) + fmt(" violations %.3g / %.3g", rep.max_dsic_violation, rep.max_ir_violation));
        }
        fixture = std::max(fixture, audit_incentives(MechanismKind::first_price_fixture, cs.inst, cs.t, 50, 200, 31).max_dsic_violation);
    }
    c.require(fixture > 0.01, fmt("fixture violation %.3g", fixture));
    if (c.ok) c.detail = fmt("worst VWM/anonymous violation %.2e, fixture %.3f", worst, fixture);
    return c;
}

Check c8() {
    Check c;
    std::size_t checked = 0;
    for (const auto& rd : oracle::random_regular(50, 808)) {
        const double r = oracle::reward_for(rd.dist);
        for (int n : {1, 3}) {
            const auto rep = ratios(rd.dist, r, n);
            const bool ordered = rep.u_fb >= rep.u_sb - 1e-9 && rep.u_sb >= rep.u_star - 1e-9 && rep.u_star >= rep.u_posted - 1e-9 &&
                                 rep.poa >= rep.podm - 1e-9 && rep.podm >= 1.0 - 1e-9;
            c.require(ordered, rd.label + " n=" + std::to_string(n));
            ++checked;
        }
    }
    const auto posted = optimize_contract_posted(make_uniform(1.0, 2.0), 2.0, 2);
    const auto grid = oracle::grid_max(oracle::posted_uniform12_n2, 1.0 + 1e-9, 2.0, 1'000'000);
    c.require(near(posted.utility, grid.value, 1e-3), fmt("posted %.6f vs grid %.6f", posted.utility, grid.value));
    c.require(near(posted.utility, 0.696, 1e-3), fmt("posted %.6f", posted.utility));
    if (c.ok) c.detail = std::to_string(checked) + " orderings hold" + fmt(", U_posted=%.6f (grid %.6f)", posted.utility, grid.value);
    return c;
}

Check c9() {
    Check c;
    std::vector<oracle::RandomDist> dists{{make_uniform(1.0, 2.0), "uniform", true},
                                          {make_cond_exponential(10.0, 2.0), "cond_exponential", true},
                                          {make_trunc_equal_revenue(1.0, 4.0), "trunc_equal_revenue", false},
                                          {make_staircase(6), "staircase", false}};
    for (auto& d : oracle::random_regular(20, 909)) dists.push_back(std::move(d));
    for (auto& d : oracle::random_regular(20, 910, true)) dists.push_back(std::move(d));

    std::size_t fails_before = 0;
    auto tally = [&](bool cond, const std::string& what) {
        if (!cond) ++fails_before;
        c.require(cond, what);
    };

    for (const auto& rd : dists) {
        const auto& f = rd.dist;
        const double lo = f.support_lo(), hi = f.support_hi();
        std::vector<double> zs;
        for (int i = 1; i < 60; ++i) zs.push_back(lo + (hi - lo) * i / 60.0);

        // Order-statistic virtual values fall with n while reserves rise.
        double prev_theta = -1e300;
        for (int n = 1; n <= 8; ++n) {
            const auto a = power(f, n), b = power(f, n + 1);
            for (double z : zs) {
                if (a.pdf(z) <= 0.0 || b.pdf(z) <= 0.0) continue;
                const double pa = z - a.ccdf(z) / a.pdf(z), pb = z - b.ccdf(z) / b.pdf(z);
                tally(pa >= pb - 1e-9 * std::max(1.0, std::abs(pa)), rd.label + " virtual value order");
            }
            const double theta = monopoly_point(a).theta;
            tally(theta >= prev_theta - 1e-9, rd.label + " reserve order");
            prev_theta = theta;
        }

        // Overlap bound across market sizes.
        for (auto [s, ell] : {std::pair{1, 3}, std::pair{2, 5}}) {
            const double factor = std::ceil(static_cast<double>(ell) / s);
            for (double z : zs) {
                const double F = f.cdf(z);
                for (int n = s; n <= ell; ++n) tally(factor * (1.0 - std::pow(F, n)) >= 1.0 - std::pow(F, ell) - 1e-12, rd.label + " overlap");
            }
        }

        if (rd.mhr) {
            const auto m = monopoly_point(f);
            tally(f.survival(m.theta) >= f.survival(0.0) / kE - 1e-12, rd.label + " reserve tail");
            tally(first_best(f, 1) <= kE * m.r_star + 1e-9, rd.label + " first-best vs e R*");
        }
        if (lo >= 0.0) {
            const double rs = monopoly_point(f).r_star;
            tally(first_best(f, 1) <= first_best(make_trunc_equal_revenue(rs, hi), 1) + 1e-9, rd.label + " equal-revenue dominance");
        }
    }

    // Exponential mixtures: closed form against simulation.
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::exponential_distribution<double> ex1(1.0);
    for (double f0 : {0.0, 0.5, 0.9}) {
        for (int n : {1, 5, 20}) {
            oracle::Welford acc;
            for (int s = 0; s < 200'000; ++s) {
                double best = 0.0;
                for (int i = 0; i < n; ++i) best = std::max(best, u01(rng) < f0 ? 0.0 : ex1(rng));
                acc.add(best);
            }
            const double want = fb_exponential_mixture(f0, n);
            tally(near(want, h_hat(n, 1.0 - f0), 1e-15), "mixture identity");
            tally(std::abs(acc.mean - want) <= 3.0 * acc.std_error(), fmt("mixture f0=%g n=%g: %.5f", f0, n, acc.mean));
        }
    }
    if (c.ok) c.detail = std::to_string(dists.size()) + " distributions, all property suites hold";
    return c;
}

Check c10() {
    Check c;
    const auto f = make_uniform(1.0, 2.0);
    const auto d = robust_contract(f, 2.0, 1, 2, RobustRegime::regular_design_for_ell);
    // Hand arithmetic: the n = 2 threshold used with one agent; U_sb(1) = R* = 1.
    const double z = ex::z_star;
    const double oracle_podm = 1.0 / ((2.0 * z - 2.0) * (2.0 - z));
    c.require(near(d.worst_podm, oracle_podm, 1e-3), fmt("worst PoDM %.6f vs %.6f", d.worst_podm, oracle_podm));
    c.require(near(d.worst_podm, 2.049, 1e-3), fmt("worst PoDM %.6f", d.worst_podm));
    const double kappa = f.support_hi() / f.support_lo();
    const double bound = (2.0 / 1.0) * 8.0 * kEta * (1.0 + std::log(kappa));
    c.require(d.worst_podm <= bound, fmt("bound %.4f", bound));

    const auto deg = robust_contract(f, 2.0, 2, 2, RobustRegime::regular_design_for_ell);
    c.require(near(deg.alpha, ex::alpha_star, 1e-8) && near(deg.worst_podm, ex::podm, 1e-8) && near(deg.worst_poa, ex::poa, 1e-8),
              fmt("degenerate alpha %.10f PoDM %.10f", deg.alpha, deg.worst_podm));
    if (c.ok) c.detail = fmt("worst PoDM %.6f (oracle %.6f), bound %.3f", d.worst_podm, oracle_podm, bound);
    return c;
}

}  // namespace

int main() {
    const std::vector<std::function<Check()>> criteria{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10};
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        Check c;
        try {
            c = criteria[k]();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("threw: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!c.ok) ++failed;
        std::printf("%s criterion %zu: %s [%.2f s]\n", c.ok ? "PASS" : "FAIL", k + 1, c.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
