// Property suites over the catalog and seeded random regular / MHR distributions.

#include <cmath>
#include <random>

#include "doctest.h"
#include "dmw/benchmarks.hpp"
#include "dmw/catalog.hpp"
#include "dmw/contract.hpp"
#include "oracles.hpp"

using namespace dmw;
using doctest::Approx;

namespace {

std::vector<oracle::RandomDist> catalog_and_random(std::size_t count, std::uint64_t seed, bool mhr_only) {
    std::vector<oracle::RandomDist> out{{make_uniform(1.0, 2.0), "uniform", true},
                                        {make_cond_exponential(10.0, 2.0), "cond_exponential", true},
                                        {make_cond_exponential(3.0, 5.0), "cond_exponential", true}};
    if (!mhr_only) {
        out.push_back({make_trunc_equal_revenue(1.0, 4.0), "trunc_equal_revenue", false});
        out.push_back({make_staircase(6), "staircase", false});
    }
    for (auto& d : oracle::random_regular(count, seed, mhr_only)) out.push_back(std::move(d));
    return out;
}

std::vector<double> interior_grid(const Distribution& f, int points) {
    std::vector<double> zs;
    const double lo = f.support_lo(), hi = f.support_hi();
    for (int i = 1; i < points; ++i) zs.push_back(lo + (hi - lo) * i / points);
    return zs;
}

double phi_or_nan(const Distribution& f, double z) {
    const double p = f.pdf(z);
    return p > 0.0 ? z - f.ccdf(z) / p : std::nan("");
}

}  // namespace

TEST_CASE("revenue curve slope equals the virtual value") {
    for (const auto& rd : catalog_and_random(20, 1, false)) {
        if (rd.label == "staircase") continue;
        const auto& f = rd.dist;
        for (double q = 0.05; q < 0.95; q += 0.05) {
            if (std::abs(q - f.right_atom()) < 1e-3) continue;
            const double eps = 1e-6;
            const double slope = (revenue_curve(f, q + eps) - revenue_curve(f, q)) / eps;
            const double z = f.tail_quantile(q);
            const double phi = q < f.right_atom() ? f.support_hi() : virtual_value(f, z);
            CHECK_MESSAGE(std::abs(slope - phi) <= 1e-4 * std::max(1.0, std::abs(phi)), rd.label << " q=" << q);
        }
    }
}

TEST_CASE("regular revenue curves are concave") {
    for (const auto& rd : catalog_and_random(20, 2, false)) {
        const auto& f = rd.dist;
        const int N = 400;
        std::vector<double> R(N + 1);
        for (int i = 0; i <= N; ++i) R[i] = revenue_curve(f, static_cast<double>(i) / N);
        for (int i = 1; i < N; ++i) {
            CHECK_MESSAGE(R[i + 1] - 2.0 * R[i] + R[i - 1] <= 1e-9 * std::max(1.0, std::abs(R[i])), rd.label);
        }
    }
}

TEST_CASE("MHR cumulative hazard is convex") {
    for (const auto& rd : catalog_and_random(20, 3, true)) {
        const auto& f = rd.dist;
        const auto zs = interior_grid(f, 300);
        for (std::size_t i = 1; i + 1 < zs.size(); ++i) {
            if (f.ccdf(zs[i + 1]) <= 1e-12) continue;
            const double second = hazard_profile(f, zs[i + 1]).H - 2.0 * hazard_profile(f, zs[i]).H + hazard_profile(f, zs[i - 1]).H;
            CHECK_MESSAGE(second >= -1e-9, rd.label);
        }
    }
}

TEST_CASE("shifting preserves regularity and MHR") {
    for (const auto& rd : catalog_and_random(10, 4, false)) {
        const auto base = classify(rd.dist);
        for (double c : {-1.0, 0.5, 2.0}) {
            const auto s = classify(shift_by_contract(rd.dist, c));
            CHECK(s.regular == base.regular);
            CHECK(s.mhr == base.mhr);
        }
    }
}

TEST_CASE("order-statistic virtual values fall and reserves rise with n") {
    for (const auto& rd : catalog_and_random(10, 5, false)) {
        const auto& f = rd.dist;
        double prev_theta = -1e300;
        for (int n = 1; n <= 8; ++n) {
            const auto a = power(f, n);
            const auto b = power(f, n + 1);
            for (double z : interior_grid(f, 60)) {
                const double pa = phi_or_nan(a, z), pb = phi_or_nan(b, z);
                if (std::isfinite(pa) && std::isfinite(pb)) CHECK(pa >= pb - 1e-9 * std::max(1.0, std::abs(pa)));
            }
            const double theta = monopoly_point(a).theta;
            CHECK_MESSAGE(theta >= prev_theta - 1e-9, rd.label << " n=" << n);
            prev_theta = theta;
        }
    }
}

TEST_CASE("overlap bound between market sizes") {
    for (const auto& rd : catalog_and_random(10, 6, false)) {
        const auto& f = rd.dist;
        for (auto [s, ell] : {std::pair{1, 3}, std::pair{2, 5}}) {
            const double factor = std::ceil(static_cast<double>(ell) / s);
            for (double z : interior_grid(f, 100)) {
                const double F = f.cdf(z);
                for (int n = s; n <= ell; ++n) CHECK(factor * (1.0 - std::pow(F, n)) >= 1.0 - std::pow(F, ell) - 1e-12);
            }
        }
    }
}

TEST_CASE("MHR reserves keep a 1/e share of the positive mass") {
    for (const auto& rd : catalog_and_random(20, 7, true)) {
        const auto& f = rd.dist;
        const double theta = monopoly_point(f).theta;
        CHECK_MESSAGE(f.survival(theta) >= f.survival(0.0) / std::exp(1.0) - 1e-12, rd.label);
    }
}

TEST_CASE("benchmark ordering on random regular instances") {
    for (const auto& rd : oracle::random_regular(50, 8)) {
        const double r = oracle::reward_for(rd.dist);
        for (int n : {1, 2, 5}) {
            const auto rep = ratios(rd.dist, r, n);
            CHECK(rep.u_fb >= rep.u_sb - 1e-9);
            CHECK(rep.u_sb >= rep.u_star - 1e-9);
            CHECK(rep.u_star >= rep.u_posted - 1e-9);
            CHECK(rep.poa >= rep.podm - 1e-9);
            CHECK(rep.podm >= 1.0 - 1e-9);
        }
    }
}

TEST_CASE("second-best equals expected positive virtual welfare") {
    const auto f = make_uniform(1.0, 2.0);
    const auto g = make_cond_exponential(4.0, 3.0);
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (const auto* d : {&f, &g}) {
        for (int n : {1, 3}) {
            oracle::Welford acc;
            for (int s = 0; s < 1'000'000; ++s) {
                double best = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double w = d->quantile(u01(rng));
                    best = std::max(best, virtual_value(*d, w));
                }
                acc.add(best);
            }
            CHECK(std::abs(acc.mean - second_best(*d, n)) <= 3.0 * acc.std_error());
        }
    }
}

TEST_CASE("second-best sits between the order-statistic monopoly revenue and eta times it") {
    for (const auto& rd : oracle::random_regular(50, 9)) {
        for (int n = 1; n <= 8; n += 1) {
            if (n > 2 && rd.label == "trunc_equal_revenue" && n % 3) continue;
            const double rs = monopoly_point(power(rd.dist, n)).r_star;
            const double sb = second_best(rd.dist, n);
            CHECK(rs <= sb + 1e-9);
            CHECK(sb <= kEta * rs + 1e-9);
        }
    }
}

TEST_CASE("MHR first-best is at most e times monopoly revenue") {
    for (const auto& rd : catalog_and_random(20, 10, true)) {
        CHECK_MESSAGE(first_best(rd.dist, 1) <= std::exp(1.0) * monopoly_point(rd.dist).r_star + 1e-9, rd.label);
    }
}

TEST_CASE("truncated equal revenue maximizes first-best for its reserve revenue") {
    for (const auto& rd : oracle::random_regular(40, 11)) {
        const auto& f = rd.dist;
        if (f.support_lo() < 0.0) continue;
        const double rs = monopoly_point(f).r_star;
        const auto ter = make_trunc_equal_revenue(rs, f.support_hi());
        CHECK_MESSAGE(first_best(f, 1) <= first_best(ter, 1) + 1e-9, rd.label);
    }
}

TEST_CASE("computed PoA stays below the asymptotic bound") {
    for (double K : {2.0, 4.0}) {
        const auto f = make_cond_exponential(10.0, K);
        const double f0 = f.cdf(0.0);
        for (int n : {1, 10, 100}) CHECK(ratios(f, 10.0, n).poa <= asymptotic_poa_bound(n, f0) + 1e-6);
    }
}

TEST_CASE("exponential-mixture first-best agrees with simulation") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::exponential_distribution<double> ex(1.0);
    for (double f0 : {0.0, 0.4, 0.8}) {
        for (int n : {1, 4, 10}) {
            oracle::Welford acc;
            for (int s = 0; s < 200'000; ++s) {
                double best = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double x = u01(rng) < f0 ? 0.0 : ex(rng);
                    best = std::max(best, x);
                }
                acc.add(best);
            }
            CHECK(std::abs(acc.mean - fb_exponential_mixture(f0, n)) <= 3.0 * acc.std_error() + 1e-12);
        }
    }
}

TEST_CASE("alpha and threshold identify each other") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const auto dists = oracle::random_regular(100, 13);
    for (const auto& rd : dists) {
        const double r = rd.dist.support_hi() * (1.0 + u01(rng)) + 0.1;
        const int n = 1 + static_cast<int>(rng() % 4);
        const auto sol = optimize_contract_iid(rd.dist, r, n);
        if (sol.utility <= 0.0) continue;
        CHECK_MESSAGE(std::abs(threshold_for_alpha(rd.dist, r, sol.alpha) - sol.threshold_z) <= 1e-8, rd.label);
        CHECK(std::abs(sol.alpha - (1.0 - virtual_value(rd.dist, sol.threshold_z) / r)) <= 1e-8);
    }
}

TEST_CASE("reserves move continuously with alpha") {
    for (const auto& f : {make_uniform(1.0, 2.0), make_cond_exponential(5.0, 2.0)}) {
        const double r = f.support_hi();
        const int N = 10'000;
        double prev = threshold_for_alpha(f, r, 0.0) - r;
        double worst = 0.0;
        for (int i = 1; i <= N; ++i) {
            const double a = static_cast<double>(i) / N;
            const double theta = threshold_for_alpha(f, r, a) - (1.0 - a) * r;
            worst = std::max(worst, std::abs(theta - prev));
            prev = theta;
        }
        CHECK(worst <= 2.0 * r / N);
    }
}
