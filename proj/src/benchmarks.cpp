#include "dmw/benchmarks.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "dmw/catalog.hpp"
#include "dmw/contract.hpp"
#include "dmw/error.hpp"
#include "dmw/market.hpp"
#include "dmw/mechanism.hpp"
#include "dmw/numeric.hpp"

namespace dmw {

namespace {

constexpr double kQuadTol = 1e-10;

double finite_top(const Distribution& f) {
    bool capped = false;
    const double hi = search_hi(f, {}, &capped);
    if (capped) fail(ErrorCode::UnboundedSupport, "benchmark integrals need a bounded support");
    return hi;
}

// 1 - F(z)^n without cancellation
double one_minus_power(const Distribution& f, int n, double z) {
    const double c = f.ccdf(z);
    if (c >= 1.0) return 1.0;
    return -std::expm1(n * std::log1p(-c));
}

void check_n(int n) {
    if (n < 1) fail(ErrorCode::BadParams, "market size must be at least 1");
}

}  // namespace

double first_best(const Distribution& f, int n) {
    check_n(n);
    const double hi = finite_top(f);
    if (hi <= 0.0) return 0.0;
    const double a = std::max(0.0, f.support_lo());
    return a + num::integrate([&](double z) { return one_minus_power(f, n, z); }, a, hi, f.kinks(), kQuadTol);
}

double second_best(const Distribution& f, int n) {
    check_n(n);
    const double hi = finite_top(f);
    const double atom_n = -std::expm1(n * std::log1p(-f.right_atom()));
    if (f.degenerate()) return std::max(hi, 0.0);
    if (!classify(f).regular) fail(ErrorCode::NotRegular, "second-best benchmark needs a regular distribution");

    const double theta0 = inverse_virtual_value(f, 0.0, AssumeRegular{});
    const double lo = std::max(f.support_lo(), theta0);
    // (phi(z))^+ times the density of F^n, written without dividing by f.
    auto integrand = [&](double z) {
        const double g = z * f.pdf(z) - f.ccdf(z);
        if (!(g > 0.0)) return 0.0;
        return g * n * std::exp((n - 1) * std::log1p(-f.ccdf(z)));
    };
    auto bps = f.kinks();
    bps.push_back(theta0);
    return num::integrate(integrand, lo, hi, bps, kQuadTol) + std::max(hi, 0.0) * atom_n;
}

nlohmann::json RatioReport::to_json() const {
    auto field = [](double v, Estimator e) { return nlohmann::json{{"value", v}, {"estimator", to_string(e)}}; };
    return {{"u_fb", field(u_fb, fb_estimator)},
            {"u_sb", field(u_sb, sb_estimator)},
            {"u_star", field(u_star, star_estimator)},
            {"u_posted", field(u_posted, posted_estimator)},
            {"podm", podm},
            {"poa", poa},
            {"podm_posted", podm_posted},
            {"poa_posted", poa_posted},
            {"z_star", z_star},
            {"alpha_star", alpha_star},
            {"z_posted", z_posted},
            {"alpha_posted", alpha_posted}};
}

RatioReport ratios(const Distribution& f, double r, int n) {
    RatioReport rep;
    const auto star = optimize_contract_iid(f, r, n);
    const auto posted = optimize_contract_posted(f, r, n);
    rep.u_fb = first_best(f, n);
    rep.u_sb = second_best(f, n);
    rep.u_star = star.utility;
    rep.u_posted = posted.utility;
    rep.z_star = star.threshold_z;
    rep.alpha_star = star.alpha;
    rep.z_posted = posted.threshold_z;
    rep.alpha_posted = posted.alpha;
    constexpr double inf = std::numeric_limits<double>::infinity();
    rep.podm = rep.u_star > 0.0 ? rep.u_sb / rep.u_star : inf;
    rep.poa = rep.u_star > 0.0 ? rep.u_fb / rep.u_star : inf;
    rep.podm_posted = rep.u_posted > 0.0 ? rep.u_sb / rep.u_posted : inf;
    rep.poa_posted = rep.u_posted > 0.0 ? rep.u_fb / rep.u_posted : inf;
    return rep;
}

OrderStatSummary order_stat_summary(const Distribution& f, int n) {
    check_n(n);
    const double lo = f.support_lo();
    const double hi = finite_top(f);
    OrderStatSummary out;
    out.n = n;
    out.mu = lo + num::integrate([&](double z) { return one_minus_power(f, n, z); }, lo, hi, f.kinks(), kQuadTol);
    return out;
}

double harmonic(int n) {
    if (n < 0) fail(ErrorCode::BadParams, "harmonic number needs n >= 0");
    double h = 0.0;
    for (int k = n; k >= 1; --k) h += 1.0 / k;
    return h;
}

double h_hat(int n, double t) {
    if (n < 0) fail(ErrorCode::BadParams, "h_hat needs n >= 0");
    if (!(t >= 0.0 && t <= 1.0)) fail(ErrorCode::BadParams, "h_hat needs t in [0, 1]");
    const double log_keep = std::log1p(-t);
    double h = 0.0;
    for (int k = n; k >= 1; --k) h += -std::expm1(k * log_keep) / k;
    return h;
}

double fb_exponential_mixture(double f0, int n) {
    if (!(f0 >= 0.0 && f0 < 1.0)) fail(ErrorCode::BadParams, "F(0) must lie in [0, 1)");
    check_n(n);
    return h_hat(n, 1.0 - f0);
}

double z_factor(int n, double z) {
    check_n(n);
    if (!(z >= 0.0 && z < 1.0)) fail(ErrorCode::BadParams, "Z_n needs z in [0, 1)");
    const double num = z == 0.0 ? 1.0 : -std::expm1(n * std::log(z));
    const double den = -std::expm1(n * std::log1p(-(1.0 - z) / std::exp(1.0)));
    return num / den;
}

TauTable taus_from_json(const nlohmann::json& j) {
    TauTable t;
    try {
        t.first_n = j.value("first_n", 2);
        t.version = j.value("version", "");
        t.source = j.value("source", "");
        t.taus = j.at("taus").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadParams, std::string("malformed tau table: ") + e.what());
    }
    if (t.first_n != 2) fail(ErrorCode::BadParams, "tau table must start at n = 2");
    for (double v : t.taus) {
        if (!(v >= 1.0) || !std::isfinite(v)) fail(ErrorCode::BadParams, "tau values must be finite and at least 1");
    }
    return t;
}

TauTable load_taus(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::BadParams, "cannot open tau table '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadParams, "tau table '" + path + "' is not valid JSON: " + e.what());
    }
    return taus_from_json(j);
}

std::string default_taus_path() { return std::string(DMW_DATA_DIR) + "/taus.json"; }

std::vector<PodmBoundRow> podm_upper_table(const std::vector<double>& taus, int n_max) {
    if (n_max < 2) fail(ErrorCode::BadRange, "the bound table starts at n = 2");
    if (static_cast<std::size_t>(n_max) > taus.size() + 1) {
        fail(ErrorCode::MissingTau, "no tau value for n = " + std::to_string(taus.size() + 2));
    }
    std::vector<PodmBoundRow> rows;
    const double log_base = std::log1p(-1.0 / std::exp(1.0));
    for (int n = 2; n <= n_max; ++n) {
        const double z = std::exp(log_base / n);
        const double tau = taus[static_cast<std::size_t>(n - 2)];
        rows.push_back({n, tau, z, tau * z_factor(n, z)});
    }
    return rows;
}

double asymptotic_poa_bound(int n, double f0) {
    check_n(n);
    if (!(f0 >= 0.0 && f0 < 1.0)) fail(ErrorCode::BadParams, "F(0) must lie in [0, 1)");
    const double h = harmonic(n);
    const double lh = std::log(h);
    const double first = 1.0 / (1.0 - lh / h);
    const double p = (1.0 - f0) * std::exp(-(h - lh + 1.0));
    const double second = 1.0 / -std::expm1(n * std::log1p(-p));
    return first * second;
}

nlohmann::json NonmonotonicityReport::to_json() const {
    return {{"u_unrestricted", u_unrestricted},
            {"u_never_assign", u_never_assign},
            {"u_second_lowest", u_second_lowest},
            {"second_lowest_stderr", second_lowest_std_error},
            {"alpha_probe", alpha_probe},
            {"samples", samples},
            {"seed", seed},
            {"restriction_hurts", restriction_hurts},
            {"restriction_helps", restriction_helps}};
}

NonmonotonicityReport nonmonotonicity_demo(std::size_t samples, std::uint64_t seed) {
    // Two agents, reward 4 on the good outcome reached with probability 1/2, costs U[0, 1].
    const Distribution cost = make_uniform(0.0, 1.0);
    const MarketInstance inst({4.0, 0.0}, {AgentSpec{{0.5, 0.5}, cost, std::nullopt},
                                           AgentSpec{{0.5, 0.5}, cost, std::nullopt}});

    NonmonotonicityReport rep;
    rep.samples = samples;
    rep.seed = seed;
    rep.alpha_probe = 1e-6;
    rep.u_unrestricted = optimize_contract_iid(inst.contribution(0), inst.reward(0), 2).utility;

    // Never assigning pays the principal nothing at any contract, so its optimum is 0.
    const auto never = simulate_market(inst, Contract::linear(0.5, 2), MechanismKind::never_assign, samples, seed);
    rep.u_never_assign = never.principal.mean;

    // The second-lowest rule assigns regardless of t, so the principal keeps almost all of r.
    const auto second = simulate_market(inst, Contract::linear(rep.alpha_probe, 2), MechanismKind::second_lowest,
                                        samples, seed);
    rep.u_second_lowest = second.principal.mean;
    rep.second_lowest_std_error = second.principal.std_error;
    rep.restriction_hurts = rep.u_never_assign < rep.u_unrestricted;
    rep.restriction_helps = rep.u_second_lowest > rep.u_unrestricted;
    return rep;
}

}  // namespace dmw
