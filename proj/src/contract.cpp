#include "dmw/contract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dmw/benchmarks.hpp"
#include "dmw/error.hpp"
#include "dmw/numeric.hpp"
#include "dmw/parallel.hpp"

namespace dmw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kThresholdGrid = 8192;

// phi with the atom convention at the top and -inf where the density vanishes.
double phi_at(const Distribution& f, double z) {
    if (z >= f.support_hi()) return f.support_hi();
    const double p = f.pdf(z);
    if (!(p > 0.0)) return -kInf;
    return z - f.ccdf(z) / p;
}

// P(max of n draws >= z) = 1 - P(w < z)^n
double any_clears(const Distribution& f, int n, double z) {
    const double s = f.survival(z);
    if (s >= 1.0) return 1.0;
    return -std::expm1(n * std::log1p(-s));
}

void require_regular(const Distribution& f) {
    if (!classify(f).regular) fail(ErrorCode::NotRegular, "the contribution distribution is not regular");
}

void require_below_reward(const Distribution& f, double r) {
    if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorCode::BadParams, "reward must be positive and finite");
    if (f.support_hi() > r * (1.0 + 1e-12)) {
        fail(ErrorCode::BadParams, "contribution support must lie below the reward");
    }
}

double vv_objective(const Distribution& phi_src, const Distribution& f, int n, double z) {
    const double s = any_clears(f, n, z);
    if (s == 0.0) return 0.0;
    return phi_at(phi_src, z) * s;
}

// Shared program behind the discriminatory and the posted variant: maximize
// phi_src(z) * P(max >= z) over the support and read alpha off phi_src(z*) = (1 - alpha) r.
ContractSolution solve_threshold_program(const Distribution& phi_src, const Distribution& f, double r, int n) {
    if (n < 1) fail(ErrorCode::BadParams, "market size must be at least 1");
    require_below_reward(f, r);
    bool capped = false;
    const double lo = f.support_lo();
    const double hi = search_hi(f, {}, &capped);
    if (!std::isfinite(lo)) fail(ErrorCode::UnboundedSupport, "support must have a finite floor");

    num::MaximizeOptions opts;
    opts.grid = kThresholdGrid;
    opts.breakpoints = f.kinks();
    const auto best = num::maximize_largest([&](double z) { return vv_objective(phi_src, f, n, z); }, lo, hi, opts);

    ContractSolution sol;
    const double phi = std::max(phi_at(phi_src, best.arg), 0.0);
    sol.alpha = std::clamp(1.0 - phi / r, 0.0, 1.0);
    sol.contract = Contract::linear(sol.alpha, 1);
    sol.threshold_z = best.arg;
    sol.utility = std::max(best.value, 0.0);
    sol.estimator = Estimator::closed_form;
    sol.atom_convention = best.arg >= f.support_hi() && f.right_atom() > 0.0;
    sol.converged = !capped;
    return sol;
}

}  // namespace

nlohmann::json ContractSolution::to_json() const {
    auto num_or_null = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    nlohmann::json j{{"contract", contract.to_json()},
                     {"alpha", num_or_null(alpha)},
                     {"threshold_z", num_or_null(threshold_z)},
                     {"utility", utility},
                     {"estimator", to_string(estimator)},
                     {"samples", samples},
                     {"stderr", std_error},
                     {"converged", converged},
                     {"atom_convention", atom_convention},
                     {"clamped", clamped}};
    if (!thresholds.empty()) j["thresholds"] = thresholds;
    return j;
}

double principal_utility_iid(const Distribution& f, double r, int n, double z) {
    if (n < 1) fail(ErrorCode::BadParams, "market size must be at least 1");
    require_below_reward(f, r);
    require_regular(f);
    return virtual_value(f, z) * any_clears(f, n, z);
}

ContractSolution optimize_contract_iid(const Distribution& f, double r, int n) {
    require_regular(f);
    return solve_threshold_program(f, f, r, n);
}

ContractSolution optimize_contract_posted(const Distribution& f, double r, int n) {
    require_regular(f);
    return solve_threshold_program(power(f, n), f, r, n);
}

double threshold_for_alpha(const Distribution& f, double r, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::BadParams, "alpha must lie in [0, 1]");
    const double b = (1.0 - alpha) * r;
    return b + monopoly_point(shift_by_contract(f, b)).theta;
}

double linear_contract_utility_iid(const Distribution& f, double r, int n, double alpha) {
    if (n < 1) fail(ErrorCode::BadParams, "market size must be at least 1");
    const double b = (1.0 - alpha) * r;
    return b * any_clears(f, n, threshold_for_alpha(f, r, alpha));
}

// ---------------------------------------------------------------------------------------------
// Identical rewards, heterogeneous contributions

namespace {

void require_identical_rewards(const MarketInstance& inst) {
    if (!inst.identical_rewards()) {
        fail(ErrorCode::AssumptionViolated, "identical-reward solver needs equal expected rewards");
    }
    for (std::size_t i = 0; i < inst.n(); ++i) {
        if (!inst.classification(i).regular) {
            fail(ErrorCode::NotRegular, "agent " + std::to_string(i) + " has an irregular contribution distribution");
        }
    }
}

// P(phi_j(w_j) < v), or P(phi_j(w_j) <= v) when inclusive.
double prob_phi_below(const Distribution& f, double v, bool inclusive) {
    const double top = f.support_hi();
    if (f.degenerate()) return inclusive ? (top <= v ? 1.0 : 0.0) : (top < v ? 1.0 : 0.0);
    if (v > top) return 1.0;
    if (inclusive) {
        if (v >= top) return 1.0;
        return f.cdf(inverse_virtual_value(f, v, AssumeRegular{}));
    }
    return f.cdf_left(lower_inverse_virtual_value(f, v, AssumeRegular{}));
}

// Pre-drawn virtual values phi_i(w_{s,i}) shared by every contract evaluated in one search.
struct VirtualPanel {
    std::size_t n = 0;
    std::size_t samples = 0;
    std::vector<double> phi;  // row-major, samples x n

    VirtualPanel(const MarketInstance& inst, std::size_t samples_, std::uint64_t seed)
        : n(inst.n()), samples(samples_), phi(samples_ * inst.n()) {
        parallel_for(samples, [&](std::size_t s) {
            for (std::size_t i = 0; i < n; ++i) {
                const auto& f = inst.contribution(i);
                const double w = std::clamp(inst.reward(i) - inst.sample_cost(i, seed, s), f.support_lo(), f.support_hi());
                phi[s * n + i] = phi_at(f, w);
            }
        });
    }

    // Winner under offsets b (highest phi_i - b_i that is non-negative, lowest index on ties).
    std::ptrdiff_t winner(std::size_t s, const std::vector<double>& b) const {
        std::ptrdiff_t best = -1;
        double best_v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = phi[s * n + i] - b[i];
            if (v >= 0.0 && (best < 0 || v > best_v)) {
                best = static_cast<std::ptrdiff_t>(i);
                best_v = v;
            }
        }
        return best;
    }

    // Mean and standard error of the principal's take b_winner.
    Estimate principal(const std::vector<double>& b, std::vector<double>* wins = nullptr) const {
        constexpr std::size_t kChunk = 4096;
        const std::size_t chunks = (samples + kChunk - 1) / kChunk;
        std::vector<std::vector<double>> acc(chunks, std::vector<double>(2 + n, 0.0));
        parallel_for(chunks, [&](std::size_t c) {
            auto& a = acc[c];
            const std::size_t end = std::min(samples, (c + 1) * kChunk);
            for (std::size_t s = c * kChunk; s < end; ++s) {
                const auto w = winner(s, b);
                if (w < 0) continue;
                const double x = b[static_cast<std::size_t>(w)];
                a[0] += x;
                a[1] += x * x;
                a[2 + static_cast<std::size_t>(w)] += 1.0;
            }
        });
        std::vector<double> total(2 + n, 0.0);
        for (const auto& a : acc) {
            for (std::size_t k = 0; k < total.size(); ++k) total[k] += a[k];
        }
        const double N = static_cast<double>(samples);
        const double mean = total[0] / N;
        const double var = samples > 1 ? std::max(total[1] - N * mean * mean, 0.0) / (N - 1.0) : 0.0;
        if (wins) {
            wins->assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) (*wins)[i] = total[2 + i] / N;
        }
        return {mean, std::sqrt(var / N)};
    }
};

std::uint64_t independent_seed(std::uint64_t seed) { return mix64(seed ^ 0x7265657374696d61ULL); }

IdenticalRewardValue identical_reward_value(const MarketInstance& inst, double alpha, const VirtualPanel* panel) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::BadParams, "alpha must lie in [0, 1]");
    const std::size_t n = inst.n();
    const double b = (1.0 - alpha) * inst.reward(0);

    IdenticalRewardValue out;
    out.thresholds.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& f = inst.contribution(i);
        const double z = b + monopoly_point(shift_by_contract(f, b)).theta;
        out.thresholds[i] = std::clamp(z, f.support_lo(), f.support_hi());
        // The reserve only solves phi(z) = b when b lies inside the range of phi.
        const double gap = phi_at(f, out.thresholds[i]) - b;
        if (!(std::abs(gap) <= 1e-7 * std::max(1.0, std::abs(b)))) out.clamped = true;
    }

    if (panel) {
        out.estimator = Estimator::monte_carlo;
        const auto est = panel->principal(std::vector<double>(n, b), &out.win_probability);
        out.utility = est.mean;
        out.std_error = est.std_error;
        return out;
    }

    // Agent i wins when phi_i(w_i) >= b beats every lower index strictly and every higher
    // index weakly; the independent cdfs factor the event into a single integral over w_i.
    out.estimator = Estimator::quadrature;
    out.win_probability.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& fi = inst.contribution(i);
        auto others = [&](double v) {
            double p = 1.0;
            for (std::size_t j = 0; j < n && p > 0.0; ++j) {
                if (j != i) p *= prob_phi_below(inst.contribution(j), v, j > i);
            }
            return p;
        };
        const double hi = fi.support_hi();
        double p = fi.right_atom() * (hi >= b ? others(hi) : 0.0);
        if (!fi.degenerate()) {
            const double start = lower_inverse_virtual_value(fi, b, AssumeRegular{});
            if (start < hi && phi_at(fi, std::nextafter(hi, -kInf)) >= b - 1e-12 * std::max(1.0, std::abs(b))) {
                std::vector<double> bps = fi.kinks();
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const auto& fj = inst.contribution(j);
                    std::vector<double> levels{fj.support_hi()};
                    if (!fj.degenerate()) {
                        levels.push_back(phi_at(fj, fj.support_lo()));
                        for (double k : fj.kinks()) levels.push_back(phi_at(fj, k));
                    }
                    for (double v : levels) {
                        if (std::isfinite(v)) bps.push_back(inverse_virtual_value(fi, v, AssumeRegular{}));
                    }
                }
                p += num::integrate([&](double w) { return others(phi_at(fi, w)) * fi.pdf(w); }, start, hi, bps, 1e-8);
            }
        }
        out.win_probability[i] = p;
    }
    out.utility = b * std::accumulate(out.win_probability.begin(), out.win_probability.end(), 0.0);
    return out;
}

}  // namespace

IdenticalRewardValue identical_reward_objective(const MarketInstance& inst, double alpha,
                                                const IdenticalRewardOptions& opts) {
    require_identical_rewards(inst);
    if (static_cast<int>(inst.n()) <= opts.quadrature_max_n) return identical_reward_value(inst, alpha, nullptr);
    const VirtualPanel panel(inst, opts.mc_samples, opts.seed);
    return identical_reward_value(inst, alpha, &panel);
}

ContractSolution optimize_contract_identical_reward(const MarketInstance& inst, const IdenticalRewardOptions& opts) {
    require_identical_rewards(inst);
    const double r = inst.reward(0);
    if (!(r > 0.0)) fail(ErrorCode::BadParams, "reward must be positive");
    const bool use_mc = static_cast<int>(inst.n()) > opts.quadrature_max_n;
    std::optional<VirtualPanel> panel;
    if (use_mc) panel.emplace(inst, opts.mc_samples, opts.seed);
    const VirtualPanel* pp = panel ? &*panel : nullptr;

    num::MaximizeOptions mo;
    mo.grid = std::max(opts.alpha_grid, 2);
    mo.arg_tol = 1e-7;
    mo.max_brackets = 2;
    const auto best = num::maximize_largest(
        [&](double a) { return identical_reward_value(inst, a, pp).utility; }, 0.0, 1.0, mo);

    ContractSolution sol;
    sol.alpha = best.arg;
    sol.contract = Contract::linear(best.arg, inst.m());
    IdenticalRewardValue v;
    if (use_mc) {
        // Score the chosen alpha on fresh draws so the reported value carries no selection bias.
        const VirtualPanel check(inst, opts.mc_samples, independent_seed(opts.seed));
        v = identical_reward_value(inst, best.arg, &check);
        sol.samples = opts.mc_samples;
    } else {
        v = identical_reward_value(inst, best.arg, nullptr);
    }
    sol.utility = v.utility;
    sol.std_error = v.std_error;
    sol.estimator = v.estimator;
    sol.clamped = v.clamped;
    sol.thresholds = v.thresholds;
    const bool same = std::all_of(v.thresholds.begin(), v.thresholds.end(),
                                  [&](double z) { return z == v.thresholds.front(); });
    sol.threshold_z = same ? v.thresholds.front() : kNaN;
    for (std::size_t i = 0; i < inst.n(); ++i) {
        const auto& f = inst.contribution(i);
        sol.atom_convention = sol.atom_convention || (f.right_atom() > 0.0 && v.thresholds[i] >= f.support_hi());
    }
    return sol;
}

// ---------------------------------------------------------------------------------------------
// General contracts

namespace {

std::vector<double> principal_offsets(const MarketInstance& inst, const std::vector<double>& t) {
    const Contract c{t};
    std::vector<double> b(inst.n());
    for (std::size_t i = 0; i < inst.n(); ++i) b[i] = c.principal_share(inst.gamma(i));
    return b;
}

struct SimplexResult {
    std::vector<double> x;
    double value = -kInf;
    bool converged = false;
};

// Nelder-Mead on the box [0, t_max]^m, clamping trial points onto the box.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                          double t_max, int max_iters) {
    const std::size_t m = x0.size();
    auto clampv = [&](std::vector<double> x) {
        for (double& v : x) v = std::clamp(v, 0.0, t_max);
        return x;
    };
    std::vector<std::vector<double>> pts{clampv(x0)};
    const double step = 0.25 * t_max;
    for (std::size_t k = 0; k < m; ++k) {
        auto p = pts[0];
        p[k] += (p[k] + step <= t_max) ? step : -step;
        pts.push_back(clampv(p));
    }
    std::vector<double> vals;
    for (const auto& p : pts) vals.push_back(f(p));

    SimplexResult res;
    for (int it = 0; it < max_iters; ++it) {
        std::vector<std::size_t> order(pts.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[order.size() - 2];

        double diameter = 0.0;
        for (const auto& p : pts) {
            for (std::size_t k = 0; k < m; ++k) diameter = std::max(diameter, std::abs(p[k] - pts[best][k]));
        }
        if (diameter < 1e-6 * std::max(1.0, t_max)) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(m, 0.0);
        for (std::size_t idx : order) {
            if (idx == worst) continue;
            for (std::size_t k = 0; k < m; ++k) centroid[k] += pts[idx][k] / static_cast<double>(m);
        }
        auto along = [&](double coef) {
            std::vector<double> p(m);
            for (std::size_t k = 0; k < m; ++k) p[k] = centroid[k] + coef * (pts[worst][k] - centroid[k]);
            return clampv(p);
        };
        const auto xr = along(-1.0);
        const double fr = f(xr);
        if (fr > vals[best]) {
            const auto xe = along(-2.0);
            const double fe = f(xe);
            if (fe > fr) { pts[worst] = xe; vals[worst] = fe; } else { pts[worst] = xr; vals[worst] = fr; }
            continue;
        }
        if (fr > vals[second_worst]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        const auto xc = along(fr > vals[worst] ? -0.5 : 0.5);
        const double fc = f(xc);
        if (fc > std::max(fr, vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t idx = 0; idx < pts.size(); ++idx) {
            if (idx == best) continue;
            for (std::size_t k = 0; k < m; ++k) pts[idx][k] = pts[best][k] + 0.5 * (pts[idx][k] - pts[best][k]);
            vals[idx] = f(pts[idx]);
        }
    }
    const auto top = std::max_element(vals.begin(), vals.end()) - vals.begin();
    res.x = pts[static_cast<std::size_t>(top)];
    res.value = vals[static_cast<std::size_t>(top)];
    return res;
}

}  // namespace

Estimate general_objective(const MarketInstance& inst, const Contract& t, std::size_t samples, std::uint64_t seed) {
    if (samples < 1) fail(ErrorCode::BadParams, "Monte-Carlo estimate needs at least one sample");
    t.validate(inst.m());
    for (std::size_t i = 0; i < inst.n(); ++i) {
        if (!inst.classification(i).regular) {
            fail(ErrorCode::NotRegular, "agent " + std::to_string(i) + " has an irregular contribution distribution");
        }
    }
    const VirtualPanel panel(inst, samples, seed);
    return panel.principal(principal_offsets(inst, t.t));
}

ContractSolution optimize_contract_general(const MarketInstance& inst, const GeneralSearch& search) {
    if (search.restarts < 1 || search.max_iters < 1 || search.mc_samples < 1 || !(search.t_max > 0.0)) {
        fail(ErrorCode::BadParams, "general search needs positive restarts, iterations, samples and t_max");
    }
    for (std::size_t i = 0; i < inst.n(); ++i) {
        if (!inst.classification(i).regular) {
            fail(ErrorCode::NotRegular, "agent " + std::to_string(i) + " has an irregular contribution distribution");
        }
    }
    const std::size_t m = inst.m();
    const VirtualPanel panel(inst, search.mc_samples, search.seed);
    auto objective = [&](const std::vector<double>& t) { return panel.principal(principal_offsets(inst, t)).mean; };

    SimplexResult best;
    bool any_converged = false;
    for (int k = 0; k < search.restarts; ++k) {
        std::vector<double> x0(m, 0.5 * search.t_max);
        if (k > 0) {
            for (std::size_t j = 0; j < m; ++j) {
                x0[j] = search.t_max * uniform01(search.seed, 0x5ea4c400ULL + static_cast<std::uint64_t>(k), j);
            }
        }
        auto res = nelder_mead(objective, x0, search.t_max, search.max_iters);
        any_converged = any_converged || res.converged;
        if (res.value > best.value) best = std::move(res);
    }

    ContractSolution sol;
    sol.contract = Contract{best.x};
    const bool linear = std::all_of(best.x.begin(), best.x.end(), [&](double v) { return v == best.x.front(); });
    sol.alpha = linear ? best.x.front() : kNaN;
    sol.threshold_z = kNaN;
    const auto est = general_objective(inst, sol.contract, search.mc_samples, independent_seed(search.seed));
    sol.utility = est.mean;
    sol.std_error = est.std_error;
    sol.samples = search.mc_samples;
    sol.estimator = Estimator::monte_carlo;
    sol.converged = any_converged;
    return sol;
}

// ---------------------------------------------------------------------------------------------
// Unknown market size

const char* to_string(RobustRegime regime) noexcept {
    switch (regime) {
        case RobustRegime::regular_design_for_ell: return "regular_design_for_ell";
        case RobustRegime::mhr_design_for_s: return "mhr_design_for_s";
    }
    return "unknown";
}

RobustRegime robust_regime_from_string(const std::string& name) {
    if (name == "regular_design_for_ell" || name == "regular") return RobustRegime::regular_design_for_ell;
    if (name == "mhr_design_for_s" || name == "mhr") return RobustRegime::mhr_design_for_s;
    fail(ErrorCode::BadParams, "unknown robust regime '" + name + "'");
}

nlohmann::json RobustDesign::to_json() const {
    nlohmann::json table = nlohmann::json::array();
    for (const auto& row : rows) {
        table.push_back({{"n", row.n}, {"utility", row.utility}, {"u_sb", row.u_sb}, {"u_fb", row.u_fb},
                         {"podm", row.podm}, {"poa", row.poa}});
    }
    return {{"s", s},
            {"ell", ell},
            {"regime", to_string(regime)},
            {"alpha", alpha},
            {"threshold_z", threshold_z},
            {"worst_podm", worst_podm},
            {"worst_podm_n", worst_podm_n},
            {"worst_poa", worst_poa},
            {"worst_poa_n", worst_poa_n},
            {"rows", table}};
}

RobustDesign robust_contract(const Distribution& f, double r, int s, int ell, RobustRegime regime) {
    if (!(s >= 1 && s <= ell)) fail(ErrorCode::BadRange, "market-size range needs 1 <= s <= ell");
    const DistClass cls = classify(f);
    if (!cls.regular) fail(ErrorCode::NotRegular, "robust design needs a regular distribution");
    if (regime == RobustRegime::mhr_design_for_s && !cls.mhr) {
        fail(ErrorCode::AssumptionViolated, "the MHR design needs an MHR distribution");
    }

    const int design_n = regime == RobustRegime::regular_design_for_ell ? ell : s;
    const auto design = solve_threshold_program(f, f, r, design_n);

    RobustDesign out;
    out.s = s;
    out.ell = ell;
    out.regime = regime;
    out.alpha = design.alpha;
    out.threshold_z = design.threshold_z;
    out.rows.resize(static_cast<std::size_t>(ell - s + 1));
    const double phi = phi_at(f, design.threshold_z);
    parallel_for(out.rows.size(), [&](std::size_t k) {
        const int n = s + static_cast<int>(k);
        RobustRow row{n, phi * any_clears(f, n, design.threshold_z), second_best(f, n), first_best(f, n), kInf, kInf};
        if (row.utility > 0.0) {
            row.podm = row.u_sb / row.utility;
            row.poa = row.u_fb / row.utility;
        }
        out.rows[k] = row;
    });
    out.worst_podm = -kInf;
    out.worst_poa = -kInf;
    for (const auto& row : out.rows) {
        if (row.podm > out.worst_podm) { out.worst_podm = row.podm; out.worst_podm_n = row.n; }
        if (row.poa > out.worst_poa) { out.worst_poa = row.poa; out.worst_poa_n = row.n; }
    }
    return out;
}

}  // namespace dmw
