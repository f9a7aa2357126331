#include "dmw/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dmw/error.hpp"

namespace dmw {

namespace {

class UniformModel final : public DistributionModel {
public:
    UniformModel(double lo, double hi) : DistributionModel(lo, hi, 0.0) {}
    std::string kind() const override { return "uniform"; }
    nlohmann::json params() const override { return {{"lo", lo}, {"hi", hi}}; }
    double cdf(double z) const override { return (z - lo) / (hi - lo); }
    double ccdf(double z) const override { return (hi - z) / (hi - lo); }
    double pdf(double) const override { return 1.0 / (hi - lo); }
    double quantile(double u) const override { return lo + u * (hi - lo); }
    double tail_quantile(double q) const override { return hi - q * (hi - lo); }
};

class PointMassModel final : public DistributionModel {
public:
    explicit PointMassModel(double at) : DistributionModel(at, at, 1.0) {}
    std::string kind() const override { return "point_mass"; }
    nlohmann::json params() const override { return {{"at", lo}}; }
    double cdf(double) const override { return 0.0; }
    double pdf(double) const override { return 0.0; }
};

class FromCostModel final : public DistributionModel {
public:
    FromCostModel(Distribution g, double r)
        : DistributionModel(r - g.support_hi(), r - g.support_lo(), g.degenerate() ? 1.0 : 0.0),
          g_(std::move(g)),
          r_(r) {}
    std::string kind() const override { return "from_cost"; }
    nlohmann::json params() const override { return {{"r", r_}, {"cost", g_.to_json()}}; }
    double cdf(double z) const override { return g_.survival(r_ - z); }
    double ccdf(double z) const override { return g_.cdf_left(r_ - z); }
    double pdf(double z) const override { return g_.pdf(r_ - z); }
    double quantile(double u) const override { return r_ - g_.tail_quantile(u); }
    double tail_quantile(double q) const override { return r_ - g_.quantile(q); }
    std::vector<double> kinks() const override {
        auto k = g_.kinks();
        for (double& x : k) x = r_ - x;
        std::reverse(k.begin(), k.end());
        return k;
    }

private:
    Distribution g_;
    double r_;
};

class TruncEqualRevenueModel final : public DistributionModel {
public:
    TruncEqualRevenueModel(double r_star, double w_bar) : DistributionModel(r_star, w_bar, r_star / w_bar) {}
    std::string kind() const override { return "trunc_equal_revenue"; }
    nlohmann::json params() const override { return {{"r_star", lo}, {"w_bar", hi}}; }
    double cdf(double z) const override { return 1.0 - lo / z; }
    double ccdf(double z) const override { return lo / z; }
    double pdf(double z) const override { return lo / (z * z); }
    double quantile(double u) const override { return lo / (1.0 - u); }
    double tail_quantile(double q) const override { return lo / q; }
};

class StaircaseModel final : public DistributionModel {
public:
    explicit StaircaseModel(int K)
        : DistributionModel(1.0, std::ldexp(1.0, K), staircase_tail(K, 1)), K_(K) {
        // Index j = 0 is the equal-revenue base [1, z_K); j = K - k + 1 is piece k on [z_k, z_{k-1}).
        starts_.push_back(1.0);
        a_.push_back(1.0);
        b_.push_back(0.0);
        q_.push_back(1.0);
        for (int k = K; k >= 2; --k) {
            starts_.push_back(staircase_breakpoint(K, k));
            a_.push_back((k - 2 + std::ldexp(1.0, 1 - k)) / K);
            b_.push_back(std::ldexp(1.0, K - k + 1));
            q_.push_back(staircase_tail(K, k));
        }
    }
    std::string kind() const override { return "staircase"; }
    nlohmann::json params() const override { return {{"K", K_}}; }
    double cdf(double z) const override { return 1.0 - ccdf(z); }
    double ccdf(double z) const override {
        const auto j = piece(z);
        return a_[j] / (z - b_[j]);
    }
    double pdf(double z) const override {
        const auto j = piece(z);
        const double d = z - b_[j];
        return a_[j] / (d * d);
    }
    double quantile(double u) const override { return tail_quantile(1.0 - u); }
    double tail_quantile(double q) const override {
        // On piece j the tail runs from q_[j+1] (exclusive) up to its value at the piece start.
        std::size_t j = 0;
        while (j + 1 < starts_.size() && q <= q_[j + 1]) ++j;
        return b_[j] + a_[j] / q;
    }
    std::vector<double> kinks() const override { return {starts_.begin() + 1, starts_.end()}; }

private:
    std::size_t piece(double z) const {
        auto it = std::upper_bound(starts_.begin(), starts_.end(), z);
        return static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - starts_.begin() - 1, 0));
    }

    int K_;
    std::vector<double> starts_, a_, b_, q_;
};

class CondExponentialModel final : public DistributionModel {
public:
    CondExponentialModel(double r, double K)
        : DistributionModel(-std::log(K * -std::expm1(-r) + std::exp(-r)), r, 0.0),
          r_(r),
          K_(K),
          scale_(K * -std::expm1(-r)) {}
    std::string kind() const override { return "cond_exponential"; }
    nlohmann::json params() const override { return {{"r", r_}, {"K", K_}}; }
    double cdf(double z) const override { return 1.0 - ccdf(z); }
    double ccdf(double z) const override { return std::exp(-r_) * std::expm1(r_ - z) / scale_; }
    double pdf(double z) const override { return std::exp(-z) / scale_; }
    double tail_quantile(double q) const override { return -std::log(q * scale_ + std::exp(-r_)); }
    double quantile(double u) const override { return tail_quantile(1.0 - u); }

private:
    double r_, K_, scale_;
};

class TabulatedModel final : public DistributionModel {
public:
    TabulatedModel(std::vector<double> z, std::vector<double> c)
        : DistributionModel(z.front(), z.back(), 1.0 - c.back()), z_(std::move(z)), c_(std::move(c)) {}
    std::string kind() const override { return "tabulated"; }
    nlohmann::json params() const override { return {{"z", z_}, {"cdf", c_}}; }
    double cdf(double z) const override {
        const auto j = segment(z);
        return c_[j] + slope(j) * (z - z_[j]);
    }
    double pdf(double z) const override { return slope(segment(z)); }
    double quantile(double u) const override {
        auto it = std::lower_bound(c_.begin(), c_.end(), u);
        const auto j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - c_.begin() - 1, 0));
        return z_[j] + (u - c_[j]) / slope(j);
    }
    std::vector<double> kinks() const override { return {z_.begin() + 1, z_.end() - 1}; }

private:
    std::size_t segment(double z) const {
        auto it = std::upper_bound(z_.begin(), z_.end(), z);
        auto j = static_cast<std::ptrdiff_t>(it - z_.begin()) - 1;
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(z_.size()) - 2));
    }
    double slope(std::size_t j) const { return (c_[j + 1] - c_[j]) / (z_[j + 1] - z_[j]); }

    std::vector<double> z_, c_;
};

double number(const nlohmann::json& p, const char* key) {
    if (!p.contains(key) || !p.at(key).is_number()) {
        fail(ErrorCode::BadParams, std::string("missing numeric parameter '") + key + "'");
    }
    return p.at(key).get<double>();
}

}  // namespace

Distribution make_uniform(double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) fail(ErrorCode::BadParams, "uniform needs lo < hi");
    return Distribution(std::make_shared<UniformModel>(lo, hi));
}

Distribution make_point_mass(double at) {
    if (!std::isfinite(at)) fail(ErrorCode::BadParams, "point mass location must be finite");
    return Distribution(std::make_shared<PointMassModel>(at));
}

Distribution contribution_from_cost(const Distribution& g, double r) {
    if (!std::isfinite(r)) fail(ErrorCode::BadParams, "reward must be finite");
    if (!g.degenerate() && g.right_atom() > 0.0) {
        fail(ErrorCode::BadParams, "a cost atom at the top of its support would put contribution mass at the bottom");
    }
    if (!std::isfinite(g.support_lo()) || !std::isfinite(g.support_hi())) {
        fail(ErrorCode::UnboundedSupport, "cost distributions must have bounded support");
    }
    return Distribution(std::make_shared<FromCostModel>(g, r));
}

Distribution cost_from_contribution(const Distribution& f, double r) { return contribution_from_cost(f, r); }

Distribution make_trunc_equal_revenue(double r_star, double w_bar) {
    if (!(r_star > 0.0 && r_star <= w_bar && std::isfinite(w_bar))) {
        fail(ErrorCode::BadParams, "truncated equal-revenue needs 0 < r_star <= w_bar");
    }
    if (r_star == w_bar) return make_point_mass(w_bar);
    return Distribution(std::make_shared<TruncEqualRevenueModel>(r_star, w_bar));
}

double staircase_breakpoint(int K, int k) {
    if (k == 0) return std::ldexp(1.0, K) / std::numbers::ln2;
    return k * std::ldexp(1.0, K) / (std::ldexp(1.0, k) - 1.0);
}

double staircase_tail(int K, int k) { return (std::ldexp(1.0, k) - 1.0) / K * std::ldexp(1.0, -K); }

Distribution make_staircase(int K) {
    if (K < 2 || K > 512) fail(ErrorCode::BadParams, "staircase needs 2 <= K <= 512");
    return Distribution(std::make_shared<StaircaseModel>(K));
}

Distribution make_cond_exponential(double r, double K) {
    if (!(r > 0.0 && std::isfinite(r) && K > 1.0 && std::isfinite(K))) {
        fail(ErrorCode::BadParams, "conditional exponential needs r > 0 and K > 1");
    }
    Distribution d(std::make_shared<CondExponentialModel>(r, K));
    if (std::abs(d.ccdf(d.support_lo()) - 1.0) > 1e-9 || std::abs(d.cdf(0.0) - (1.0 - 1.0 / K)) > 1e-9) {
        fail(ErrorCode::BadParams, "conditional exponential failed its construction checks");
    }
    return d;
}

Distribution make_tabulated(std::vector<double> z, std::vector<double> cdf) {
    if (z.size() < 2 || z.size() != cdf.size()) fail(ErrorCode::BadParams, "tabulated needs matching knots, at least two");
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!std::isfinite(z[i]) || !(cdf[i] >= 0.0 && cdf[i] <= 1.0)) fail(ErrorCode::BadParams, "tabulated values out of range");
        if (i > 0 && (!(z[i] > z[i - 1]) || cdf[i] < cdf[i - 1])) {
            fail(ErrorCode::BadParams, "tabulated knots must increase and the cdf must not decrease");
        }
    }
    if (cdf.front() != 0.0) fail(ErrorCode::BadParams, "tabulated cdf must start at 0");
    if (!(cdf.back() > 0.0)) fail(ErrorCode::BadParams, "tabulated cdf must rise above 0");
    return Distribution(std::make_shared<TabulatedModel>(std::move(z), std::move(cdf)));
}

Distribution distribution_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        fail(ErrorCode::BadParams, "distribution needs a string 'kind'");
    }
    const auto kind = j.at("kind").get<std::string>();
    const nlohmann::json p = j.value("params", nlohmann::json::object());
    Distribution d = [&]() -> Distribution {
        if (kind == "uniform") return make_uniform(number(p, "lo"), number(p, "hi"));
        if (kind == "point_mass") return make_point_mass(number(p, "at"));
        if (kind == "trunc_equal_revenue") return make_trunc_equal_revenue(number(p, "r_star"), number(p, "w_bar"));
        if (kind == "staircase") {
            const double K = number(p, "K");
            if (K != std::floor(K)) fail(ErrorCode::BadParams, "staircase K must be an integer");
            return make_staircase(static_cast<int>(K));
        }
        if (kind == "cond_exponential") return make_cond_exponential(number(p, "r"), number(p, "K"));
        if (kind == "from_cost") {
            if (!p.contains("cost")) fail(ErrorCode::BadParams, "from_cost needs a 'cost' distribution");
            return contribution_from_cost(distribution_from_json(p.at("cost")), number(p, "r"));
        }
        if (kind == "tabulated") {
            if (!p.contains("z") || !p.contains("cdf")) fail(ErrorCode::BadParams, "tabulated needs 'z' and 'cdf'");
            try {
                return make_tabulated(p.at("z").get<std::vector<double>>(), p.at("cdf").get<std::vector<double>>());
            } catch (const nlohmann::json::exception& e) {
                fail(ErrorCode::BadParams, e.what());
            }
        }
        if (kind == "power") {
            const double n = number(p, "n");
            if (n != std::floor(n) || n < 1) fail(ErrorCode::BadParams, "power n must be a positive integer");
            if (!p.contains("base")) fail(ErrorCode::BadParams, "power needs a 'base' distribution");
            return power(distribution_from_json(p.at("base")), static_cast<int>(n));
        }
        if (kind == "shift") {
            if (!p.contains("base")) fail(ErrorCode::BadParams, "shift needs a 'base' distribution");
            return shift_by_contract(distribution_from_json(p.at("base")), number(p, "offset"));
        }
        fail(ErrorCode::BadParams, "unknown distribution kind '" + kind + "'");
    }();

    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    if (j.contains("support") && j.at("support").is_array() && j.at("support").size() == 2) {
        const auto& s = j.at("support");
        const bool lo_ok = !s[0].is_number() || near(s[0].get<double>(), d.support_lo());
        const bool hi_ok = !s[1].is_number() || near(s[1].get<double>(), d.support_hi());
        if (!lo_ok || !hi_ok) fail(ErrorCode::BadParams, "declared support does not match the parameters");
    }
    if (j.contains("right_atom") && j.at("right_atom").is_number() &&
        !near(j.at("right_atom").get<double>(), d.right_atom())) {
        fail(ErrorCode::BadParams, "declared right_atom does not match the parameters");
    }
    return d;
}

}  // namespace dmw
