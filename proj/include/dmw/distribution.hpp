#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace dmw {

// Shape of a one-dimensional distribution on [lo, hi] with optional mass at hi.
// cdf/ccdf are only called for lo <= z < hi and pdf for lo <= z <= hi; the
// Distribution wrapper handles everything outside.
class DistributionModel {
public:
    DistributionModel(double lo, double hi, double atom);
    virtual ~DistributionModel() = default;

    virtual std::string kind() const = 0;
    virtual nlohmann::json params() const = 0;

    virtual double cdf(double z) const = 0;
    virtual double ccdf(double z) const { return 1.0 - cdf(z); }
    virtual double pdf(double z) const = 0;
    // inf{z : F(z) >= u} for 0 < u <= 1 - atom; the default bisects the cdf.
    virtual double quantile(double u) const;
    // inf{z : 1 - F(z) <= q}; lets tail-heavy models avoid forming 1 - q.
    virtual double tail_quantile(double q) const;
    // Interior points where the density jumps or the virtual value has a kink.
    virtual std::vector<double> kinks() const { return {}; }

    const double lo;
    const double hi;
    const double atom;
};

class Distribution {
public:
    explicit Distribution(std::shared_ptr<const DistributionModel> model);

    double support_lo() const { return model_->lo; }
    double support_hi() const { return model_->hi; }
    double right_atom() const { return model_->atom; }
    bool degenerate() const { return model_->lo == model_->hi; }

    // Right-continuous F(z).
    double cdf(double z) const;
    // 1 - F(z), evaluated without cancellation where the model allows it.
    double ccdf(double z) const;
    // F(z-) = P(w < z).
    double cdf_left(double z) const;
    // P(w >= z); equals the atom at the top of the support.
    double survival(double z) const;
    double pdf(double z) const;
    double quantile(double u) const;
    // F^{-1}(1 - q) with the same infimum convention as quantile.
    double tail_quantile(double q) const;
    std::vector<double> kinks() const { return model_->kinks(); }

    std::string kind() const { return model_->kind(); }
    // {kind, params, support, right_atom}
    nlohmann::json to_json() const;

    const DistributionModel& model() const { return *model_; }
    const std::shared_ptr<const DistributionModel>& model_ptr() const { return model_; }

private:
    std::shared_ptr<const DistributionModel> model_;
};

struct Hazard {
    double h;
    double H;
};

struct MonopolyPoint {
    double theta;
    double r_star;
    bool capped = false;
};

struct DistClass {
    bool regular = false;
    bool mhr = false;
    int check_grid_size = 0;
    double tolerance = 0.0;
    std::vector<std::string> warnings;
};

struct SearchOptions {
    int grid = 4096;
    double z_max = 1e6;
};

// Marker for callers that classified the distribution already.
struct AssumeRegular {};

double virtual_value(const Distribution& d, double z);
Hazard hazard_profile(const Distribution& d, double z);
double revenue_curve(const Distribution& d, double q);
MonopolyPoint monopoly_point(const Distribution& d, const SearchOptions& opts = {});
DistClass classify(const Distribution& d, int grid = 4096, double tol = 1e-9);

Distribution power(const Distribution& d, int n);
Distribution shift_by_contract(const Distribution& d, double offset);

// Largest z in the support with phi(z) <= v; the support floor when v is below range.
double inverse_virtual_value(const Distribution& d, double v);
double inverse_virtual_value(const Distribution& d, double v, AssumeRegular);
// Smallest z in the support with phi(z) >= v; the support top when v is above range.
double lower_inverse_virtual_value(const Distribution& d, double v, AssumeRegular);

// Finite search window for the support, capping an infinite top at opts.z_max.
double search_hi(const Distribution& d, const SearchOptions& opts, bool* capped = nullptr);

}  // namespace dmw
