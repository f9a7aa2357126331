#include "dmw/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmw/error.hpp"
#include "dmw/numeric.hpp"

namespace dmw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double one_minus_pow(double p, int n) {
    // 1 - (1 - p)^n
    if (p >= 1.0) return 1.0;
    if (p <= 0.0) return 0.0;
    return -std::expm1(n * std::log1p(-p));
}

class PowerModel final : public DistributionModel {
public:
    PowerModel(Distribution base, int n)
        : DistributionModel(base.support_lo(), base.support_hi(), one_minus_pow(base.right_atom(), n)),
          base_(std::move(base)),
          n_(n) {}

    std::string kind() const override { return "power"; }
    nlohmann::json params() const override { return {{"n", n_}, {"base", base_.to_json()}}; }

    double cdf(double z) const override { return std::pow(base_.cdf(z), n_); }
    double ccdf(double z) const override { return one_minus_pow(base_.ccdf(z), n_); }
    double pdf(double z) const override {
        const double f = base_.pdf(z);
        if (f == 0.0) return 0.0;
        return n_ * std::pow(base_.cdf(z), n_ - 1) * f;
    }
    double quantile(double u) const override { return base_.quantile(std::pow(u, 1.0 / n_)); }
    double tail_quantile(double q) const override {
        return base_.tail_quantile(-std::expm1(std::log1p(-q) / n_));
    }
    std::vector<double> kinks() const override { return base_.kinks(); }

    const Distribution& base() const { return base_; }
    int n() const { return n_; }

private:
    Distribution base_;
    int n_;
};

class ShiftModel final : public DistributionModel {
public:
    ShiftModel(Distribution base, double offset)
        : DistributionModel(base.support_lo() - offset, base.support_hi() - offset, base.right_atom()),
          base_(std::move(base)),
          offset_(offset) {}

    std::string kind() const override { return "shift"; }
    nlohmann::json params() const override { return {{"offset", offset_}, {"base", base_.to_json()}}; }

    double cdf(double z) const override { return base_.cdf(std::min(z + offset_, inner_top())); }
    double ccdf(double z) const override { return base_.ccdf(std::min(z + offset_, inner_top())); }
    double pdf(double z) const override {
        return base_.pdf(std::clamp(z + offset_, base_.support_lo(), base_.support_hi()));
    }
    double quantile(double u) const override { return base_.quantile(u) - offset_; }
    double tail_quantile(double q) const override { return base_.tail_quantile(q) - offset_; }
    std::vector<double> kinks() const override {
        auto k = base_.kinks();
        for (double& x : k) x -= offset_;
        return k;
    }

    const Distribution& base() const { return base_; }
    double offset() const { return offset_; }

private:
    // Rounding in z + offset must not land on the base's top (where the atom lives).
    double inner_top() const { return std::nextafter(base_.support_hi(), -kInf); }

    Distribution base_;
    double offset_;
};

// phi(z) for z in [lo, hi]; -inf where the density vanishes inside the support.
double phi_unchecked(const Distribution& d, double z) {
    if (z >= d.support_hi()) return d.support_hi();
    const double f = d.pdf(z);
    if (!(f > 0.0)) return -kInf;
    return z - d.ccdf(z) / f;
}

}  // namespace

DistributionModel::DistributionModel(double lo_, double hi_, double atom_) : lo(lo_), hi(hi_), atom(atom_) {
    if (!(lo <= hi) || std::isnan(lo) || std::isnan(hi)) fail(ErrorCode::BadParams, "support must satisfy lo <= hi");
    if (!(atom >= 0.0 && atom <= 1.0)) fail(ErrorCode::BadParams, "right atom must lie in [0, 1]");
    if (lo == hi && atom != 1.0) fail(ErrorCode::BadParams, "a point support needs all its mass at the point");
}

double DistributionModel::quantile(double u) const {
    if (!std::isfinite(hi)) fail(ErrorCode::UnboundedSupport, "generic quantile needs a bounded support");
    const double tol = 1e-15 * std::max({1.0, std::abs(lo), std::abs(hi)});
    return num::bisect_first_true([&](double z) { return z >= hi || cdf(z) >= u; }, lo, hi, tol);
}

double DistributionModel::tail_quantile(double q) const {
    if (!std::isfinite(hi)) fail(ErrorCode::UnboundedSupport, "generic quantile needs a bounded support");
    const double tol = 1e-15 * std::max({1.0, std::abs(lo), std::abs(hi)});
    return num::bisect_first_true([&](double z) { return z >= hi || ccdf(z) <= q; }, lo, hi, tol);
}

Distribution::Distribution(std::shared_ptr<const DistributionModel> model) : model_(std::move(model)) {
    if (!model_) fail(ErrorCode::BadParams, "null distribution model");
}

double Distribution::cdf(double z) const {
    if (z < model_->lo) return 0.0;
    if (z >= model_->hi) return 1.0;
    return std::clamp(model_->cdf(z), 0.0, 1.0);
}

double Distribution::ccdf(double z) const {
    if (z < model_->lo) return 1.0;
    if (z >= model_->hi) return 0.0;
    return std::clamp(model_->ccdf(z), 0.0, 1.0);
}

double Distribution::cdf_left(double z) const {
    if (z <= model_->lo) return 0.0;
    if (z > model_->hi) return 1.0;
    if (z == model_->hi) return 1.0 - model_->atom;
    return cdf(z);
}

double Distribution::survival(double z) const {
    if (z <= model_->lo) return 1.0;
    if (z > model_->hi) return 0.0;
    if (z == model_->hi) return model_->atom;
    return ccdf(z);
}

double Distribution::pdf(double z) const {
    if (z < model_->lo || z > model_->hi || degenerate()) return 0.0;
    return model_->pdf(z);
}

double Distribution::quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) fail(ErrorCode::BadParams, "quantile level outside [0, 1]");
    if (u == 0.0 || degenerate()) return model_->lo;
    if (u > 1.0 - model_->atom) return model_->hi;
    return std::clamp(model_->quantile(u), model_->lo, model_->hi);
}

double Distribution::tail_quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) fail(ErrorCode::BadParams, "tail level outside [0, 1]");
    if (q == 1.0 || degenerate()) return model_->lo;
    if (q <= model_->atom) return model_->hi;
    return std::clamp(model_->tail_quantile(q), model_->lo, model_->hi);
}

nlohmann::json Distribution::to_json() const {
    nlohmann::json j;
    j["kind"] = model_->kind();
    j["params"] = model_->params();
    j["support"] = {model_->lo, std::isfinite(model_->hi) ? nlohmann::json(model_->hi) : nlohmann::json()};
    j["right_atom"] = model_->atom;
    return j;
}

double search_hi(const Distribution& d, const SearchOptions& opts, bool* capped) {
    const bool cap = !std::isfinite(d.support_hi());
    if (capped) *capped = cap;
    return cap ? std::max(opts.z_max, d.support_lo()) : d.support_hi();
}

double virtual_value(const Distribution& d, double z) {
    if (!(z >= d.support_lo() && z <= d.support_hi())) {
        fail(ErrorCode::OutOfSupport, "virtual value requested outside the support");
    }
    if (z == d.support_hi()) return z;
    const double f = d.pdf(z);
    if (!(f > 0.0)) fail(ErrorCode::ZeroDensity, "virtual value undefined where the density vanishes");
    return z - d.ccdf(z) / f;
}

Hazard hazard_profile(const Distribution& d, double z) {
    if (!(z >= d.support_lo() && z <= d.support_hi())) {
        fail(ErrorCode::OutOfSupport, "hazard requested outside the support");
    }
    const double s = d.ccdf(z);
    if (!(s > 0.0)) fail(ErrorCode::SaturatedCdf, "hazard undefined once the cdf reaches 1");
    return {d.pdf(z) / s, -std::log(s)};
}

double revenue_curve(const Distribution& d, double q) {
    if (!(q >= 0.0 && q <= 1.0)) fail(ErrorCode::BadParams, "revenue curve quantile outside [0, 1]");
    if (q == 0.0) return 0.0;
    return q * d.tail_quantile(q);
}

MonopolyPoint monopoly_point(const Distribution& d, const SearchOptions& opts) {
    if (d.degenerate()) return {d.support_lo(), d.support_lo()};
    bool capped = false;
    const double hi = search_hi(d, opts, &capped);
    num::MaximizeOptions mo;
    mo.grid = opts.grid;
    mo.breakpoints = d.kinks();
    const auto best = num::maximize_largest([&](double p) { return p * d.survival(p); }, d.support_lo(), hi, mo);
    if (capped && best.arg >= hi - (hi - d.support_lo()) / opts.grid) {
        fail(ErrorCode::UnboundedSupport, "revenue keeps rising up to the search cap");
    }
    return {best.arg, best.value, capped};
}

DistClass classify(const Distribution& d, int grid, double tol) {
    if (grid < 2) fail(ErrorCode::BadParams, "classification grid needs at least 2 points");
    DistClass out;
    out.check_grid_size = grid;
    out.tolerance = tol;
    if (d.degenerate()) {
        out.regular = out.mhr = true;
        return out;
    }
    bool capped = false;
    const double lo = d.support_lo();
    const double hi = search_hi(d, {grid, 1e6}, &capped);
    if (capped) out.warnings.push_back("support capped for classification");

    bool regular = true;
    bool mhr = true;
    double prev_phi = 0.0, prev_h = 0.0;
    bool have_phi = false, have_h = false;
    for (int k = 0; k < grid; ++k) {
        const double z = lo + (hi - lo) * ((k + 0.5) / grid);
        const double f = d.pdf(z);
        const double s = d.ccdf(z);
        if (!(f > 0.0) || !(s > 0.0)) continue;
        const double phi = z - s / f;
        const double h = f / s;
        if (have_phi && phi < prev_phi - tol * std::max(1.0, std::abs(prev_phi))) regular = false;
        if (have_h && h < prev_h - tol * std::max(1.0, std::abs(prev_h))) mhr = false;
        prev_phi = phi;
        prev_h = h;
        have_phi = have_h = true;
    }
    out.regular = regular;
    out.mhr = mhr;
    if (mhr && !regular) out.warnings.push_back("hazard rate non-decreasing but virtual value is not");
    return out;
}

Distribution power(const Distribution& d, int n) {
    if (n < 1) fail(ErrorCode::BadParams, "power needs n >= 1");
    if (n == 1) return d;
    if (auto p = std::dynamic_pointer_cast<const PowerModel>(d.model_ptr())) {
        return Distribution(std::make_shared<PowerModel>(p->base(), p->n() * n));
    }
    return Distribution(std::make_shared<PowerModel>(d, n));
}

Distribution shift_by_contract(const Distribution& d, double offset) {
    if (!std::isfinite(offset)) fail(ErrorCode::BadParams, "shift offset must be finite");
    if (offset == 0.0) return d;
    if (auto s = std::dynamic_pointer_cast<const ShiftModel>(d.model_ptr())) {
        const double total = s->offset() + offset;
        return total == 0.0 ? s->base() : Distribution(std::make_shared<ShiftModel>(s->base(), total));
    }
    return Distribution(std::make_shared<ShiftModel>(d, offset));
}

double inverse_virtual_value(const Distribution& d, double v) {
    if (!classify(d).regular) fail(ErrorCode::NotRegular, "inverse virtual value needs a regular distribution");
    return inverse_virtual_value(d, v, AssumeRegular{});
}

double inverse_virtual_value(const Distribution& d, double v, AssumeRegular) {
    const double lo = d.support_lo();
    const double hi = search_hi(d, {});
    if (d.degenerate()) return lo;
    const double slack = 1e-12 * std::max(1.0, std::abs(v));
    auto below = [&](double z) { return phi_unchecked(d, z) <= v + slack; };
    if (below(hi)) return hi;
    if (!below(lo)) return lo;
    const double tol = 1e-13 * std::max({1.0, std::abs(lo), std::abs(hi)});
    return num::bisect_last_true(below, lo, hi, tol);
}

double lower_inverse_virtual_value(const Distribution& d, double v, AssumeRegular) {
    const double lo = d.support_lo();
    const double hi = search_hi(d, {});
    if (d.degenerate()) return lo;
    const double slack = 1e-12 * std::max(1.0, std::abs(v));
    auto above = [&](double z) { return phi_unchecked(d, z) >= v - slack; };
    if (above(lo)) return lo;
    if (!above(hi)) return hi;
    const double tol = 1e-13 * std::max({1.0, std::abs(lo), std::abs(hi)});
    return num::bisect_first_true(above, lo, hi, tol);
}

}  // namespace dmw
