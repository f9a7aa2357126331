#include "dmw/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dmw/error.hpp"

namespace dmw::num {

namespace {

constexpr double kInvPhi = 0.6180339887498949;

enum class Source { grid, breakpoint, refined };

struct Candidate {
    double z;
    double v;
    Source src;
};

// Zero of a central-difference derivative inside [a, b], if it brackets a sign change.
bool polish(const Fn& f, double lo, double hi, double a, double b, Extremum& best) {
    const double h = 2e-6 * std::max(1.0, std::abs(best.arg));
    a = std::max(a, lo + h);
    b = std::min(b, hi - h);
    if (!(b > a)) return false;
    auto slope = [&](double x) { return (f(x + h) - f(x - h)) / (2.0 * h); };
    double ga = slope(a);
    double gb = slope(b);
    if (!(ga > 0.0 && gb < 0.0)) return false;
    for (int it = 0; it < 80 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        if (slope(mid) > 0.0) a = mid; else b = mid;
    }
    const double z = 0.5 * (a + b);
    const double v = f(z);
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(best.value));
    if (v >= best.value - noise) {
        best = {z, v};
        return true;
    }
    return false;
}

}  // namespace

Extremum golden_section_max(const Fn& f, double a, double b, double tol) {
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    Extremum best = fc > fd ? Extremum{c, fc} : Extremum{d, fd};
    auto track = [&](double z, double v) {
        if (v > best.value || (v == best.value && z > best.arg)) best = {z, v};
    };
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
            track(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
            track(d, fd);
        }
    }
    return best;
}

Extremum maximize_largest(const Fn& f, double lo, double hi, const MaximizeOptions& opts) {
    if (!(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
        fail(ErrorCode::BadParams, "maximize_largest needs a finite interval");
    }
    if (hi == lo) return {lo, f(lo)};

    const int n = std::max(opts.grid, 2);
    std::vector<double> zs(n + 1);
    std::vector<double> fs(n + 1);
    for (int i = 0; i <= n; ++i) {
        zs[i] = i == n ? hi : lo + (hi - lo) * (static_cast<double>(i) / n);
        fs[i] = f(zs[i]);
    }
    std::vector<Candidate> cands;
    cands.reserve(n + 32);
    for (int i = 0; i <= n; ++i) cands.push_back({zs[i], fs[i], Source::grid});
    for (double bp : opts.breakpoints) {
        if (bp > lo && bp < hi) cands.push_back({bp, f(bp), Source::breakpoint});
    }

    std::vector<int> peaks;
    for (int i = 0; i <= n; ++i) {
        const bool left = i == 0 || fs[i] >= fs[i - 1];
        const bool right = i == n || fs[i] >= fs[i + 1];
        if (left && right) peaks.push_back(i);
    }
    std::stable_sort(peaks.begin(), peaks.end(), [&](int a, int b) { return fs[a] > fs[b]; });
    if (peaks.size() > static_cast<std::size_t>(std::max(opts.max_brackets, 1))) {
        peaks.resize(std::max(opts.max_brackets, 1));
    }
    for (int i : peaks) {
        const double a = zs[std::max(i - 1, 0)];
        const double b = zs[std::min(i + 1, n)];
        Extremum e = golden_section_max(f, a, b, opts.arg_tol * std::max(1.0, std::abs(zs[i])));
        polish(f, lo, hi, a, b, e);
        cands.push_back({e.arg, e.value, Source::refined});
    }

    double vmax = -std::numeric_limits<double>::infinity();
    for (const auto& c : cands) vmax = std::max(vmax, c.v);
    const double tol = opts.value_tol * std::max(1.0, std::abs(vmax));

    // Near-optimal candidates, grouped into runs that sit within one grid step of each other.
    // The rightmost run holds the largest maximizer. A run spanning several grid points is a
    // plateau and we take its right end; otherwise the run is one peak seen at rounding
    // resolution and we take its best value, preferring exactly placed points on exact ties.
    std::vector<Candidate> top;
    for (const auto& c : cands) {
        if (c.v >= vmax - tol) top.push_back(c);
    }
    std::sort(top.begin(), top.end(), [](const Candidate& a, const Candidate& b) { return a.z < b.z; });
    const double step = (hi - lo) / n;
    std::size_t first = top.size() - 1;
    while (first > 0 && top[first].z - top[first - 1].z <= 1.01 * step) --first;
    int grid_points = 0;
    for (std::size_t k = first; k < top.size(); ++k) grid_points += top[k].src == Source::grid;

    Extremum out;
    if (grid_points >= 2) {
        out = {top.back().z, top.back().v};
    } else {
        const Candidate* best = &top[first];
        for (std::size_t k = first + 1; k < top.size(); ++k) {
            const Candidate& c = top[k];
            if (c.v > best->v || (c.v == best->v && best->src == Source::refined)) best = &c;
        }
        out = {best->z, best->v};
    }

    // A plateau that ends between two grid points: walk to its right edge.
    if (grid_points < 2) return out;
    auto it = std::upper_bound(zs.begin(), zs.end(), out.arg);
    if (it != zs.end() && it != zs.begin() && *(it - 1) == out.arg) {
        const double next = *it;
        if (f(next) < vmax - tol) {
            const double floor = vmax - tol;
            const double edge = bisect_last_true([&](double z) { return f(z) >= floor; }, out.arg,
                                                 next, opts.arg_tol * std::max(1.0, std::abs(next)));
            const double fe = f(edge);
            if (fe >= floor) out = {edge, fe};
        }
    }
    return out;
}

double bisect_last_true(const std::function<bool(double)>& pred, double lo, double hi, double tol) {
    if (pred(hi)) return hi;
    for (int it = 0; it < 400 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid)) lo = mid; else hi = mid;
    }
    return lo;
}

double bisect_first_true(const std::function<bool(double)>& pred, double lo, double hi, double tol) {
    if (pred(lo)) return lo;
    for (int it = 0; it < 400 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid)) hi = mid; else lo = mid;
    }
    return hi;
}

double integrate(const Fn& f, double lo, double hi, std::vector<double> breakpoints, double tol) {
    if (!(hi > lo)) return 0.0;
    std::vector<double> pts{lo};
    std::sort(breakpoints.begin(), breakpoints.end());
    for (double b : breakpoints) {
        if (b > pts.back() && b < hi) pts.push_back(b);
    }
    pts.push_back(hi);
    // Slivers left by root-finding noise get a midpoint rule; a relative error test cannot
    // settle on them and would recurse to full depth.
    const double sliver = 1e-10 * std::max({1.0, std::abs(lo), std::abs(hi)});
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double a = pts[k], b = pts[k + 1];
        if (b - a <= sliver) {
            total += (b - a) * f(0.5 * (a + b));
            continue;
        }
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, tol, &err);
    }
    return total;
}

}  // namespace dmw::num
