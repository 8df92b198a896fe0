#include "covspec/support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "covspec/errors.hpp"

namespace covspec::support {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kScanPoints = 2048;

void check_in_b(const measure::ModelSpec& spec, double m) {
    if (m == 0.0 || !std::isfinite(m)) throw DomainError("x_of_m: m must be finite and nonzero");
    for (const auto& a : spec.nu.atoms()) {
        const double q = 1.0 + spec.c * m * a.t;
        if (std::abs(q) < 1e-12 * std::max(1.0, std::abs(spec.c * m * a.t))) {
            std::ostringstream os;
            os << "x_of_m: m=" << m << " hits the pole of atom t=" << a.t;
            throw DomainError(os.str());
        }
    }
}

double x_raw(const measure::ModelSpec& spec, double m) {
    double s = 0.0;
    for (const auto& a : spec.nu.atoms()) s += a.w * a.t / (1.0 + spec.c * m * a.t);
    return -1.0 / m + s;
}

double xp_raw(const measure::ModelSpec& spec, double m) {
    double s = 0.0;
    for (const auto& a : spec.nu.atoms()) {
        const double q = 1.0 + spec.c * m * a.t;
        s += a.w * a.t * a.t / (q * q);
    }
    return 1.0 / (m * m) - spec.c * s;
}

// One connected component of B, scanned on a grid clustering toward both
// endpoints. Infinite endpoints carry the analytic sign of x' so that sign
// changes beyond the grid are still caught (by widening).
struct Component {
    double lo, hi;          // open interval; +-inf allowed on outer ends
    int lo_sign, hi_sign;   // analytic sign of x' approaching the end
    // analytic limit of x at each end (used when an increasing run reaches
    // the component boundary): 0 at +-inf, +inf at 0-, -inf at 0+.
    double lo_x_limit, hi_x_limit;
};

std::vector<double> component_grid(const Component& comp, double scale) {
    std::vector<double> g;
    g.reserve(kScanPoints);
    const double lo_finite = std::isfinite(comp.lo) ? comp.lo : 0.0;
    const double hi_finite = std::isfinite(comp.hi) ? comp.hi : 0.0;
    if (std::isfinite(comp.lo) && std::isfinite(comp.hi)) {
        // cluster toward both endpoints
        const double mid = 0.5 * (comp.lo + comp.hi);
        const double half = 0.5 * (comp.hi - comp.lo);
        const double kappa = 9.0;
        const double tk = std::tanh(kappa);
        for (std::size_t i = 0; i < kScanPoints; ++i) {
            const double u = (static_cast<double>(i) + 0.5) / kScanPoints;
            g.push_back(mid + half * std::tanh(kappa * (2.0 * u - 1.0)) / tk);
        }
    } else if (std::isfinite(comp.hi)) {
        // (-inf, hi): log-spaced distances below hi
        const double ref = std::max(std::abs(hi_finite), scale);
        const double dlo = 1e-10 * ref, dhi = 1e10 * ref;
        for (std::size_t i = 0; i < kScanPoints; ++i) {
            const double u = (static_cast<double>(i) + 0.5) / kScanPoints;
            g.push_back(comp.hi - dhi * std::pow(dlo / dhi, u));
        }
    } else if (std::isfinite(comp.lo)) {
        const double ref = std::max(std::abs(lo_finite), scale);
        const double dlo = 1e-10 * ref, dhi = 1e10 * ref;
        for (std::size_t i = 0; i < kScanPoints; ++i) {
            const double u = (static_cast<double>(i) + 0.5) / kScanPoints;
            g.push_back(comp.lo + dlo * std::pow(dhi / dlo, u));
        }
    } else {
        throw Error("support scan: doubly infinite component");
    }
    std::sort(g.begin(), g.end());
    return g;
}

double bisect_xprime_zero(const measure::ModelSpec& spec, double a, double b) {
    double fa = xp_raw(spec, a);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (std::abs(b - a) <= 1e-12 * std::max(1.0, std::abs(mid))) return mid;
        const double fm = xp_raw(spec, mid);
        if ((fa <= 0.0) == (fm <= 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

struct GapCandidate {
    double lo, hi;
    std::optional<double> lo_m, hi_m;  // finite generating critical points
};

// Scan one component and append the gaps generated by its increasing runs.
void scan_component(const measure::ModelSpec& spec, const Component& comp, double scale,
                    std::vector<GapCandidate>& out) {
    std::vector<double> grid = component_grid(comp, scale);

    // Widen toward infinite ends until the sampled sign agrees with the
    // analytic asymptotic sign.
    auto sign_of = [&](double m) { return xp_raw(spec, m) > 0.0 ? 1 : -1; };
    if (!std::isfinite(comp.lo)) {
        while (sign_of(grid.front()) != comp.lo_sign && grid.front() > -1e200)
            grid.insert(grid.begin(), grid.front() * 4.0);
    }
    if (!std::isfinite(comp.hi) && comp.hi > 0.0) {
        while (sign_of(grid.back()) != comp.hi_sign && grid.back() < 1e200)
            grid.push_back(grid.back() * 4.0);
    }

    std::vector<int> signs(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) signs[i] = sign_of(grid[i]);

    // Critical points: one per sign change between neighbors.
    std::vector<double> crit;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (signs[i] != signs[i + 1]) crit.push_back(bisect_xprime_zero(spec, grid[i], grid[i + 1]));

    // Runs delimited by the critical points. Sign of run j is the sign at
    // any grid point inside it; use the sampled signs.
    std::vector<double> bounds;
    bounds.push_back(comp.lo);
    for (double c : crit) bounds.push_back(c);
    bounds.push_back(comp.hi);

    std::size_t gi = 0;
    for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
        // first grid index inside this run
        while (gi < grid.size() && grid[gi] <= bounds[j]) ++gi;
        int run_sign;
        if (gi < grid.size() && (grid[gi] < bounds[j + 1])) {
            run_sign = signs[gi];
        } else {
            // no sample fell inside; evaluate at midpoint
            const double a = std::isfinite(bounds[j]) ? bounds[j] : grid.front();
            const double b = std::isfinite(bounds[j + 1]) ? bounds[j + 1] : grid.back();
            run_sign = sign_of(0.5 * (a + b));
        }
        if (run_sign <= 0) continue;

        GapCandidate gap;
        if (std::isfinite(bounds[j]) && j > 0) {
            gap.lo = x_raw(spec, bounds[j]);
            gap.lo_m = bounds[j];
        } else {
            gap.lo = comp.lo_x_limit;
        }
        if (std::isfinite(bounds[j + 1]) && j + 2 < bounds.size()) {
            gap.hi = x_raw(spec, bounds[j + 1]);
            gap.hi_m = bounds[j + 1];
        } else {
            gap.hi = comp.hi_x_limit;
        }
        // Intersect with (0, inf) in x-space.
        if (gap.hi <= 0.0) continue;
        if (gap.lo < 0.0) {
            gap.lo = 0.0;
            gap.lo_m.reset();
        }
        if (gap.hi <= gap.lo) continue;
        out.push_back(std::move(gap));
    }
}

}  // namespace

std::optional<Interval> SupportReport::gap_containing(double x) const {
    for (const auto& g : gaps)
        if (x > g.lo && x < g.hi) return g;
    return std::nullopt;
}

bool SupportReport::inside_bulk(double x) const {
    for (const auto& b : bulks)
        if (x >= b.lo && x <= b.hi) return true;
    return false;
}

std::vector<Interval> SupportReport::outlier_gaps() const {
    std::vector<Interval> out;
    for (const auto& g : gaps)
        if (g.lo >= first_bulk_left_edge) out.push_back(g);
    return out;
}

double x_of_m(const measure::ModelSpec& spec, double m) {
    check_in_b(spec, m);
    return x_raw(spec, m);
}

double x_prime(const measure::ModelSpec& spec, double m) {
    check_in_b(spec, m);
    return xp_raw(spec, m);
}

SupportReport compute_support(const measure::ModelSpec& spec) {
    spec.validate();
    SupportReport rep;

    if (spec.noise_free()) {
        // mu = delta_0: no bulks, everything above zero is one gap.
        rep.gaps.push_back({0.0, kInf});
        rep.atom_at_zero = 1.0;
        rep.first_bulk_left_edge = 0.0;
        return rep;
    }

    rep.atom_at_zero = std::max(0.0, 1.0 - 1.0 / spec.c);

    // Poles of x(m) at -1/(c t_i), ordered increasing (most negative first).
    std::vector<double> poles;
    for (const auto& a : spec.nu.atoms())
        if (a.t > 0.0) poles.push_back(-1.0 / (spec.c * a.t));
    std::sort(poles.begin(), poles.end());

    // Asymptotic sign of x' as m -> +-inf: (1/m^2)(1 - 1/c) for c != 1; for
    // c == 1 the next-order term ~ 1/m^3 decides, so the two half-lines
    // differ in sign.
    const int lo_far_sign = (spec.c > 1.0) ? 1 : -1;
    const int hi_far_sign = (spec.c >= 1.0) ? 1 : -1;
    const double m_scale = 1.0 / (spec.c * spec.nu.max_location());

    std::vector<Component> comps;
    comps.push_back({-kInf, poles.front(), lo_far_sign, -1, 0.0, -kInf});
    for (std::size_t i = 0; i + 1 < poles.size(); ++i)
        comps.push_back({poles[i], poles[i + 1], -1, -1, kInf, -kInf});
    comps.push_back({poles.back(), 0.0, -1, 1, kInf, kInf});
    comps.push_back({0.0, kInf, 1, hi_far_sign, -kInf, 0.0});

    std::vector<GapCandidate> gaps;
    for (const auto& comp : comps) scan_component(spec, comp, m_scale, gaps);

    std::sort(gaps.begin(), gaps.end(),
              [](const GapCandidate& a, const GapCandidate& b) { return a.lo < b.lo; });
    for (std::size_t i = 0; i + 1 < gaps.size(); ++i) {
        if (gaps[i].hi > gaps[i + 1].lo + 1e-9 * std::max(1.0, std::abs(gaps[i].hi))) {
            std::ostringstream os;
            os << "compute_support: overlapping gaps (" << gaps[i].lo << "," << gaps[i].hi
               << ") and (" << gaps[i + 1].lo << "," << gaps[i + 1].hi << ")";
            throw Error(os.str());
        }
    }
    if (gaps.empty() || !std::isinf(gaps.back().hi))
        throw Error("compute_support: scan found no unbounded gap above the last bulk");

    double prev = 0.0;
    for (const auto& g : gaps) {
        if (g.lo > prev) rep.bulks.push_back({prev, g.lo});
        rep.gaps.push_back({g.lo, g.hi});
        if (g.lo_m) rep.critical_points.push_back({*g.lo_m, g.lo});
        if (g.hi_m) rep.critical_points.push_back({*g.hi_m, g.hi});
        prev = g.hi;
    }
    rep.first_bulk_left_edge = rep.bulks.empty() ? 0.0 : rep.bulks.front().lo;
    return rep;
}

XmCurve emit_xm_curve(const measure::ModelSpec& spec, std::span<const double> m_grid) {
    XmCurve curve;
    for (double m : m_grid) {
        try {
            const double x = x_of_m(spec, m);
            const double xp = x_prime(spec, m);
            curve.points.push_back({m, x, xp});
        } catch (const DomainError&) {
            ++curve.skipped;
        }
    }
    return curve;
}

}  // namespace covspec::support
