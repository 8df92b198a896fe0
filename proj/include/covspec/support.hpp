#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "covspec/measure.hpp"

namespace covspec::support {

struct Interval {
    double lo;
    double hi;  // +inf for the unbounded gap
};

// A gap edge together with the critical point of x(m) that generated it.
struct CriticalPoint {
    double m;
    double x;
};

// Bulk/gap structure of supp(mu). Gaps are the connected components of
// (0,inf) \ supp(mu); the last one is unbounded. Bulks and gaps are sorted
// ascending and exactly complement each other in (0, b_last].
struct SupportReport {
    std::vector<Interval> bulks;
    std::vector<Interval> gaps;
    double atom_at_zero = 0.0;
    double first_bulk_left_edge = 0.0;  // A; 0 when there is no bulk
    std::vector<CriticalPoint> critical_points;

    // Gap containing x, if any.
    std::optional<Interval> gap_containing(double x) const;
    bool inside_bulk(double x) const;

    // Gaps where outliers may exist: everything at or right of the first
    // bulk edge A. The sub-A gap (0, A) is excluded.
    std::vector<Interval> outlier_gaps() const;
};

// Inverse map x(m) = -1/m + int t/(1+cmt) nu(dt) on
// B = {m != 0 : -(cm)^{-1} outside supp(nu)}.
double x_of_m(const measure::ModelSpec& spec, double m);

// Analytic derivative 1/m^2 - c int t^2/(1+cmt)^2 nu(dt).
double x_prime(const measure::ModelSpec& spec, double m);

// Scans every connected component of B for the sign structure of x' and
// assembles the bulk/gap picture (Silverstein-Choi criterion: x0 is outside
// the support iff x0 = x(m0) for some m0 in B with x'(m0) > 0).
SupportReport compute_support(const measure::ModelSpec& spec);

struct XmPoint {
    double m;
    double x;
    double xprime;
};

struct XmCurve {
    std::vector<XmPoint> points;
    std::size_t skipped = 0;  // grid points outside B
};

XmCurve emit_xm_curve(const measure::ModelSpec& spec, std::span<const double> m_grid);

}  // namespace covspec::support
