#pragma once

#include <optional>
#include <vector>

#include "covspec/measure.hpp"
#include "covspec/support.hpp"

namespace covspec::outliers {

struct OutlierPrediction {
    double rho;
    std::size_t multiplicity;
    std::optional<double> spike_omega_sq;  // absent in matrix-measure mode
    support::Interval gap;
};

// g(x) = m(x) (c x m(x) - 1 + c), positive and decreasing on every gap right
// of the first bulk; omega^2 g(rho) = 1 locates the outlier of a spike.
double g_func(const measure::ModelSpec& spec, double x);

// H(x) = int m(x)/(1 + c m(x) t) Lambda(dt), Hermitian for x in a gap.
linalg::ComplexMatrix compute_H(double c, const measure::DiscreteMeasure& nu,
                                const measure::MatrixMeasure& lambda, double x);

// Spike-mode shorthand with Lambda = nu x Omega.
linalg::ComplexMatrix compute_H(const measure::ModelSpec& spec, double x);

// For each spike and each gap at or right of the first bulk edge, bisects
// omega^2 g(x) = 1 (g decreasing, so at most one root per gap). Gaps left of
// the first bulk never hold outliers. Results sorted by rho descending.
std::vector<OutlierPrediction> find_outliers(const measure::ModelSpec& spec,
                                             const support::SupportReport& report);
std::vector<OutlierPrediction> find_outliers(const measure::ModelSpec& spec);

// General matrix-measure mode: zeros of det(H(x) + I_r) per gap, located by
// tracking the sorted eigenvalues of H(x) + I (each branch is increasing)
// and bisecting every sign change. Coincident roots merge into one
// prediction with the crossing count as multiplicity.
std::vector<OutlierPrediction> find_outliers_matrix(double c, const measure::DiscreteMeasure& nu,
                                                    const measure::MatrixMeasure& lambda,
                                                    const support::SupportReport& report);

// Inverse problem: spike amplitudes omega^2 = 1/g(rho) reproducing the
// requested outlier locations. Every target must lie strictly inside a gap
// at or right of the first bulk edge. Equal targets merge into one spike
// with the corresponding multiplicity.
std::vector<measure::Spike> design_spikes(const measure::ModelSpec& base,
                                          std::span<const double> targets);

}  // namespace covspec::outliers
