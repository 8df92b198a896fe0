#pragma once

#include <span>
#include <vector>

#include "covspec/measure.hpp"
#include "covspec/outliers.hpp"
#include "covspec/rng.hpp"

namespace covspec::fluct {

// Second-order data at one outlier location.
struct FluctuationReport {
    double rho = 0.0;
    double omega_sq = 0.0;
    std::size_t multiplicity = 1;
    double delta = 0.0;            // Delta(rho) in (0,1]
    double g_prime = 0.0;          // g'(rho), negative on outlier gaps
    double alpha_sq = 0.0;
    double varsigma_sq = 0.0;
    double sigma_sq = 0.0;
    double sigma_tilde_sq = 0.0;
    double scale = 0.0;            // 1/(omega^2 g'(rho))
    linalg::ComplexMatrix bias;    // j x j Hermitian, zero unless injected
};

// Delta(rho) = 1 - c int (m t/(1+cmt))^2 nu(dt); satisfies m' Delta = m^2.
double compute_delta(const measure::ModelSpec& spec, double rho);

// alpha^2 = m^2/Delta [ int (t^2+2w^2 t)/(1+cmt)^2 nu(dt)
//                       + c (int w^2 m t/(1+cmt)^2 nu(dt))^2 ].
// Requires omega^2 g(rho) = 1 within 1e-8 (re-verified, not re-solved).
double compute_alpha_sq(const measure::ModelSpec& spec, double rho, double omega_sq);

struct Lemma3pVariances {
    double varsigma_sq;
    double sigma_sq;
    double sigma_tilde_sq;
};

// The three diagnostic variances; they recombine exactly as
// sigma^2/m^2 + rho^2 m^2 sigma_tilde^2 + 2 varsigma^2 = alpha^2.
Lemma3pVariances compute_lemma3p_variances(const measure::ModelSpec& spec, double rho,
                                           double omega_sq);

// g'(rho) from the analytic identity m' = m^2/Delta:
// g' = m'(2 c x m - 1 + c) + c m^2.
double g_prime(const measure::ModelSpec& spec, double rho);

// sqrt(n) * (block of H_n(rho) + I) for the given diagonal block of
// Lambda_n, with m_n from the finite-n fixed point.
linalg::ComplexMatrix compute_bias(double c_n, std::span<const double> d,
                                   const measure::MatrixMeasure& lambda_n, double rho,
                                   std::size_t block_offset, std::size_t block_size);

// Assembles the full report for one predicted outlier; bias defaults to the
// zero matrix.
FluctuationReport make_report(const measure::ModelSpec& spec,
                              const outliers::OutlierPrediction& prediction);

// One draw from the limiting law: descending eigenvalues of
// scale * (alpha G + bias) with G ~ GUE(j).
std::vector<double> sample_limit_law(const FluctuationReport& report, Rng& rng);

}  // namespace covspec::fluct
