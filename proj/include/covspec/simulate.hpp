#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "covspec/fluctuations.hpp"
#include "covspec/measure.hpp"
#include "covspec/outliers.hpp"
#include "covspec/stieltjes.hpp"
#include "covspec/support.hpp"

namespace covspec::sim {

struct RealizationConfig {
    measure::ModelSpec spec;
    std::size_t n = 0;
    std::size_t N = 0;  // round(c * n)
    std::uint64_t seed = 0;
    std::size_t trials = 1;
    // Replace the iid signal matrix S by a fixed block lattice with the same
    // per-atom second moments, removing all P-side randomness.
    bool deterministic_s = false;
};

RealizationConfig make_config(const measure::ModelSpec& spec, std::size_t n, std::uint64_t seed,
                              std::size_t trials, bool deterministic_s = false);

// One finite-n draw of Sigma = n^{-1/2} X D^{1/2} + P with P = U R^* built
// so that Lambda_n -> nu x Omega.
struct Realization {
    linalg::ComplexMatrix sigma;  // N x n
    linalg::ComplexMatrix y;      // X D^{1/2} (noise part, unscaled)
    linalg::ComplexMatrix p;      // N x n
    linalg::ComplexMatrix u;      // N x r isometry
    linalg::ComplexMatrix r_fac;  // n x r, P = U R^*
    std::vector<double> d;        // diagonal of D
};

Realization build_realization(const RealizationConfig& cfg, std::size_t trial_index);

struct TrialResult {
    std::vector<double> eigenvalues;              // of Sigma Sigma^*, ascending, N values
    std::vector<std::size_t> outliers_per_gap;    // aligned with report.gaps
    std::vector<std::vector<double>> spike_top;   // per spike, its block of top
                                                  // eigenvalues in descending order
};

TrialResult run_trial(const RealizationConfig& cfg, const support::SupportReport& report,
                      std::size_t trial_index);

// Resolvent data of the undeformed Gram matrix, prepared once per trial from
// a single eigendecomposition of the smaller side.
struct ShatContext {
    std::size_t n = 0;
    std::size_t big_n = 0;
    std::size_t r = 0;
    std::vector<double> lambda;       // eigenvalues of n^{-1} Y Y^* (nonzero part)
    linalg::ComplexMatrix a;          // r x K: U^* v_k
    linalg::ComplexMatrix b;          // r x K: R^* vtilde_k
    linalg::ComplexMatrix uu, rr;     // U^*U and R^*R
    linalg::ComplexMatrix aah, bbh;   // running sums A A^H, B B^H
};

ShatContext make_shat_context(const Realization& real);

// det of the 2r x 2r detection matrix S_hat(x); its zeros on a gap are
// exactly the eigenvalues of Sigma Sigma^* there. x must stay at least 1e-8
// away from the spectrum of n^{-1} Y Y^*.
double shat_det(const ShatContext& ctx, double x);

struct DensityExperiment {
    std::vector<double> bin_edges;
    std::vector<double> histogram;  // averaged, density-normalized
    stieltjes::DensityCurve theory;
    double l1_distance = 0.0;  // over bins fully inside a bulk
    double atom_fraction = 0.0;
};

DensityExperiment experiment_density(const RealizationConfig& cfg, std::size_t bins);

struct FluctuationExperiment {
    std::size_t coords = 1;
    std::vector<std::vector<double>> draws;  // per kept trial: sqrt(n)(lambda - rho), descending
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<double> ks_distance;         // per coordinate, vs the limit-law sampler
    std::size_t escape_count = 0;
    std::size_t sampler_draws = 0;
};

FluctuationExperiment experiment_fluctuations(const RealizationConfig& cfg,
                                              const outliers::OutlierPrediction& prediction,
                                              const fluct::FluctuationReport& report,
                                              std::size_t sampler_draws = 100000);

// Independent trials over a small worker pool; honors COVSPEC_THREADS.
void parallel_trials(std::size_t trials, const std::function<void(std::size_t)>& fn);
std::size_t worker_count();

// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace covspec::sim
