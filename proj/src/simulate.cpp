#include "covspec/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "covspec/errors.hpp"

namespace covspec::sim {

namespace {

using linalg::ComplexMatrix;
using linalg::cplx;

std::vector<double> spike_amplitudes(const measure::ModelSpec& spec) {
    std::vector<double> w;
    for (const auto& s : spec.spikes)
        for (std::size_t k = 0; k < s.multiplicity; ++k) w.push_back(std::sqrt(s.omega_sq));
    return w;
}

// Signal matrix replacement used by the deterministic-S flag: within every
// block of equal diagonal entries the rows cycle through scaled canonical
// vectors, so that sum_j s_j s_j^* equals (block size) * I_r exactly and
// Lambda_n = nu_n x Omega with no sampling noise.
ComplexMatrix deterministic_signal(const std::vector<double>& d, std::size_t r) {
    const std::size_t n = d.size();
    ComplexMatrix s(n, r);
    std::size_t j0 = 0;
    while (j0 < n) {
        std::size_t j1 = j0;
        while (j1 < n && d[j1] == d[j0]) ++j1;
        const std::size_t cnt = j1 - j0;
        if (cnt < r)
            throw DomainError(
                "deterministic S requires every equal-diagonal block to have at least r rows");
        for (std::size_t k = 0; k < r; ++k) {
            const std::size_t cnt_k = (cnt - k - 1) / r + 1;  // rows with residue k
            const double scale = std::sqrt(static_cast<double>(cnt) / static_cast<double>(cnt_k));
            for (std::size_t j = k; j < cnt; j += r) s(j0 + j, k) = scale;
        }
        j0 = j1;
    }
    return s;
}

double near_zero_threshold(double scale) { return 1e-8 * std::max(scale, 1.0); }

}  // namespace

RealizationConfig make_config(const measure::ModelSpec& spec, std::size_t n, std::uint64_t seed,
                              std::size_t trials, bool deterministic_s) {
    spec.validate();
    RealizationConfig cfg;
    cfg.spec = spec;
    cfg.n = n;
    cfg.N = static_cast<std::size_t>(std::llround(spec.c * static_cast<double>(n)));
    cfg.seed = seed;
    cfg.trials = trials;
    cfg.deterministic_s = deterministic_s;
    if (cfg.N < 1) throw InvalidSpecError("make_config: N = round(c n) must be >= 1");
    if (n < spec.total_rank())
        throw InvalidSpecError("make_config: n must be at least the total spike rank");
    return cfg;
}

Realization build_realization(const RealizationConfig& cfg, std::size_t trial_index) {
    const std::size_t n = cfg.n, N = cfg.N;
    const std::size_t r = cfg.spec.total_rank();
    if (r > std::min(N, n)) throw DomainError("build_realization: rank exceeds min(N, n)");

    Rng rng(Rng::derive_seed(cfg.seed, trial_index));
    Realization real;
    real.d = measure::quantile_discretize(cfg.spec.nu, n);

    // Y = X D^{1/2}; X first, then S, for a stable stream layout.
    real.y = linalg::sample_complex_gaussian(N, n, rng);
    for (std::size_t j = 0; j < n; ++j) {
        const double s = std::sqrt(real.d[j]);
        for (std::size_t i = 0; i < N; ++i) real.y(i, j) *= s;
    }

    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    real.u = ComplexMatrix(N, r);
    for (std::size_t k = 0; k < r; ++k) real.u(k, k) = 1.0;

    ComplexMatrix s_mat = cfg.deterministic_s
                              ? deterministic_signal(real.d, r)
                              : (r > 0 ? linalg::sample_complex_gaussian(n, r, rng)
                                       : ComplexMatrix(n, 0));
    const auto omega = spike_amplitudes(cfg.spec);
    real.r_fac = ComplexMatrix(n, r);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < r; ++k) real.r_fac(j, k) = inv_sqrt_n * omega[k] * s_mat(j, k);

    // P = U R^*: with canonical U only the first r rows are nonzero.
    real.p = ComplexMatrix(N, n);
    for (std::size_t k = 0; k < r; ++k)
        for (std::size_t j = 0; j < n; ++j) real.p(k, j) = std::conj(real.r_fac(j, k));

    real.sigma = real.p;
    for (std::size_t i = 0; i < N; ++i) {
        const cplx* yi = real.y.row(i);
        cplx* si = real.sigma.row(i);
        for (std::size_t j = 0; j < n; ++j) si[j] += inv_sqrt_n * yi[j];
    }
    return real;
}

TrialResult run_trial(const RealizationConfig& cfg, const support::SupportReport& report,
                      std::size_t trial_index) {
    const auto real = build_realization(cfg, trial_index);
    TrialResult res;
    try {
        const ComplexMatrix g = (cfg.N <= cfg.n) ? linalg::gram(real.sigma)
                                                 : linalg::gram_transposed(real.sigma);
        res.eigenvalues = linalg::hermitian_eigenvalues(g);
    } catch (const Error& e) {
        std::ostringstream os;
        os << "run_trial(" << trial_index << "): " << e.what();
        throw Error(os.str());
    }
    if (cfg.N > cfg.n)  // Sigma Sigma^* carries N-n structural zeros
        res.eigenvalues.insert(res.eigenvalues.begin(), cfg.N - cfg.n, 0.0);

    for (const auto& gap : report.gaps) {
        const double inset =
            std::isinf(gap.hi) ? 1e-3 * std::max(1.0, gap.lo) : 1e-3 * (gap.hi - gap.lo);
        const double lo = gap.lo + inset;
        const double hi = std::isinf(gap.hi) ? std::numeric_limits<double>::infinity()
                                             : gap.hi - inset;
        std::size_t count = 0;
        for (double ev : res.eigenvalues)
            if (ev > lo && ev < hi) ++count;
        res.outliers_per_gap.push_back(count);
    }

    std::size_t offset = 0;
    for (const auto& spike : cfg.spec.spikes) {
        std::vector<double> block;
        for (std::size_t k = 0; k < spike.multiplicity; ++k) {
            const std::size_t idx = res.eigenvalues.size() - 1 - offset - k;
            block.push_back(res.eigenvalues[idx]);
        }
        res.spike_top.push_back(std::move(block));
        offset += spike.multiplicity;
    }
    return res;
}

ShatContext make_shat_context(const Realization& real) {
    const std::size_t N = real.y.rows(), n = real.y.cols();
    const std::size_t r = real.u.cols();
    ShatContext ctx;
    ctx.n = n;
    ctx.big_n = N;
    ctx.r = r;
    if (r == 0) return ctx;

    const double inv_n = 1.0 / static_cast<double>(n);
    ComplexMatrix gsmall = (N <= n) ? linalg::gram(real.y) : linalg::gram_transposed(real.y);
    for (std::size_t i = 0; i < gsmall.rows(); ++i)
        for (std::size_t j = 0; j < gsmall.cols(); ++j) gsmall(i, j) *= inv_n;
    const auto eig = linalg::hermitian_eigen(gsmall);
    const std::size_t K = eig.eigenvalues.size();
    ctx.lambda = eig.eigenvalues;

    const double root_n = std::sqrt(static_cast<double>(n));
    if (N <= n) {
        // columns of V are the v_k; vtilde_k = Y^* v_k / (sqrt(n) sqrt(l_k))
        ctx.a = multiply(real.u.adjoint(), eig.eigenvectors);
        ComplexMatrix ry = multiply(real.r_fac.adjoint(), real.y.adjoint());  // r x N
        ctx.b = multiply(ry, eig.eigenvectors);
        for (std::size_t k = 0; k < K; ++k) {
            const double l = std::max(ctx.lambda[k], 1e-300);
            const double s = 1.0 / (root_n * std::sqrt(l));
            for (std::size_t i = 0; i < r; ++i) ctx.b(i, k) *= s;
        }
    } else {
        // columns of V are the vtilde_k; v_k = Y vtilde_k / (sqrt(n) sqrt(l_k))
        ctx.b = multiply(real.r_fac.adjoint(), eig.eigenvectors);
        ComplexMatrix uy = multiply(real.u.adjoint(), real.y);  // r x n
        ctx.a = multiply(uy, eig.eigenvectors);
        for (std::size_t k = 0; k < K; ++k) {
            const double l = std::max(ctx.lambda[k], 1e-300);
            const double s = 1.0 / (root_n * std::sqrt(l));
            for (std::size_t i = 0; i < r; ++i) ctx.a(i, k) *= s;
        }
    }
    ctx.uu = multiply(real.u.adjoint(), real.u);
    ctx.rr = multiply(real.r_fac.adjoint(), real.r_fac);
    ctx.aah = multiply(ctx.a, ctx.a.adjoint());
    ctx.bbh = multiply(ctx.b, ctx.b.adjoint());
    return ctx;
}

double shat_det(const ShatContext& ctx, double x) {
    if (ctx.r == 0) return 1.0;
    const std::size_t r = ctx.r, K = ctx.lambda.size();
    for (double l : ctx.lambda)
        if (std::abs(l - x) < 1e-8)
            throw SingularityError("shat_det: x collides with an eigenvalue of n^{-1} Y Y^*");

    ComplexMatrix qu(r, r), qtr(r, r), yqtr(r, r);
    for (std::size_t k = 0; k < K; ++k) {
        const double w = 1.0 / (ctx.lambda[k] - x);
        const double sw = std::sqrt(std::max(ctx.lambda[k], 0.0)) * w;
        for (std::size_t i = 0; i < r; ++i) {
            const cplx ai = ctx.a(i, k);
            const cplx bi = ctx.b(i, k);
            for (std::size_t j = 0; j < r; ++j) {
                qu(i, j) += w * ai * std::conj(ctx.a(j, k));
                qtr(i, j) += w * bi * std::conj(ctx.b(j, k));
                yqtr(i, j) += sw * ai * std::conj(ctx.b(j, k));
            }
        }
    }
    const double minus_inv_x = -1.0 / x;
    if (K < ctx.big_n)
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < r; ++j)
                qu(i, j) += minus_inv_x * (ctx.uu(i, j) - ctx.aah(i, j));
    if (K < ctx.n)
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < r; ++j)
                qtr(i, j) += minus_inv_x * (ctx.rr(i, j) - ctx.bbh(i, j));

    const double sx = std::sqrt(x);
    ComplexMatrix s(2 * r, 2 * r);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
            s(i, j) = sx * qu(i, j);
            s(i, r + j) = yqtr(i, j) + ((i == j) ? 1.0 : 0.0);
            s(r + i, j) = std::conj(yqtr(j, i)) + ((i == j) ? 1.0 : 0.0);
            s(r + i, r + j) = sx * qtr(i, j);
        }
    }
    return linalg::determinant(s).real();
}

std::size_t worker_count() {
    if (const char* env = std::getenv("COVSPEC_THREADS")) {
        const long v = std::atol(env);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

void parallel_trials(std::size_t trials, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(trials, 1));
    if (workers <= 1) {
        for (std::size_t t = 0; t < trials; ++t) fn(t);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t t = next.fetch_add(1);
                if (t >= trials) return;
                try {
                    fn(t);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

DensityExperiment experiment_density(const RealizationConfig& cfg, std::size_t bins) {
    if (bins < 1) throw DomainError("experiment_density: need at least one bin");
    const auto report = support::compute_support(cfg.spec);
    DensityExperiment exp;
    exp.theory = stieltjes::density(cfg.spec);

    const double hi = report.bulks.empty() ? std::max(1.0, exp.theory.grid.back())
                                           : 1.05 * report.bulks.back().hi;
    exp.bin_edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b)
        exp.bin_edges[b] = hi * static_cast<double>(b) / static_cast<double>(bins);
    const double width = hi / static_cast<double>(bins);

    std::vector<std::vector<std::size_t>> counts(cfg.trials, std::vector<std::size_t>(bins, 0));
    std::vector<std::size_t> zero_counts(cfg.trials, 0);
    const double zt = near_zero_threshold(hi);
    parallel_trials(cfg.trials, [&](std::size_t t) {
        const auto trial = run_trial(cfg, report, t);
        for (double ev : trial.eigenvalues) {
            if (ev < zt) ++zero_counts[t];
            if (ev >= 0.0 && ev < hi) {
                const auto b = static_cast<std::size_t>(ev / width);
                ++counts[t][std::min(b, bins - 1)];
            }
        }
    });

    exp.histogram.assign(bins, 0.0);
    double zeros = 0.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        zeros += static_cast<double>(zero_counts[t]);
        for (std::size_t b = 0; b < bins; ++b)
            exp.histogram[b] += static_cast<double>(counts[t][b]);
    }
    const double norm = static_cast<double>(cfg.trials) * static_cast<double>(cfg.N) * width;
    for (auto& h : exp.histogram) h /= norm;
    exp.atom_fraction = zeros / (static_cast<double>(cfg.trials) * static_cast<double>(cfg.N));

    // L1 over bins fully inside a bulk, against the bin-averaged theory.
    const auto& grid = exp.theory.grid;
    const auto& vals = exp.theory.values;
    auto curve_at = [&](double x) {
        const auto it = std::upper_bound(grid.begin(), grid.end(), x);
        if (it == grid.begin()) return vals.front();
        if (it == grid.end()) return vals.back();
        const std::size_t k = static_cast<std::size_t>(it - grid.begin());
        const double t = (x - grid[k - 1]) / (grid[k] - grid[k - 1]);
        return (1.0 - t) * vals[k - 1] + t * vals[k];
    };
    double l1 = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double lo = exp.bin_edges[b], up = exp.bin_edges[b + 1];
        bool in_bulk = false;
        for (const auto& bulk : report.bulks)
            if (lo >= bulk.lo && up <= bulk.hi) in_bulk = true;
        if (!in_bulk) continue;
        // bin average of the theory by the trapezoid rule on 8 sub-points
        double avg = 0.0;
        constexpr int kSub = 8;
        for (int s = 0; s <= kSub; ++s) {
            const double x = lo + (up - lo) * s / kSub;
            avg += curve_at(x) * ((s == 0 || s == kSub) ? 0.5 : 1.0);
        }
        avg /= kSub;
        l1 += std::abs(exp.histogram[b] - avg) * width;
    }
    exp.l1_distance = l1;
    return exp;
}

FluctuationExperiment experiment_fluctuations(const RealizationConfig& cfg,
                                              const outliers::OutlierPrediction& prediction,
                                              const fluct::FluctuationReport& report,
                                              std::size_t sampler_draws) {
    const auto sup = support::compute_support(cfg.spec);
    const auto preds = outliers::find_outliers(cfg.spec, sup);
    std::size_t offset = 0;
    bool found = false;
    for (const auto& p : preds) {
        if (std::abs(p.rho - prediction.rho) <= 1e-9 * std::max(1.0, prediction.rho)) {
            found = true;
            break;
        }
        offset += p.multiplicity;
    }
    if (!found) throw DomainError("experiment_fluctuations: prediction not found for this spec");

    const std::size_t j = prediction.multiplicity;
    const double root_n = std::sqrt(static_cast<double>(cfg.n));
    const double inset = std::isinf(prediction.gap.hi)
                             ? 1e-3 * std::max(1.0, prediction.gap.lo)
                             : 1e-3 * (prediction.gap.hi - prediction.gap.lo);
    const double glo = prediction.gap.lo + inset;
    const double ghi = std::isinf(prediction.gap.hi) ? std::numeric_limits<double>::infinity()
                                                     : prediction.gap.hi - inset;

    FluctuationExperiment exp;
    exp.coords = j;
    std::vector<std::vector<double>> per_trial(cfg.trials);
    std::vector<char> escaped(cfg.trials, 0);
    parallel_trials(cfg.trials, [&](std::size_t t) {
        const auto trial = run_trial(cfg, sup, t);
        std::vector<double> coords(j);
        bool esc = false;
        for (std::size_t k = 0; k < j; ++k) {
            const double ev = trial.eigenvalues[trial.eigenvalues.size() - 1 - offset - k];
            if (!(ev > glo && ev < ghi)) esc = true;
            coords[k] = root_n * (ev - prediction.rho);
        }
        if (esc)
            escaped[t] = 1;
        else
            per_trial[t] = std::move(coords);
    });

    for (std::size_t t = 0; t < cfg.trials; ++t) {
        if (escaped[t])
            ++exp.escape_count;
        else
            exp.draws.push_back(std::move(per_trial[t]));
    }

    exp.mean.assign(j, 0.0);
    exp.stddev.assign(j, 0.0);
    const double kept = static_cast<double>(exp.draws.size());
    if (kept > 1) {
        for (const auto& dr : exp.draws)
            for (std::size_t k = 0; k < j; ++k) exp.mean[k] += dr[k];
        for (auto& m : exp.mean) m /= kept;
        for (const auto& dr : exp.draws)
            for (std::size_t k = 0; k < j; ++k) {
                const double c = dr[k] - exp.mean[k];
                exp.stddev[k] += c * c;
            }
        for (auto& s : exp.stddev) s = std::sqrt(s / (kept - 1.0));
    }

    exp.sampler_draws = sampler_draws;
    Rng rng(Rng::derive_seed(cfg.seed, 0x5a17c0deULL));
    std::vector<std::vector<double>> sampler(j);
    for (std::size_t s = 0; s < sampler_draws; ++s) {
        const auto draw = fluct::sample_limit_law(report, rng);
        for (std::size_t k = 0; k < j; ++k) sampler[k].push_back(draw[k]);
    }
    exp.ks_distance.assign(j, 0.0);
    for (std::size_t k = 0; k < j; ++k) {
        std::vector<double> emp;
        emp.reserve(exp.draws.size());
        for (const auto& dr : exp.draws) emp.push_back(dr[k]);
        exp.ks_distance[k] = emp.empty() ? 1.0 : ks_distance(std::move(emp), std::move(sampler[k]));
    }
    return exp;
}

}  // namespace covspec::sim
