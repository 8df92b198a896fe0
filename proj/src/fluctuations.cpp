#include "covspec/fluctuations.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "covspec/errors.hpp"
#include "covspec/stieltjes.hpp"

namespace covspec::fluct {

namespace {

struct Kernels {
    double m;  // m(rho)
    double c;
    const measure::DiscreteMeasure* nu;

    double sum(const std::function<double(double, double)>& f) const {
        double s = 0.0;
        for (const auto& a : nu->atoms()) {
            const double q = 1.0 + c * m * a.t;
            s += a.w * f(a.t, q);
        }
        return s;
    }
};

Kernels kernels_at(const measure::ModelSpec& spec, double rho) {
    const auto sol = stieltjes::solve_m(spec, {rho, 0.0});
    return {sol.m.real(), spec.c, &spec.nu};
}

void require_on_curve(const measure::ModelSpec& spec, double rho, double omega_sq) {
    const double g = outliers::g_func(spec, rho);
    if (std::abs(omega_sq * g - 1.0) > 1e-8) {
        std::ostringstream os;
        os << "fluctuations: rho=" << rho << " does not satisfy omega^2 g(rho) = 1 "
           << "(missed by " << std::abs(omega_sq * g - 1.0) << ")";
        throw DomainError(os.str());
    }
}

double delta_from(const Kernels& k) {
    const double sub =
        k.c * k.sum([&](double t, double q) { return (k.m * t / q) * (k.m * t / q); });
    return 1.0 - sub;
}

}  // namespace

double compute_delta(const measure::ModelSpec& spec, double rho) {
    const auto k = kernels_at(spec, rho);
    const double delta = delta_from(k);
    if (!(delta > 0.0)) {
        std::ostringstream os;
        os << "compute_delta: Delta(" << rho << ") = " << delta
           << " is not positive; rho is misplaced";
        throw Error(os.str());
    }
    return delta;
}

double compute_alpha_sq(const measure::ModelSpec& spec, double rho, double omega_sq) {
    require_on_curve(spec, rho, omega_sq);
    const auto k = kernels_at(spec, rho);
    const double delta = delta_from(k);
    const double int1 =
        k.sum([&](double t, double q) { return (t * t + 2.0 * omega_sq * t) / (q * q); });
    const double int2 = k.sum([&](double t, double q) { return omega_sq * k.m * t / (q * q); });
    return k.m * k.m / delta * (int1 + k.c * int2 * int2);
}

Lemma3pVariances compute_lemma3p_variances(const measure::ModelSpec& spec, double rho,
                                           double omega_sq) {
    require_on_curve(spec, rho, omega_sq);
    const auto k = kernels_at(spec, rho);
    const double delta = delta_from(k);
    const double m2 = k.m * k.m;
    Lemma3pVariances v{};
    v.varsigma_sq = omega_sq / delta * k.sum([&](double t, double q) { return m2 * t / (q * q); });
    v.sigma_sq = 1.0 / delta * k.sum([&](double t, double q) { return m2 * m2 * t * t / (q * q); });
    const double i = k.sum([&](double t, double q) { return k.m * t / (q * q); });
    v.sigma_tilde_sq = k.c * omega_sq * omega_sq / (rho * rho * delta) * i * i;
    return v;
}

double g_prime(const measure::ModelSpec& spec, double rho) {
    const auto k = kernels_at(spec, rho);
    const double delta = delta_from(k);
    const double m_prime = k.m * k.m / delta;
    return m_prime * (2.0 * k.c * rho * k.m - 1.0 + k.c) + k.c * k.m * k.m;
}

linalg::ComplexMatrix compute_bias(double c_n, std::span<const double> d,
                                   const measure::MatrixMeasure& lambda_n, double rho,
                                   std::size_t block_offset, std::size_t block_size) {
    if (block_offset + block_size > lambda_n.dim())
        throw DomainError("compute_bias: block exceeds the measure dimension");
    const auto sol = stieltjes::solve_m_finite(c_n, d, {rho, 0.0});
    const double m = sol.m.real();
    linalg::ComplexMatrix h(block_size, block_size);
    for (const auto& atom : lambda_n.atoms()) {
        const double q = 1.0 + c_n * m * atom.t;
        if (std::abs(q) < 1e-12) {
            std::ostringstream os;
            os << "compute_bias: 1 + c m t is singular at atom t=" << atom.t;
            throw SingularityError(os.str());
        }
        const double coeff = m / q;
        for (std::size_t i = 0; i < block_size; ++i)
            for (std::size_t j = 0; j < block_size; ++j)
                h(i, j) += coeff * atom.weight(block_offset + i, block_offset + j);
    }
    const double root_n = std::sqrt(static_cast<double>(d.size()));
    for (std::size_t i = 0; i < block_size; ++i) {
        h(i, i) += 1.0;
        for (std::size_t j = 0; j < block_size; ++j) h(i, j) *= root_n;
    }
    return h;
}

FluctuationReport make_report(const measure::ModelSpec& spec,
                              const outliers::OutlierPrediction& prediction) {
    if (!prediction.spike_omega_sq)
        throw DomainError("make_report: prediction carries no spike amplitude");
    FluctuationReport rep;
    rep.rho = prediction.rho;
    rep.omega_sq = *prediction.spike_omega_sq;
    rep.multiplicity = prediction.multiplicity;
    rep.delta = compute_delta(spec, rep.rho);
    rep.g_prime = g_prime(spec, rep.rho);
    rep.alpha_sq = compute_alpha_sq(spec, rep.rho, rep.omega_sq);
    const auto v = compute_lemma3p_variances(spec, rep.rho, rep.omega_sq);
    rep.varsigma_sq = v.varsigma_sq;
    rep.sigma_sq = v.sigma_sq;
    rep.sigma_tilde_sq = v.sigma_tilde_sq;
    rep.scale = 1.0 / (rep.omega_sq * rep.g_prime);
    rep.bias = linalg::ComplexMatrix(rep.multiplicity, rep.multiplicity);
    return rep;
}

std::vector<double> sample_limit_law(const FluctuationReport& report, Rng& rng) {
    const std::size_t j = report.multiplicity;
    const double alpha = std::sqrt(std::max(0.0, report.alpha_sq));
    auto g = linalg::sample_gue(j, rng);
    for (std::size_t a = 0; a < j; ++a)
        for (std::size_t b = 0; b < j; ++b) {
            linalg::cplx v = alpha * g(a, b);
            if (report.bias.rows() == j) v += report.bias(a, b);
            g(a, b) = report.scale * v;
        }
    auto ev = linalg::hermitian_eigenvalues(g);
    std::reverse(ev.begin(), ev.end());
    return ev;
}

}  // namespace covspec::fluct
