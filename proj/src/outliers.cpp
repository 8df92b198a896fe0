#include "covspec/outliers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "covspec/errors.hpp"
#include "covspec/stieltjes.hpp"

namespace covspec::outliers {

namespace {

// Bracket endpoints sit a small inset inside the gap to dodge the edge
// singularities of m(x).
double gap_inset(const support::Interval& g) {
    if (std::isinf(g.hi)) return 1e-6 * std::max(1.0, g.lo);
    return 1e-6 * (g.hi - g.lo);
}

// Upper search bound for the unbounded gap. g(x) ~ kappa/x at infinity, so
// the bracket always closes after finitely many decade extensions.
double unbounded_search_limit(const measure::ModelSpec& spec, const support::Interval& g,
                              double omega_sq) {
    double x_max = 1e3 * std::max({g.lo, 1.0});
    for (int k = 0; k < 40; ++k) {
        if (omega_sq * g_func(spec, x_max) < 1.0) return x_max;
        x_max *= 10.0;
    }
    throw Error("find_outliers: could not close the bracket in the unbounded gap");
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= 1e-12 * std::max(1.0, std::abs(mid))) return mid;
        const double fm = f(mid);
        if ((flo > 0.0) == (fm > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

void sort_descending(std::vector<OutlierPrediction>& v) {
    std::sort(v.begin(), v.end(),
              [](const OutlierPrediction& a, const OutlierPrediction& b) { return a.rho > b.rho; });
}

}  // namespace

double g_func(const measure::ModelSpec& spec, double x) {
    const auto sol = stieltjes::solve_m(spec, {x, 0.0});
    const double m = sol.m.real();
    return m * (spec.c * x * m - 1.0 + spec.c);
}

linalg::ComplexMatrix compute_H(double c, const measure::DiscreteMeasure& nu,
                                const measure::MatrixMeasure& lambda, double x) {
    const auto sol = stieltjes::solve_m_measure(c, nu, {x, 0.0});
    const double m = sol.m.real();
    linalg::ComplexMatrix h(lambda.dim(), lambda.dim());
    for (const auto& atom : lambda.atoms()) {
        const double q = 1.0 + c * m * atom.t;
        if (std::abs(q) < 1e-12) {
            std::ostringstream os;
            os << "compute_H: 1 + c m t is singular at atom t=" << atom.t;
            throw SingularityError(os.str());
        }
        const double coeff = m / q;
        for (std::size_t i = 0; i < h.rows(); ++i)
            for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) += coeff * atom.weight(i, j);
    }
    return h;
}

linalg::ComplexMatrix compute_H(const measure::ModelSpec& spec, double x) {
    std::vector<std::pair<double, std::size_t>> blocks;
    for (const auto& s : spec.spikes) blocks.emplace_back(s.omega_sq, s.multiplicity);
    return compute_H(spec.c, spec.nu, measure::MatrixMeasure::product(spec.nu, blocks), x);
}

std::vector<OutlierPrediction> find_outliers(const measure::ModelSpec& spec,
                                             const support::SupportReport& report) {
    spec.validate();
    std::vector<OutlierPrediction> out;
    for (const auto& gap : report.outlier_gaps()) {
        const double inset = gap_inset(gap);
        for (const auto& spike : spec.spikes) {
            const double lo = gap.lo + inset;
            const double hi =
                std::isinf(gap.hi) ? unbounded_search_limit(spec, gap, spike.omega_sq)
                                   : gap.hi - inset;
            auto f = [&](double x) { return spike.omega_sq * g_func(spec, x) - 1.0; };
            const double flo = f(lo);
            const double fhi = f(hi);
            if (flo <= 0.0 || fhi >= 0.0) continue;  // no root in this gap
            const double rho = bisect(f, lo, hi);
            out.push_back({rho, spike.multiplicity, spike.omega_sq, gap});
        }
    }
    sort_descending(out);
    return out;
}

std::vector<OutlierPrediction> find_outliers(const measure::ModelSpec& spec) {
    return find_outliers(spec, support::compute_support(spec));
}

std::vector<OutlierPrediction> find_outliers_matrix(double c, const measure::DiscreteMeasure& nu,
                                                    const measure::MatrixMeasure& lambda,
                                                    const support::SupportReport& report) {
    const std::size_t r = lambda.dim();
    std::vector<OutlierPrediction> out;
    if (r == 0) return out;

    for (const auto& gap : report.outlier_gaps()) {
        const double inset = gap_inset(gap);
        double lo = gap.lo + inset;
        double hi;
        if (std::isinf(gap.hi)) {
            hi = 1e3 * std::max(gap.lo, 1.0);
            auto min_eig_shifted = [&](double x) {
                auto h = compute_H(c, nu, lambda, x);
                for (std::size_t i = 0; i < r; ++i) h(i, i) += 1.0;
                return linalg::hermitian_eigenvalues(h).front();
            };
            int guard = 0;
            while (min_eig_shifted(hi) < 0.0 && guard++ < 40) hi *= 10.0;
        } else {
            hi = gap.hi - inset;
        }

        constexpr std::size_t kGrid = 512;
        std::vector<double> xs(kGrid);
        for (std::size_t i = 0; i < kGrid; ++i)
            xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kGrid - 1);
        std::vector<std::vector<double>> branch(kGrid);
        double scale = 0.0;
        for (std::size_t i = 0; i < kGrid; ++i) {
            auto h = compute_H(c, nu, lambda, xs[i]);
            scale = std::max(scale, h.max_abs() + 1.0);
            for (std::size_t k = 0; k < r; ++k) h(k, k) += 1.0;
            branch[i] = linalg::hermitian_eigenvalues(h);
        }
        // Each sorted eigenvalue branch of H(x)+I is increasing on the gap;
        // a decrease beyond tolerance flags a tracking failure.
        for (std::size_t i = 0; i + 1 < kGrid; ++i)
            for (std::size_t k = 0; k < r; ++k)
                if (branch[i + 1][k] < branch[i][k] - 1e-8 * scale)
                    throw Error(
                        "find_outliers_matrix: eigenvalue tracking discontinuity; "
                        "use a finer grid");

        std::vector<double> roots;
        for (std::size_t k = 0; k < r; ++k) {
            for (std::size_t i = 0; i + 1 < kGrid; ++i) {
                if ((branch[i][k] < 0.0) != (branch[i + 1][k] < 0.0)) {
                    auto fk = [&](double x) {
                        auto h = compute_H(c, nu, lambda, x);
                        for (std::size_t d = 0; d < r; ++d) h(d, d) += 1.0;
                        return linalg::hermitian_eigenvalues(h)[k];
                    };
                    roots.push_back(bisect(fk, xs[i], xs[i + 1]));
                    break;  // increasing branch: one crossing at most
                }
            }
        }
        std::sort(roots.begin(), roots.end());
        for (std::size_t i = 0; i < roots.size();) {
            std::size_t j = i;
            while (j + 1 < roots.size() &&
                   roots[j + 1] - roots[i] <= 1e-9 * std::max(1.0, std::abs(roots[i])))
                ++j;
            out.push_back({roots[i], j - i + 1, std::nullopt, gap});
            i = j + 1;
        }
    }
    sort_descending(out);
    return out;
}

std::vector<measure::Spike> design_spikes(const measure::ModelSpec& base,
                                          std::span<const double> targets) {
    if (!base.spikes.empty())
        throw InvalidSpecError("design_spikes: base spec must not carry spikes");
    base.validate();
    if (targets.empty()) return {};
    const auto report = support::compute_support(base);

    std::vector<double> sorted(targets.begin(), targets.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<measure::Spike> spikes;
    for (std::size_t i = 0; i < sorted.size();) {
        const double rho = sorted[i];
        std::size_t mult = 1;
        while (i + mult < sorted.size() && sorted[i + mult] == rho) ++mult;
        i += mult;

        const auto gap = report.gap_containing(rho);
        if (!gap) {
            std::ostringstream os;
            os << "design_spikes: target " << rho << " lies inside a bulk";
            throw DomainError(os.str());
        }
        if (gap->lo < report.first_bulk_left_edge) {
            std::ostringstream os;
            os << "design_spikes: no outlier can exist left of the first bulk (target " << rho
               << ")";
            throw DomainError(os.str());
        }
        const double g = g_func(base, rho);
        if (!(g > 0.0)) {
            std::ostringstream os;
            os << "design_spikes: g(" << rho << ") = " << g << " is not positive";
            throw Error(os.str());
        }
        spikes.push_back({1.0 / g, mult});
    }
    // g decreasing per gap gives distinct omega^2 for distinct targets in the
    // same gap; across gaps merge coincidences.
    std::sort(spikes.begin(), spikes.end(),
              [](const measure::Spike& a, const measure::Spike& b) { return a.omega_sq > b.omega_sq; });
    std::vector<measure::Spike> merged;
    for (const auto& s : spikes) {
        if (!merged.empty() &&
            std::abs(merged.back().omega_sq - s.omega_sq) <= 1e-12 * merged.back().omega_sq)
            merged.back().multiplicity += s.multiplicity;
        else
            merged.push_back(s);
    }
    return merged;
}

}  // namespace covspec::outliers
