#include "covspec/stieltjes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "covspec/errors.hpp"

namespace covspec::stieltjes {

namespace {

constexpr long kIterationBudget = 100000;

struct FixedPointMap {
    double c;
    const std::vector<measure::DiscreteMeasure::Atom>* atoms;

    // F(m) = 1/(-z + int t/(1+cmt) nu(dt))
    cplx apply(cplx z, cplx m) const {
        cplx s = 0.0;
        for (const auto& a : *atoms) s += a.w * a.t / (1.0 + c * m * a.t);
        return 1.0 / (-z + s);
    }

    // F'(m) = c F(m)^2 int t^2/(1+cmt)^2 nu(dt)
    cplx derivative(cplx z, cplx m, cplx fm) const {
        cplx s = 0.0;
        for (const auto& a : *atoms) {
            const cplx q = 1.0 + c * m * a.t;
            s += a.w * a.t * a.t / (q * q);
        }
        return c * fm * fm * s;
    }

    double x_prime_real(double m) const {
        double s = 0.0;
        for (const auto& a : *atoms) {
            const double q = 1.0 + c * m * a.t;
            s += a.w * a.t * a.t / (q * q);
        }
        return 1.0 / (m * m) - c * s;
    }
};

double residual_tol(cplx m) { return 1e-12 * std::max(1.0, std::abs(m)); }

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

// Damped fixed point, switching to Newton once progress stalls.
StieltjesSolution solve_at(const FixedPointMap& map, cplx z, cplx m0) {
    StieltjesSolution sol;
    sol.z = z;
    cplx m = m0;
    long iter = 0;
    double res = std::numeric_limits<double>::infinity();
    double window_best = res;

    while (iter < kIterationBudget) {
        // damped phase
        bool stalled = false;
        for (int k = 0; k < 512 && iter < kIterationBudget; ++k, ++iter) {
            const cplx fm = map.apply(z, m);
            if (!finite(fm)) {
                m = m0 * cplx{0.9, 0.1};  // nudge off the singular point
                continue;
            }
            res = std::abs(m - fm);
            if (res <= residual_tol(m)) {
                sol.m = m;
                sol.residual = res;
                sol.iterations = iter;
                return sol;
            }
            m = 0.5 * m + 0.5 * fm;
            if ((k & 63) == 63) {
                if (res > 0.5 * window_best) {
                    stalled = true;
                    ++iter;
                    break;
                }
                window_best = res;
            }
        }
        // Newton phase on G(m) = m - F(m)
        cplx mn = m;
        for (int k = 0; k < 100 && iter < kIterationBudget; ++k, ++iter) {
            const cplx fm = map.apply(z, mn);
            if (!finite(fm)) break;
            const cplx g = mn - fm;
            if (std::abs(g) <= residual_tol(mn)) {
                sol.m = mn;
                sol.residual = std::abs(g);
                sol.iterations = iter;
                return sol;
            }
            const cplx gp = 1.0 - map.derivative(z, mn, fm);
            if (std::abs(gp) < 1e-300) break;
            const cplx next = mn - g / gp;
            if (!finite(next)) break;
            mn = next;
        }
        const cplx fm = map.apply(z, mn);
        if (finite(fm) && std::abs(mn - fm) < res) m = mn;
        (void)stalled;
    }
    const cplx fm = map.apply(z, m);
    std::ostringstream os;
    os << "solve_m: no convergence at z=(" << z.real() << "," << z.imag() << "), last residual "
       << std::abs(m - fm);
    throw ConvergenceError(os.str(), std::abs(m - fm), iter);
}

// Boundary value on the real axis through a ladder of shrinking imaginary
// parts with warm starts, then a real Newton polish. Accepts only solutions
// certified to lie outside the support (x'(m) > 0).
StieltjesSolution solve_real_axis(const FixedPointMap& map, double x) {
    cplx m = -1.0 / cplx{x, 1.0};
    StieltjesSolution last;
    long total_iter = 0;
    for (double y = 1.0; y >= 0.5e-12; y *= 0.1) {
        last = solve_at(map, cplx{x, y}, m);
        m = last.m;
        total_iter += last.iterations;
    }
    if (std::abs(m.imag()) > 1e-6)
        throw DomainError("solve_m: real evaluation point lies inside the support");

    // real polish
    double mr = m.real();
    double res = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 100; ++k, ++total_iter) {
        const cplx fmc = map.apply(cplx{x, 0.0}, cplx{mr, 0.0});
        const double fm = fmc.real();
        if (!std::isfinite(fm)) break;
        res = std::abs(mr - fm);
        if (res <= residual_tol(mr)) break;
        const double gp = 1.0 - map.derivative(cplx{x, 0.0}, cplx{mr, 0.0}, fmc).real();
        if (std::abs(gp) < 1e-300) break;
        mr -= (mr - fm) / gp;
    }
    if (!(res <= residual_tol(mr)))
        throw ConvergenceError("solve_m: real-axis polish failed", res, total_iter);
    if (!(map.x_prime_real(mr) > 0.0))
        throw DomainError("solve_m: real evaluation point lies inside the support");

    StieltjesSolution sol;
    sol.z = cplx{x, 0.0};
    sol.m = cplx{mr, 0.0};
    sol.residual = res;
    sol.iterations = total_iter;
    return sol;
}

}  // namespace

StieltjesSolution solve_m_measure(double c, const measure::DiscreteMeasure& nu, cplx z) {
    FixedPointMap map{c, &nu.atoms()};
    if (z.imag() > 0.0) {
        StieltjesSolution sol = solve_at(map, z, -1.0 / z);
        if (sol.m.imag() < 0.0) {
            // wrong branch; restart from a conservative point high above
            sol = solve_at(map, z, cplx{0.0, 1.0 / std::max(1.0, std::abs(z))});
            if (sol.m.imag() < 0.0)
                throw ConvergenceError("solve_m: converged outside the upper half plane",
                                       sol.residual, sol.iterations);
        }
        return sol;
    }
    if (z.imag() < 0.0) {
        StieltjesSolution sol = solve_m_measure(c, nu, std::conj(z));
        sol.z = z;
        sol.m = std::conj(sol.m);
        return sol;
    }
    return solve_real_axis(map, z.real());
}

StieltjesSolution solve_m(const measure::ModelSpec& spec, cplx z) {
    spec.validate();
    return solve_m_measure(spec.c, spec.nu, z);
}

StieltjesSolution solve_m_finite(double c_n, std::span<const double> d, cplx z) {
    return solve_m_measure(c_n, measure::DiscreteMeasure::from_points(d), z);
}

std::vector<cplx> t_tilde_diag(double c_n, std::span<const double> d, cplx z, cplx m_n) {
    std::vector<cplx> out(d.size());
    for (std::size_t j = 0; j < d.size(); ++j) {
        const cplx q = 1.0 + c_n * m_n * d[j];
        if (std::abs(q) < 1e-14) {
            std::ostringstream os;
            os << "t_tilde_diag: 1 + c m d is singular at entry " << j << " (d=" << d[j] << ")";
            throw SingularityError(os.str());
        }
        out[j] = 1.0 / (-z * q);
    }
    return out;
}

std::vector<double> default_density_grid(const measure::ModelSpec& spec, std::size_t points) {
    double upper = 1.0;
    if (!spec.noise_free()) {
        const auto rep = support::compute_support(spec);
        upper = 1.2 * rep.bulks.back().hi;
    }
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = upper * static_cast<double>(i) / static_cast<double>(points - 1);
    return grid;
}

DensityCurve density(const measure::ModelSpec& spec) {
    return density(spec, default_density_grid(spec));
}

DensityCurve density(const measure::ModelSpec& spec, std::vector<double> grid) {
    spec.validate();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0) throw DomainError("density: grid points must be nonnegative");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw DomainError("density: grid must be strictly increasing");
    }

    DensityCurve curve;
    curve.grid = std::move(grid);
    curve.values.assign(curve.grid.size(), 0.0);
    if (spec.noise_free()) {
        curve.atom_at_zero = 1.0;
        return curve;
    }
    curve.atom_at_zero = std::max(0.0, 1.0 - 1.0 / spec.c);

    FixedPointMap map{spec.c, &spec.nu.atoms()};
    static constexpr double kLadder[3] = {1e-3, 5e-4, 2.5e-4};
    const std::size_t npts = curve.grid.size();
    std::vector<std::array<cplx, 3>> m_at(npts);

    for (int lvl = 0; lvl < 3; ++lvl) {
        const double y = kLadder[lvl];
        cplx warm = -1.0 / cplx{curve.grid.front(), 1.0};
        for (std::size_t i = 0; i < npts; ++i) {
            const cplx z{curve.grid[i], y};
            // seed from the previous grid point at this level (first level)
            // or from the coarser level at the same point
            const cplx seed = (lvl == 0) ? warm : m_at[i][lvl - 1];
            const auto sol = solve_at(map, z, seed);
            m_at[i][lvl] = sol.m;
            warm = sol.m;
        }
    }

    for (std::size_t i = 0; i < npts; ++i) {
        const double x = curve.grid[i];
        // On-axis Newton from the finest ladder point gives the exact
        // boundary value wherever it converges.
        cplx m = m_at[i][2];
        bool polished = false;
        for (int k = 0; k < 60; ++k) {
            const cplx fm = map.apply(cplx{x, 0.0}, m);
            if (!finite(fm)) break;
            const cplx g = m - fm;
            if (std::abs(g) <= residual_tol(m)) {
                polished = true;
                break;
            }
            const cplx gp = 1.0 - map.derivative(cplx{x, 0.0}, m, fm);
            if (std::abs(gp) < 1e-300) break;
            m -= g / gp;
        }
        double f;
        if (polished && m.imag() > -1e-12 && std::abs(m.imag()) < 1e6) {
            f = std::max(0.0, m.imag()) / M_PI;
        } else {
            // Richardson extrapolation to y -> 0 (quadratic fit on a
            // half-and-half ladder): f0 = f1/3 - 2 f2 + (8/3) f3.
            const double f1 = m_at[i][0].imag(), f2 = m_at[i][1].imag(), f3 = m_at[i][2].imag();
            f = std::max(0.0, (f1 / 3.0 - 2.0 * f2 + (8.0 / 3.0) * f3) / M_PI);
        }
        curve.values[i] = f;
    }

    // The Stieltjes transform diverges at an atom of mu; the atom is
    // reported separately, so the x = 0 sample carries the continuous part
    // only, which we cannot resolve there.
    if (curve.grid.front() == 0.0 && curve.atom_at_zero > 0.0) curve.values.front() = 0.0;
    return curve;
}

}  // namespace covspec::stieltjes
