#pragma once

#include <complex>
#include <span>
#include <vector>

#include "covspec/measure.hpp"
#include "covspec/support.hpp"

namespace covspec::stieltjes {

using cplx = std::complex<double>;

struct StieltjesSolution {
    cplx z;
    cplx m;
    double residual = 0.0;  // |m - F(m)|
    long iterations = 0;
};

// Solves m = (-z + int t/(1+cmt) nu(dt))^{-1}, the unique Herglotz solution
// for Im z > 0. For real z outside the support the boundary value is reached
// by downward continuation in Im z followed by a real Newton polish; a real
// z inside a bulk raises DomainError.
StieltjesSolution solve_m(const measure::ModelSpec& spec, cplx z);

// Finite-n variant with nu_n = n^{-1} sum delta_{d_j} and ratio c_n.
StieltjesSolution solve_m_finite(double c_n, std::span<const double> d, cplx z);

// Shared core taking an arbitrary (c, nu) pair.
StieltjesSolution solve_m_measure(double c, const measure::DiscreteMeasure& nu, cplx z);

// Diagonal of T_tilde = [-z (I + c_n m_n D)]^{-1}; entry j is
// (-z(1 + c_n m_n d_j))^{-1}.
std::vector<cplx> t_tilde_diag(double c_n, std::span<const double> d, cplx z, cplx m_n);

struct DensityCurve {
    std::vector<double> grid;
    std::vector<double> values;      // f(x) >= 0
    double atom_at_zero = 0.0;
};

// f(x) = pi^{-1} Im m(x + i0+), evaluated by a small-y ladder with an
// on-axis Newton polish and Richardson extrapolation as fallback near edges.
DensityCurve density(const measure::ModelSpec& spec, std::vector<double> grid);

// Default grid: 2001 uniform points on [0, 1.2 * upper support edge].
DensityCurve density(const measure::ModelSpec& spec);

std::vector<double> default_density_grid(const measure::ModelSpec& spec,
                                         std::size_t points = 2001);

}  // namespace covspec::stieltjes
