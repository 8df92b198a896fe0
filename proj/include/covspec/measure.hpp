#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "covspec/linalg.hpp"

namespace covspec::measure {

using cplx = std::complex<double>;

// Finite nonnegative measure on [0,inf) as weighted atoms. Atoms are kept
// sorted by location with duplicates merged.
class DiscreteMeasure {
  public:
    struct Atom {
        double t;
        double w;
    };

    DiscreteMeasure() = default;
    explicit DiscreteMeasure(std::vector<Atom> atoms);

    static DiscreteMeasure dirac(double t) { return DiscreteMeasure({{t, 1.0}}); }

    // Empirical measure n^{-1} sum delta_{d_j}.
    static DiscreteMeasure from_points(std::span<const double> d);

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    double total_mass() const;
    bool is_probability(double tol = 1e-12) const;

    double min_location() const;
    double max_location() const;

    // Mass of the atom at zero (0 if none).
    double mass_at_zero() const;

  private:
    std::vector<Atom> atoms_;
};

// r x r Hermitian-PSD-weighted measure on [0,inf).
class MatrixMeasure {
  public:
    struct Atom {
        double t;
        linalg::ComplexMatrix weight;  // r x r, Hermitian PSD
    };

    MatrixMeasure() = default;
    MatrixMeasure(std::size_t dim, std::vector<Atom> atoms);

    // Product measure nu x Omega for a diagonal weight profile given as
    // (omega_sq, multiplicity) blocks.
    static MatrixMeasure product(const DiscreteMeasure& nu,
                                 const std::vector<std::pair<double, std::size_t>>& blocks);

    std::size_t dim() const { return dim_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    linalg::ComplexMatrix total_mass() const;

  private:
    std::size_t dim_ = 0;
    std::vector<Atom> atoms_;
};

struct Spike {
    double omega_sq;        // > 0
    std::size_t multiplicity;  // >= 1
};

// Full asymptotic model: dimensional ratio c, unit-mass noise profile nu,
// and the spike amplitudes with multiplicities (strictly decreasing omega^2).
struct ModelSpec {
    double c = 1.0;
    DiscreteMeasure nu;
    std::vector<Spike> spikes;

    std::size_t total_rank() const;

    // True for the degenerate noiseless profile nu = delta_0.
    bool noise_free() const;

    // Throws InvalidSpecError when a field violates its invariants. An atom
    // at zero is rejected unless it carries all the mass (the caller is
    // expected to fold partial zero mass into c beforehand).
    void validate() const;
};

cplx integrate(const DiscreteMeasure& m, const std::function<cplx(double)>& kernel);

linalg::ComplexMatrix integrate_matrix(const MatrixMeasure& m,
                                       const std::function<cplx(double)>& kernel);

// d_j = F_nu^{-1}((j - 1/2)/n); converges weakly to nu and every value lies
// in supp(nu).
std::vector<double> quantile_discretize(const DiscreteMeasure& nu, std::size_t n);

}  // namespace covspec::measure
