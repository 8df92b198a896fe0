#include "covspec/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "covspec/errors.hpp"

namespace covspec::measure {

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (const auto& a : atoms_) {
        if (!std::isfinite(a.t) || a.t < 0.0) {
            std::ostringstream os;
            os << "DiscreteMeasure: atom location " << a.t << " is not a finite nonnegative value";
            throw InvalidSpecError(os.str());
        }
        if (!std::isfinite(a.w) || a.w <= 0.0) {
            std::ostringstream os;
            os << "DiscreteMeasure: weight " << a.w << " at t=" << a.t << " must be positive";
            throw InvalidSpecError(os.str());
        }
    }
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.t < b.t; });
    std::vector<Atom> merged;
    for (const auto& a : atoms_) {
        if (!merged.empty() && merged.back().t == a.t)
            merged.back().w += a.w;
        else
            merged.push_back(a);
    }
    atoms_ = std::move(merged);
}

DiscreteMeasure DiscreteMeasure::from_points(std::span<const double> d) {
    if (d.empty()) throw InvalidSpecError("DiscreteMeasure::from_points: empty point set");
    const double w = 1.0 / static_cast<double>(d.size());
    std::vector<Atom> atoms;
    atoms.reserve(d.size());
    for (double t : d) atoms.push_back({t, w});
    return DiscreteMeasure(std::move(atoms));
}

double DiscreteMeasure::total_mass() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.w;
    return s;
}

bool DiscreteMeasure::is_probability(double tol) const {
    return std::abs(total_mass() - 1.0) <= tol;
}

double DiscreteMeasure::min_location() const {
    return atoms_.empty() ? 0.0 : atoms_.front().t;
}

double DiscreteMeasure::max_location() const {
    return atoms_.empty() ? 0.0 : atoms_.back().t;
}

double DiscreteMeasure::mass_at_zero() const {
    return (!atoms_.empty() && atoms_.front().t == 0.0) ? atoms_.front().w : 0.0;
}

MatrixMeasure::MatrixMeasure(std::size_t dim, std::vector<Atom> atoms)
    : dim_(dim), atoms_(std::move(atoms)) {
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.t < b.t; });
    for (const auto& a : atoms_) {
        if (!std::isfinite(a.t) || a.t < 0.0)
            throw InvalidSpecError("MatrixMeasure: atom location must be finite and nonnegative");
        if (a.weight.rows() != dim_ || a.weight.cols() != dim_)
            throw InvalidSpecError("MatrixMeasure: weight dimension mismatch");
        if (!linalg::is_hermitian(a.weight, 1e-12))
            throw InvalidSpecError("MatrixMeasure: weight is not Hermitian");
        // PSD within -1e-12 * ||W||.
        const double scale = a.weight.max_abs();
        if (scale > 0.0) {
            const auto ev = linalg::hermitian_eigenvalues(a.weight);
            if (ev.front() < -1e-12 * scale)
                throw InvalidSpecError("MatrixMeasure: weight is not positive semidefinite");
        }
    }
}

MatrixMeasure MatrixMeasure::product(const DiscreteMeasure& nu,
                                     const std::vector<std::pair<double, std::size_t>>& blocks) {
    std::size_t r = 0;
    for (const auto& [w2, mult] : blocks) r += mult;
    std::vector<Atom> atoms;
    for (const auto& a : nu.atoms()) {
        linalg::ComplexMatrix w(r, r);
        std::size_t off = 0;
        for (const auto& [w2, mult] : blocks) {
            for (std::size_t k = 0; k < mult; ++k) w(off + k, off + k) = a.w * w2;
            off += mult;
        }
        atoms.push_back({a.t, std::move(w)});
    }
    return MatrixMeasure(r, std::move(atoms));
}

linalg::ComplexMatrix MatrixMeasure::total_mass() const {
    linalg::ComplexMatrix s(dim_, dim_);
    for (const auto& a : atoms_)
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j) s(i, j) += a.weight(i, j);
    return s;
}

std::size_t ModelSpec::total_rank() const {
    std::size_t r = 0;
    for (const auto& s : spikes) r += s.multiplicity;
    return r;
}

bool ModelSpec::noise_free() const {
    return nu.size() == 1 && nu.atoms().front().t == 0.0;
}

void ModelSpec::validate() const {
    if (!std::isfinite(c) || c <= 0.0) throw InvalidSpecError("ModelSpec: c must be positive");
    if (nu.size() == 0) throw InvalidSpecError("ModelSpec: nu has no atoms");
    if (!nu.is_probability())
        throw InvalidSpecError("ModelSpec: nu must have total mass 1");
    if (nu.mass_at_zero() > 0.0 && !noise_free())
        throw InvalidSpecError(
            "ModelSpec: nu({0}) > 0 is not supported; fold the zero mass into c first "
            "(only the pure nu = delta_0 noiseless model is accepted)");
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& s : spikes) {
        if (!std::isfinite(s.omega_sq) || s.omega_sq <= 0.0)
            throw InvalidSpecError("ModelSpec: spike omega^2 must be positive");
        if (s.multiplicity == 0)
            throw InvalidSpecError("ModelSpec: spike multiplicity must be >= 1");
        if (s.omega_sq >= prev)
            throw InvalidSpecError("ModelSpec: spike omega^2 values must be strictly decreasing");
        prev = s.omega_sq;
    }
}

cplx integrate(const DiscreteMeasure& m, const std::function<cplx(double)>& kernel) {
    cplx s = 0.0;
    for (const auto& a : m.atoms()) {
        const cplx v = kernel(a.t);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            std::ostringstream os;
            os << "integrate: kernel is not finite at atom t=" << a.t;
            throw DomainError(os.str());
        }
        s += a.w * v;
    }
    return s;
}

linalg::ComplexMatrix integrate_matrix(const MatrixMeasure& m,
                                       const std::function<cplx(double)>& kernel) {
    linalg::ComplexMatrix s(m.dim(), m.dim());
    for (const auto& a : m.atoms()) {
        const cplx v = kernel(a.t);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            std::ostringstream os;
            os << "integrate_matrix: kernel is not finite at atom t=" << a.t;
            throw DomainError(os.str());
        }
        for (std::size_t i = 0; i < m.dim(); ++i)
            for (std::size_t j = 0; j < m.dim(); ++j) s(i, j) += v * a.weight(i, j);
    }
    return s;
}

std::vector<double> quantile_discretize(const DiscreteMeasure& nu, std::size_t n) {
    if (n == 0) throw DomainError("quantile_discretize: n must be >= 1");
    if (!nu.is_probability())
        throw DomainError("quantile_discretize: nu must have total mass 1");
    std::vector<double> d(n);
    const auto& atoms = nu.atoms();
    std::size_t k = 0;
    double cum = atoms.empty() ? 0.0 : atoms[0].w;
    for (std::size_t j = 0; j < n; ++j) {
        const double p = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
        while (cum < p && k + 1 < atoms.size()) {
            ++k;
            cum += atoms[k].w;
        }
        d[j] = atoms[k].t;
    }
    return d;
}

}  // namespace covspec::measure
