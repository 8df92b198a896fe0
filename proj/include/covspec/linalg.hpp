#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "covspec/rng.hpp"

namespace covspec::linalg {

using cplx = std::complex<double>;

// Dense complex matrix, row-major.
class ComplexMatrix {
  public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols) {}

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    cplx* row(std::size_t i) { return a_.data() + i * cols_; }
    const cplx* row(std::size_t i) const { return a_.data() + i * cols_; }

    cplx* data() { return a_.data(); }
    const cplx* data() const { return a_.data(); }

    // Largest entry modulus; 0 for an empty matrix.
    double max_abs() const;

    ComplexMatrix adjoint() const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> a_;
};

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b);

// Determinant by LU with partial pivoting.
cplx determinant(ComplexMatrix a);

// A * A^H, exploiting Hermitian symmetry of the result.
ComplexMatrix gram(const ComplexMatrix& a);

// A^H * A.
ComplexMatrix gram_transposed(const ComplexMatrix& a);

// Checks A = A^H up to `rtol` relative to max|A|.
bool is_hermitian(const ComplexMatrix& a, double rtol = 1e-12);

struct HermitianEigenResult {
    std::vector<double> eigenvalues;  // ascending
    ComplexMatrix eigenvectors;       // unitary, column k pairs with eigenvalue k
};

// Full spectral decomposition of a Hermitian matrix: Householder reduction
// to real symmetric tridiagonal form (complex phases absorbed into the
// accumulated unitary), then implicit-shift QL.
//
// Throws DomainError on non-square/non-Hermitian input and ConvergenceError
// if the QL iteration exceeds 30*dim sweeps.
HermitianEigenResult hermitian_eigen(const ComplexMatrix& a);

// Eigenvalues only (same algorithm, no vector accumulation). Used on the
// Monte Carlo hot path where the decomposition itself is not needed.
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& a);

// iid entries with independent N(0,1/2) real and imaginary parts (E|X|^2=1).
ComplexMatrix sample_complex_gaussian(std::size_t rows, std::size_t cols, Rng& rng);

// GUE matrix: real N(0,1) diagonal, off-diagonal complex with N(0,1/2)
// real and imaginary parts, Hermitian by construction.
ComplexMatrix sample_gue(std::size_t dim, Rng& rng);

}  // namespace covspec::linalg
