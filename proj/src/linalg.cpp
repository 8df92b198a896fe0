#include "covspec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include "covspec/errors.hpp"

namespace covspec::linalg {

double ComplexMatrix::max_abs() const {
    double m = 0.0;
    for (const auto& v : a_) m = std::max(m, std::abs(v));
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = std::conj((*this)(i, j));
    return t;
}

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw DomainError("multiply: dimension mismatch");
    ComplexMatrix c(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        cplx* ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx{}) continue;
            const cplx* bk = b.row(k);
            for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

cplx determinant(ComplexMatrix a) {
    if (a.rows() != a.cols()) throw DomainError("determinant: matrix is not square");
    const std::size_t n = a.rows();
    cplx det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (a(piv, k) == cplx{}) return 0.0;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            det = -det;
        }
        det *= a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const cplx f = a(i, k) / a(k, k);
            if (f == cplx{}) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return det;
}

namespace {

// dot(row_i, conj(row_j)) over interleaved (re,im) storage; contiguous and
// written so the compiler can vectorize it.
inline cplx row_dot_conj(const cplx* a, const cplx* b, std::size_t n) {
    const double* x = reinterpret_cast<const double*>(a);
    const double* y = reinterpret_cast<const double*>(b);
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double xr = x[2 * k], xi = x[2 * k + 1];
        const double yr = y[2 * k], yi = y[2 * k + 1];
        re += xr * yr + xi * yi;
        im += xi * yr - xr * yi;
    }
    return {re, im};
}

}  // namespace

ComplexMatrix gram(const ComplexMatrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    ComplexMatrix g(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const cplx v = row_dot_conj(a.row(i), a.row(j), n);
            g(i, j) = (i == j) ? cplx{v.real(), 0.0} : v;
            g(j, i) = std::conj(g(i, j));
        }
    }
    return g;
}

ComplexMatrix gram_transposed(const ComplexMatrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    ComplexMatrix g(n, n);
    // Rank-1 accumulation keeps the inner loop over contiguous row storage.
    for (std::size_t k = 0; k < m; ++k) {
        const cplx* rk = a.row(k);
        const double* rkd = reinterpret_cast<const double*>(rk);
        for (std::size_t i = 0; i < n; ++i) {
            const double cr = rkd[2 * i], ci = -rkd[2 * i + 1];
            double* gi = reinterpret_cast<double*>(g.row(i));
            for (std::size_t j = i; j < n; ++j) {
                const double br = rkd[2 * j], bi = rkd[2 * j + 1];
                gi[2 * j] += cr * br - ci * bi;
                gi[2 * j + 1] += cr * bi + ci * br;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        g(i, i) = {g(i, i).real(), 0.0};
        for (std::size_t j = 0; j < i; ++j) g(i, j) = std::conj(g(j, i));
    }
    return g;
}

bool is_hermitian(const ComplexMatrix& a, double rtol) {
    if (a.rows() != a.cols()) return false;
    const double scale = a.max_abs();
    const double tol = rtol * std::max(scale, 1e-300);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            if (std::abs(a(i, j) - std::conj(a(j, i))) > tol) return false;
    return true;
}

namespace {

// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
// form. On return d holds the diagonal and e the (real, nonnegative)
// subdiagonal, e[i] sitting between d[i] and d[i+1]. When q is non-null the
// accumulated unitary (reflectors times the phase diagonal) is written to it,
// so that A = Q T Q^H with T real tridiagonal.
void tridiagonalize(ComplexMatrix w, std::vector<double>& d, std::vector<double>& e,
                    ComplexMatrix* q) {
    const std::size_t n = w.rows();
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    if (n == 0) return;

    std::vector<cplx> sub(n, 0.0);   // complex subdiagonal produced by the reduction
    std::vector<double> beta(n, 0.0);
    std::vector<double> vr(n), vi(n), pr(n), pi(n);

    for (std::size_t k = 0; k + 2 < n; ++k) {
        const std::size_t m = n - k - 1;  // length of the column under the diagonal
        double tail2 = 0.0;
        for (std::size_t i = 1; i < m; ++i) tail2 += std::norm(w(k + 1 + i, k));
        const cplx x0 = w(k + 1, k);
        if (tail2 == 0.0) {
            sub[k] = x0;
            beta[k] = 0.0;
            continue;
        }
        const double xnorm = std::sqrt(tail2 + std::norm(x0));
        const double x0abs = std::abs(x0);
        const cplx phase = (x0abs > 0.0) ? x0 / x0abs : cplx{1.0, 0.0};
        const cplx alpha = -phase * xnorm;

        // v = x - alpha*e1; magnitudes add because alpha shares x0's phase.
        for (std::size_t i = 0; i < m; ++i) {
            const cplx xi = w(k + 1 + i, k);
            vr[i] = xi.real();
            vi[i] = xi.imag();
        }
        const cplx v0 = x0 - alpha;
        vr[0] = v0.real();
        vi[0] = v0.imag();
        const double vnorm2 = 2.0 * xnorm * (xnorm + x0abs);
        const double b = 2.0 / vnorm2;

        // p = beta * T v over the trailing block.
        for (std::size_t i = 0; i < m; ++i) {
            const double* rp = reinterpret_cast<const double*>(w.row(k + 1 + i) + (k + 1));
            double re = 0.0, im = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double tr = rp[2 * j], ti = rp[2 * j + 1];
                re += tr * vr[j] - ti * vi[j];
                im += tr * vi[j] + ti * vr[j];
            }
            pr[i] = b * re;
            pi[i] = b * im;
        }
        // w_vec = p - K v with K = (beta/2) Re(v^H p).
        double vhp = 0.0;
        for (std::size_t i = 0; i < m; ++i) vhp += vr[i] * pr[i] + vi[i] * pi[i];
        const double kk = 0.5 * b * vhp;
        for (std::size_t i = 0; i < m; ++i) {
            pr[i] -= kk * vr[i];
            pi[i] -= kk * vi[i];
        }
        // T <- T - v w^H - w v^H.
        for (std::size_t i = 0; i < m; ++i) {
            double* rp = reinterpret_cast<double*>(w.row(k + 1 + i) + (k + 1));
            const double ar = vr[i], ai = vi[i];
            const double br = pr[i], bi = pi[i];
            for (std::size_t j = 0; j < m; ++j) {
                rp[2 * j] -= ar * pr[j] + ai * pi[j] + br * vr[j] + bi * vi[j];
                rp[2 * j + 1] -= ai * pr[j] - ar * pi[j] + bi * vr[j] - br * vi[j];
            }
        }

        sub[k] = alpha;
        beta[k] = b;
        // Stash v in the (now conceptually zero) part of column k for the
        // backward accumulation pass.
        for (std::size_t i = 0; i < m; ++i) w(k + 1 + i, k) = cplx{vr[i], vi[i]};
    }
    if (n >= 2) sub[n - 2] = w(n - 1, n - 2);

    for (std::size_t i = 0; i < n; ++i) d[i] = w(i, i).real();

    if (q) {
        *q = ComplexMatrix::identity(n);
        for (std::size_t kk1 = n - 2; kk1 > 0; --kk1) {
            const std::size_t k = kk1 - 1;  // k = n-3 .. 0
            if (beta[k] == 0.0) continue;
            const std::size_t m = n - k - 1;
            const double b = beta[k];
            for (std::size_t i = 0; i < m; ++i) {
                const cplx v = w(k + 1 + i, k);
                vr[i] = v.real();
                vi[i] = v.imag();
            }
            // Q[k+1.., k+1..] <- (I - beta v v^H) Q: first t = v^H Q.
            for (std::size_t j = 0; j < m; ++j) pr[j] = pi[j] = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double ar = vr[i], ai = vi[i];
                const double* rp = reinterpret_cast<const double*>(q->row(k + 1 + i) + (k + 1));
                for (std::size_t j = 0; j < m; ++j) {
                    pr[j] += ar * rp[2 * j] + ai * rp[2 * j + 1];
                    pi[j] += ar * rp[2 * j + 1] - ai * rp[2 * j];
                }
            }
            for (std::size_t i = 0; i < m; ++i) {
                const double ar = b * vr[i], ai = b * vi[i];
                double* rp = reinterpret_cast<double*>(q->row(k + 1 + i) + (k + 1));
                for (std::size_t j = 0; j < m; ++j) {
                    rp[2 * j] -= ar * pr[j] - ai * pi[j];
                    rp[2 * j + 1] -= ar * pi[j] + ai * pr[j];
                }
            }
        }
    }

    // Absorb the complex phases of the subdiagonal into the unitary so the
    // tridiagonal matrix is real with nonnegative subdiagonal.
    cplx phi{1.0, 0.0};
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double mag = std::abs(sub[k]);
        e[k] = mag;
        const cplx phi_next = (mag > 0.0) ? phi * (sub[k] / mag) : phi;
        phi = phi_next;
        if (q)
            for (std::size_t i = 0; i < n; ++i) (*q)(i, k + 1) *= phi_next;
    }
}

// Implicit-shift QL on a real symmetric tridiagonal matrix, rotations
// optionally applied to the complex columns of q. Total sweep budget is
// 30*n as a whole; exceeding it reports the eigenvalue index being worked.
void ql_implicit(std::vector<double>& d, std::vector<double>& e, ComplexMatrix* q) {
    const std::size_t n = d.size();
    if (n <= 1) return;
    const double eps = std::numeric_limits<double>::epsilon();
    long sweeps = 0;
    const long budget = 30 * static_cast<long>(n);

    for (std::size_t l = 0; l < n; ++l) {
        for (;;) {
            std::size_t m = l;
            while (m + 1 < n) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
                ++m;
            }
            if (m == l) break;
            if (++sweeps > budget) {
                std::ostringstream os;
                os << "hermitian_eigen: QL failed to converge at index " << l << " after "
                   << sweeps - 1 << " sweeps";
                throw ConvergenceError(os.str(), std::abs(e[l]), sweeps - 1);
            }
            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, p = 0.0;
            bool underflow = false;
            for (std::size_t i1 = m; i1 > l; --i1) {
                const std::size_t i = i1 - 1;
                double f = s * e[i];
                const double bb = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - bb;
                if (q) {
                    for (std::size_t row = 0; row < q->rows(); ++row) {
                        const cplx qf = (*q)(row, i + 1);
                        (*q)(row, i + 1) = s * (*q)(row, i) + c * qf;
                        (*q)(row, i) = c * (*q)(row, i) - s * qf;
                    }
                }
            }
            if (underflow) continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

void check_hermitian_input(const ComplexMatrix& a) {
    if (a.rows() != a.cols()) {
        std::ostringstream os;
        os << "hermitian_eigen: matrix is not square (" << a.rows() << "x" << a.cols() << ")";
        throw DomainError(os.str());
    }
    if (!is_hermitian(a, 1e-12)) throw DomainError("hermitian_eigen: matrix is not Hermitian");
}

}  // namespace

HermitianEigenResult hermitian_eigen(const ComplexMatrix& a) {
    check_hermitian_input(a);
    const std::size_t n = a.rows();
    HermitianEigenResult out;
    out.eigenvectors = ComplexMatrix::identity(n);
    std::vector<double> d, e;
    tridiagonalize(a, d, e, &out.eigenvectors);
    ql_implicit(d, e, &out.eigenvectors);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] < d[j]; });
    out.eigenvalues.resize(n);
    ComplexMatrix sorted(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = d[order[j]];
        for (std::size_t i = 0; i < n; ++i) sorted(i, j) = out.eigenvectors(i, order[j]);
    }
    out.eigenvectors = std::move(sorted);
    return out;
}

std::vector<double> hermitian_eigenvalues(const ComplexMatrix& a) {
    check_hermitian_input(a);
    std::vector<double> d, e;
    tridiagonalize(a, d, e, nullptr);
    ql_implicit(d, e, nullptr);
    std::sort(d.begin(), d.end());
    return d;
}

ComplexMatrix sample_complex_gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
    if (rows == 0 || cols == 0) throw DomainError("sample_complex_gaussian: empty dimensions");
    ComplexMatrix m(rows, cols);
    cplx* p = m.data();
    for (std::size_t k = 0; k < rows * cols; ++k) p[k] = rng.complex_gaussian();
    return m;
}

ComplexMatrix sample_gue(std::size_t dim, Rng& rng) {
    if (dim == 0) throw DomainError("sample_gue: dimension must be >= 1");
    ComplexMatrix g(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
        g(i, i) = rng.normal();
        for (std::size_t j = i + 1; j < dim; ++j) {
            const cplx z = rng.complex_gaussian();
            g(i, j) = z;
            g(j, i) = std::conj(z);
        }
    }
    return g;
}

}  // namespace covspec::linalg
