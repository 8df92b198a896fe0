#include <chrono>
#include <cstdio>
#include "covspec/linalg.hpp"
#include "covspec/rng.hpp"

using namespace covspec;
using namespace covspec::linalg;

int main() {
    for (std::size_t n : {400u, 1000u}) {
        Rng rng(7);
        auto x = sample_complex_gaussian(n, n, rng);
        auto t0 = std::chrono::steady_clock::now();
        auto g = gram(x);
        auto t1 = std::chrono::steady_clock::now();
        auto ev = hermitian_eigenvalues(g);
        auto t2 = std::chrono::steady_clock::now();
        auto full = hermitian_eigen(g);
        auto t3 = std::chrono::steady_clock::now();
        double tg = std::chrono::duration<double>(t1 - t0).count();
        double tv = std::chrono::duration<double>(t2 - t1).count();
        double tf = std::chrono::duration<double>(t3 - t2).count();
        // residual check on the full decomposition: ||A v - l v|| per column
        double worst = 0.0;
        for (std::size_t k = 0; k < n; k += n / 8) {
            double r2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cplx acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += g(i, j) * full.eigenvectors(j, k);
                acc -= full.eigenvalues[k] * full.eigenvectors(i, k);
                r2 += std::norm(acc);
            }
            if (std::sqrt(r2) > worst) worst = std::sqrt(r2);
        }
        double trace = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) { trace += g(i,i).real(); sum += ev[i]; }
        std::printf("n=%zu gram=%.3fs values=%.3fs full=%.3fs  worst_col_resid=%.2e trace_err=%.2e norm=%.1f\n",
                    n, tg, tv, tf, worst, std::abs(trace - sum), g.max_abs());
    }
    return 0;
}
