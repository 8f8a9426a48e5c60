#include "exbound/num.hpp"

#include <algorithm>

namespace exbound::num {

std::vector<double> tridiag_solve(std::span<const double> lower,
                                  std::span<const double> diag,
                                  std::span<const double> upper,
                                  std::span<const double> rhs) {
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n) {
        throw std::invalid_argument("tridiag_solve: size mismatch");
    }
    std::vector<double> c(n), d(n), x(n);
    double beta = diag[0];
    if (beta == 0.0) throw std::runtime_error("tridiag_solve: zero pivot");
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for (std::size_t i = 1; i < n; ++i) {
        beta = diag[i] - lower[i] * c[i - 1];
        if (beta == 0.0) throw std::runtime_error("tridiag_solve: zero pivot");
        c[i] = upper[i] / beta;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    return x;
}

}  // namespace exbound::num
