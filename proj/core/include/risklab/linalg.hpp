#pragma once

#include <cstddef>
#include <vector>

namespace risklab {

struct EigenResult {
    std::vector<double> values;  // descending
    std::vector<double> vectors; // n*n row-major; column j pairs with values[j]
};

// Symmetric eigendecomposition by the cyclic Jacobi rotation method.
// a is n*n row-major and must be symmetric; only the given storage is
// touched (no workspace allocation beyond the copy). Deterministic: fixed
// sweep order (p<q row-major), and each eigenvector is normalized so its
// first component of magnitude > 1e-12 is positive.
EigenResult jacobi_eigen_sym(std::vector<double> a, std::size_t n,
                             int max_sweeps = 64);

// Singular values (descending) of an m*n row-major matrix via one-sided
// Jacobi orthogonalization of the columns. Handles m < n by transposing.
std::vector<double> singular_values(const std::vector<double>& a,
                                    std::size_t m, std::size_t n,
                                    int max_sweeps = 64);

// Solve A x = b via Gaussian elimination with partial pivoting.
// a is n*n row-major; both arguments are consumed. Throws on a pivot
// smaller than 1e-13 * max|A|.
std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b,
                                 std::size_t n);

} // namespace risklab
