#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace risklab {

enum class Metric { cosine, euclidean };

Metric metric_from_string(const std::string& s);
std::string to_string(Metric m);

struct DissimilarityMatrix {
    std::size_t n = 0;
    std::vector<double> d; // n*n row-major, symmetric, zero diagonal

    double at(std::size_t i, std::size_t j) const { return d[i * n + j]; }
};

// Pairwise dissimilarities of flattened weight vectors. Cosine entries are
// one minus cosine similarity, clamped at zero when rounding drives a
// tiny negative; a zero-norm vector makes its row/column NaN.
DissimilarityMatrix pairwise_dissimilarity(const std::vector<std::vector<double>>& vecs,
                                           Metric metric);

struct MdsResult {
    std::size_t n = 0, k = 0;
    std::vector<double> coords;      // n*k row-major
    std::vector<double> eigenvalues; // all n, descending
    double strain = 0.0;             // share of spectrum mass left out of the
                                     // embedding, sqrt(sum dropped λ² / sum λ²)
};

// Classical scaling: double-center -D∘D/2, eigendecompose with the Jacobi
// rotation method, embed on the k largest nonnegative eigenpairs. Columns
// come out in eigenvalue order; an exactly k-dimensional configuration
// reproduces itself up to rotation and reflection. NaN entries in d are
// rejected.
MdsResult classical_mds(const DissimilarityMatrix& d, std::size_t k);

} // namespace risklab
