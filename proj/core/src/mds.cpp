#include "risklab/mds.hpp"

#include "risklab/errors.hpp"
#include "risklab/linalg.hpp"
#include "risklab/snapshot.hpp"

#include <cmath>

namespace risklab {

Metric metric_from_string(const std::string& s) {
    if (s == "cosine") return Metric::cosine;
    if (s == "euclidean") return Metric::euclidean;
    throw UsageError("unknown metric: " + s + " (expected cosine or euclidean)");
}

std::string to_string(Metric m) { return m == Metric::cosine ? "cosine" : "euclidean"; }

DissimilarityMatrix pairwise_dissimilarity(const std::vector<std::vector<double>>& vecs,
                                           Metric metric) {
    const std::size_t n = vecs.size();
    if (n < 2) throw UsageError("need at least two vectors for a dissimilarity matrix");
    for (std::size_t i = 1; i < n; ++i) {
        if (vecs[i].size() != vecs[0].size()) {
            throw UsageError("dissimilarity inputs must have equal length");
        }
    }
    DissimilarityMatrix m;
    m.n = n;
    m.d.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v;
            if (metric == Metric::cosine) {
                v = cosine_dissimilarity(vecs[i], vecs[j]);
                if (v < 0.0) v = 0.0; // rounding can land at -1e-17
            } else {
                v = euclidean_distance(vecs[i], vecs[j]);
            }
            m.d[i * n + j] = v;
            m.d[j * n + i] = v;
        }
    }
    return m;
}

MdsResult classical_mds(const DissimilarityMatrix& dm, std::size_t k) {
    const std::size_t n = dm.n;
    if (n < 2) throw UsageError("classical scaling needs at least two points");
    if (k == 0 || k > n) throw UsageError("embedding dimension must be in [1,n]");
    if (dm.d.size() != n * n) throw UsageError("dissimilarity matrix size mismatch");
    for (double v : dm.d) {
        if (std::isnan(v)) {
            throw UsageError("dissimilarity matrix contains NaN (zero-norm input?)");
        }
    }

    // B = -J (D∘D) J / 2 with J = I - 11ᵀ/n
    std::vector<double> sq(n * n);
    for (std::size_t i = 0; i < n * n; ++i) sq[i] = dm.d[i] * dm.d[i];
    std::vector<double> row_mean(n, 0.0), col_mean(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            row_mean[i] += sq[i * n + j];
            col_mean[j] += sq[i * n + j];
            total += sq[i * n + j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        row_mean[i] /= static_cast<double>(n);
        col_mean[i] /= static_cast<double>(n);
    }
    total /= static_cast<double>(n * n);
    std::vector<double> b(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            b[i * n + j] = -0.5 * (sq[i * n + j] - row_mean[i] - col_mean[j] + total);
        }
    }

    EigenResult eig = jacobi_eigen_sym(std::move(b), n);

    MdsResult r;
    r.n = n;
    r.k = k;
    r.eigenvalues = eig.values;
    r.coords.assign(n * k, 0.0);
    double kept = 0.0, all = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double lambda = eig.values[j];
        all += lambda * lambda;
        if (j < k && lambda > 0.0) {
            kept += lambda * lambda;
            const double s = std::sqrt(lambda);
            for (std::size_t i = 0; i < n; ++i) {
                r.coords[i * k + j] = s * eig.vectors[i * n + j];
            }
        }
    }
    r.strain = all > 0.0 ? std::sqrt(std::max(0.0, all - kept) / all) : 0.0;
    return r;
}

} // namespace risklab
