#include "risklab/linalg.hpp"

#include "risklab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace risklab {

namespace {

double off_diagonal_norm(const std::vector<double>& a, std::size_t n) {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            s += a[p * n + q] * a[p * n + q];
        }
    }
    return std::sqrt(2.0 * s);
}

} // namespace

EigenResult jacobi_eigen_sym(std::vector<double> a, std::size_t n, int max_sweeps) {
    if (a.size() != n * n) throw std::invalid_argument("jacobi_eigen_sym: bad size");
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    double frob = 0.0;
    for (double x : a) frob += x * x;
    frob = std::sqrt(frob);
    const double stop = 1e-14 * (frob > 0.0 ? frob : 1.0);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_diagonal_norm(a, n) <= stop) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::fabs(apq) <= 1e-300) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i != p && i != q) {
                        const double aip = a[i * n + p];
                        const double aiq = a[i * n + q];
                        a[i * n + p] = aip - s * (aiq + tau * aip);
                        a[i * n + q] = aiq + s * (aip - tau * aiq);
                        a[p * n + i] = a[i * n + p];
                        a[q * n + i] = a[i * n + q];
                    }
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v[i * n + p];
                    const double viq = v[i * n + q];
                    v[i * n + p] = vip - s * (viq + tau * vip);
                    v[i * n + q] = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return a[i * n + i] > a[j * n + j];
    });

    EigenResult r;
    r.values.resize(n);
    r.vectors.assign(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        r.values[j] = a[src * n + src];
        double sign = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = v[i * n + src];
            if (sign == 0.0 && std::fabs(x) > 1e-12) sign = x > 0.0 ? 1.0 : -1.0;
        }
        if (sign == 0.0) sign = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            r.vectors[i * n + j] = sign * v[i * n + src];
        }
    }
    return r;
}

std::vector<double> singular_values(const std::vector<double>& a,
                                    std::size_t m, std::size_t n, int max_sweeps) {
    if (a.size() != m * n) throw std::invalid_argument("singular_values: bad size");
    // Work on columns; transpose when m < n so columns are the short axis.
    std::size_t rows = m, cols = n;
    std::vector<double> w;
    if (m >= n) {
        w = a;
    } else {
        rows = n;
        cols = m;
        w.resize(m * n);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                w[j * cols + i] = a[i * n + j];
            }
        }
    }

    const double eps = 1e-15;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i < cols; ++i) {
            for (std::size_t j = i + 1; j < cols; ++j) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t r = 0; r < rows; ++r) {
                    const double x = w[r * cols + i];
                    const double y = w[r * cols + j];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if (std::fabs(gamma) <= eps * std::sqrt(alpha * beta) || gamma == 0.0) {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t r = 0; r < rows; ++r) {
                    const double x = w[r * cols + i];
                    const double y = w[r * cols + j];
                    w[r * cols + i] = c * x - s * y;
                    w[r * cols + j] = s * x + c * y;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sv(cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            s += w[r * cols + j] * w[r * cols + j];
        }
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b,
                                 std::size_t n) {
    if (a.size() != n * n || b.size() != n) {
        throw std::invalid_argument("solve_linear: bad size");
    }
    double amax = 0.0;
    for (double x : a) amax = std::max(amax, std::fabs(x));
    const double tiny = 1e-13 * (amax > 0.0 ? amax : 1.0);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::fabs(a[i * n + k]) > std::fabs(a[piv * n + k])) piv = i;
        }
        if (std::fabs(a[piv * n + k]) <= tiny) {
            throw std::runtime_error("solve_linear: numerically singular system");
        }
        if (piv != k) {
            for (std::size_t j = k; j < n; ++j) std::swap(a[piv * n + j], a[k * n + j]);
            std::swap(b[piv], b[k]);
        }
        const double d = a[k * n + k];
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i * n + k] / d;
            if (f == 0.0) continue;
            a[i * n + k] = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t ii = n; ii > 0; --ii) {
        const std::size_t i = ii - 1;
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
        x[i] = s / a[i * n + i];
    }
    return x;
}

} // namespace risklab
