#include "risklab/poly_activation.hpp"

#include "risklab/errors.hpp"
#include "risklab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace risklab {

double PolyActivation::eval(double x) const {
    double y = 0.0;
    for (std::size_t i = coeffs.size(); i > 0; --i) {
        y = y * x + coeffs[i - 1];
    }
    return y;
}

double PolyActivation::deriv(double x) const {
    double y = 0.0;
    for (std::size_t i = coeffs.size(); i > 1; --i) {
        y = y * x + coeffs[i - 1] * static_cast<double>(i - 1);
    }
    return y;
}

namespace {

double relu(double x) { return x > 0.0 ? x : 0.0; }

double eval_poly(const std::vector<double>& c, double x) {
    double y = 0.0;
    for (std::size_t i = c.size(); i > 0; --i) y = y * x + c[i - 1];
    return y;
}

// Equioscillation solve: p(x_i) + (-1)^i e = f(x_i) for the n+1
// coefficients and the levelled error e.
void solve_reference(const std::vector<double>& ref, int degree,
                     std::vector<double>& coeffs, double& e) {
    const std::size_t m = ref.size(); // degree + 2
    std::vector<double> a(m * m, 0.0);
    std::vector<double> b(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double xp = 1.0;
        for (int k = 0; k <= degree; ++k) {
            a[i * m + static_cast<std::size_t>(k)] = xp;
            xp *= ref[i];
        }
        a[i * m + m - 1] = (i % 2 == 0) ? 1.0 : -1.0;
        b[i] = relu(ref[i]);
    }
    std::vector<double> sol = solve_linear(std::move(a), std::move(b), m);
    coeffs.assign(sol.begin(), sol.end() - 1);
    e = sol.back();
}

} // namespace

PolyActivation fit_relu_minimax(int degree, double halfwidth) {
    if (degree < 1 || degree > 10) {
        throw UsageError("polynomial activation degree must be in [1,10]");
    }
    if (!(halfwidth > 0.0) || !std::isfinite(halfwidth)) {
        throw UsageError("polynomial activation interval halfwidth must be positive");
    }

    const std::size_t m = static_cast<std::size_t>(degree) + 2;
    const std::size_t grid_n = 16385;
    std::vector<double> grid(grid_n);
    for (std::size_t i = 0; i < grid_n; ++i) {
        grid[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grid_n - 1);
    }

    // Chebyshev extrema as the initial reference.
    std::vector<double> ref(m);
    for (std::size_t i = 0; i < m; ++i) {
        ref[i] = -std::cos(M_PI * static_cast<double>(i) / static_cast<double>(m - 1));
    }

    std::vector<double> coeffs;
    double e = 0.0;
    double max_err = 0.0;

    for (int iter = 0; iter < 100; ++iter) {
        solve_reference(ref, degree, coeffs, e);

        // Candidate extrema: per maximal run of constant error sign, the
        // point of largest |error|.
        std::vector<double> cand_x;
        std::vector<double> cand_e;
        int run_sign = 0;
        double best = 0.0;
        double best_x = grid[0];
        std::size_t arg_global = 0;
        max_err = 0.0;
        for (std::size_t i = 0; i < grid_n; ++i) {
            const double err = eval_poly(coeffs, grid[i]) - relu(grid[i]);
            const int s = err > 0.0 ? 1 : (err < 0.0 ? -1 : run_sign);
            if (s != run_sign && run_sign != 0) {
                cand_x.push_back(best_x);
                cand_e.push_back(best);
                best = 0.0;
            }
            if (run_sign == 0) run_sign = s;
            if (s != 0) run_sign = s;
            if (std::fabs(err) >= best) {
                best = std::fabs(err);
                best_x = grid[i];
            }
            if (std::fabs(err) > max_err) {
                max_err = std::fabs(err);
                arg_global = cand_x.size(); // run index of the global max
            }
        }
        cand_x.push_back(best_x);
        cand_e.push_back(best);

        if (cand_x.size() < m) break; // degenerate; keep current solution

        // Keep m consecutive candidates. Among windows containing the
        // global maximum, take the one whose smallest |error| is largest.
        std::size_t lo = 0;
        if (cand_x.size() > m) {
            double best_min = -1.0;
            const std::size_t first = arg_global >= m - 1 ? arg_global - (m - 1) : 0;
            const std::size_t last = std::min(arg_global, cand_x.size() - m);
            for (std::size_t s = first; s <= last; ++s) {
                double wmin = cand_e[s];
                for (std::size_t j = 1; j < m; ++j) wmin = std::min(wmin, cand_e[s + j]);
                if (wmin > best_min) {
                    best_min = wmin;
                    lo = s;
                }
            }
        }
        std::vector<double> next(cand_x.begin() + static_cast<std::ptrdiff_t>(lo),
                                 cand_x.begin() + static_cast<std::ptrdiff_t>(lo + m));

        const double levelled = std::fabs(e);
        if (max_err > 0.0 && (max_err - levelled) / max_err < 1e-13) {
            ref = next;
            break;
        }
        ref = next;
    }

    PolyActivation act;
    act.halfwidth = halfwidth;
    act.sup_error = max_err * halfwidth;
    act.coeffs.resize(coeffs.size());
    double scale = halfwidth; // B^{1-k}
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        act.coeffs[k] = coeffs[k] * scale;
        scale /= halfwidth;
    }
    return act;
}

} // namespace risklab
