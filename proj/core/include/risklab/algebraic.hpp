#pragma once

#include "risklab/polynomial.hpp"
#include "risklab/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace risklab {

// System of polynomial equations in a shared variable set.
struct PolySystem {
    std::vector<Poly> equations;
    std::size_t nvars = 0;
    std::string provenance = "adhoc"; // "zero-error" | "critical-point" | "adhoc"
    int activation_degree = 0;        // l when built from a net, else 0
    int depth = 0;                    // activation layers when built from a net

    std::vector<int> degrees() const;
    // residual vector r_i = equations[i](w)
    std::vector<double> residual(const std::vector<double>& w) const;
    double residual_linf(const std::vector<double>& w) const;
    double residual_sumsq(const std::vector<double>& w) const;
};

// Degree/bound/dimension bookkeeping for an l, d, N, K family where every
// equation has total degree l^d.
struct SystemSummary {
    int l = 0, d = 0;
    long long n = 0, k = 0;
    long long per_equation_degree = 0; // l^d
    double bezout_log2 = 0.0;          // N * d * log2(l)
    double shub_smale_log2 = 0.0;      // half of bezout_log2
    long long solution_dim = 0;        // K - N, reported as-is
    bool exact_available = false;      // true when bezout_log2 <= 64
    std::string bezout_exact;          // decimal, when available
};

SystemSummary summarize(int l, int d, long long n, long long k);

// Exact product of the system's total degrees.
struct BezoutBound {
    double log2 = 0.0;
    bool exact_available = false;
    std::string exact_decimal;
};
BezoutBound bezout_bound(const PolySystem& sys);

// Scalar compositional net on shared weight variables. Layer 0 units read
// the data vector; a unit forms an affine combination of previous-layer
// units (taps) plus a bias, each entry either a weight variable or a fixed
// constant, then optionally applies the activation polynomial.
struct TinyEntry {
    int var = -1;        // >= 0: weight variable index; -1: fixed
    double coeff = 1.0;  // multiplies the variable, or stands alone
};

struct TinyUnit {
    std::vector<std::pair<std::size_t, TinyEntry>> taps; // (prev unit, entry)
    TinyEntry bias{-1, 0.0};
    bool activate = true;
};

struct TinyPolyNet {
    std::size_t n_inputs = 0;
    std::size_t n_weights = 0;               // K
    std::vector<std::vector<TinyUnit>> layers; // last layer: single unit
};

// Balanced binary-tree compositional net of the given depth: 2^depth
// inputs, every leaf unit shares the weight triple (w0, w1, w2) as
// x_left*w0 + x_right*w1 + w2, interior nodes sum their two children with
// fixed unit coefficients. K = 3 for every depth.
TinyPolyNet make_tree_net(std::size_t depth);

// f(w; x_i) - y_i = 0 for each data row, with the given activation
// polynomial (power-basis coefficients a0..al). Equations come out in data
// order; provenance "zero-error".
PolySystem build_zero_system(const TinyPolyNet& net, const std::vector<double>& activation,
                             const std::vector<std::vector<double>>& x,
                             const std::vector<double>& y);

// Gradient equations of the square loss sum_i r_i^2: one equation
// 2 * sum_i r_i * dr_i/dw_k per weight; provenance "critical-point".
PolySystem build_critical_system(const PolySystem& zero_system);

struct DegeneracyReport {
    std::size_t rank = 0;
    std::size_t nullity = 0;
    bool degenerate = false;
    std::vector<double> singular_values;
};

// Numeric Jacobian by central differences (h = 1e-6), rank from singular
// values above 1e-8 * sigma_max. The point must satisfy the system to
// 1e-8 or the precondition fails.
DegeneracyReport degeneracy_check(const PolySystem& sys, const std::vector<double>& zero);

struct ZeroSearchOptions {
    double box_halfwidth = 2.0;  // search box [-R, R]^K
    std::size_t grid_per_axis = 9;
    int max_iterations = 200;
    double accept_residual = 1e-10; // L-inf acceptance for a polished zero
    double distinct_tol = 1e-6;     // L-inf dedup radius
};

struct ZeroCensus {
    std::vector<std::vector<double>> zeros; // distinct, in discovery order
    std::vector<DegeneracyReport> degeneracy; // aligned with zeros
    std::size_t seeds_tried = 0;
    std::size_t seeds_converged = 0;
    std::size_t seeds_dropped = 0; // non-converged, dropped silently
    bool continuum_detected = false; // >= 10 degenerate distinct zeros
};

// Grid seeding (uniform, endpoints included) + damped Newton polishing.
// K <= 4. Zeros are polished well past the acceptance threshold so that
// downstream residual checks on derived systems stay tight.
ZeroCensus find_real_zeros(const PolySystem& sys, const ZeroSearchOptions& opt);

struct ConsistencyReport {
    bool consistent = false;
    double best_residual = 0.0; // smallest sum-of-squares found
    std::vector<double> argmin;
    std::string note;
};

// Heuristic Nullstellensatz probe: multistart minimization of the
// sum-of-squares residual. residual <= 1e-10 reports consistent; a single
// nonconstant equation is consistent outright (it always has complex
// zeros). Never a certificate of inconsistency.
ConsistencyReport consistency_probe(const PolySystem& sys, std::uint64_t seed,
                                    std::size_t starts = 64);

// Random dense-ish polynomial in nvars variables with the given total
// degree: every monomial of that degree or lower gets a coefficient drawn
// uniformly from [-2, -0.25] ∪ [0.25, 2], the top-degree block guaranteed
// nonempty so the total degree is exact.
Poly random_poly(std::size_t nvars, int degree, Rng& rng);

// N random equations in K variables. When planted is non-null, each
// equation is shifted so that *planted is a common zero.
PolySystem random_system(std::size_t k, std::size_t n, int degree, Rng& rng,
                         const std::vector<double>* planted = nullptr);

} // namespace risklab
