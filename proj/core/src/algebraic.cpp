#include "risklab/algebraic.hpp"

#include "risklab/errors.hpp"
#include "risklab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace risklab {

std::vector<int> PolySystem::degrees() const {
    std::vector<int> d;
    d.reserve(equations.size());
    for (const auto& e : equations) d.push_back(e.total_degree());
    return d;
}

std::vector<double> PolySystem::residual(const std::vector<double>& w) const {
    std::vector<double> r(equations.size());
    for (std::size_t i = 0; i < equations.size(); ++i) r[i] = equations[i].eval(w);
    return r;
}

double PolySystem::residual_linf(const std::vector<double>& w) const {
    double m = 0.0;
    for (const auto& e : equations) m = std::max(m, std::fabs(e.eval(w)));
    return m;
}

double PolySystem::residual_sumsq(const std::vector<double>& w) const {
    double s = 0.0;
    for (const auto& e : equations) {
        const double v = e.eval(w);
        s += v * v;
    }
    return s;
}

namespace {

std::string u128_to_string(unsigned __int128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v > 0) {
        s += static_cast<char>('0' + static_cast<int>(v % 10));
        v /= 10;
    }
    std::reverse(s.begin(), s.end());
    return s;
}

} // namespace

SystemSummary summarize(int l, int d, long long n, long long k) {
    if (l < 1 || d < 1 || n < 1 || k < 1) {
        throw UsageError("summarize requires l, d, n, k all >= 1");
    }
    SystemSummary s;
    s.l = l;
    s.d = d;
    s.n = n;
    s.k = k;

    const double log2l = std::log2(static_cast<double>(l));
    const double deg_log2 = static_cast<double>(d) * log2l;
    if (deg_log2 > 62.0) throw UsageError("per-equation degree l^d overflows");
    s.per_equation_degree = 1;
    for (int i = 0; i < d; ++i) s.per_equation_degree *= l;

    s.bezout_log2 = static_cast<double>(n) * static_cast<double>(d) * log2l;
    s.shub_smale_log2 = s.bezout_log2 / 2.0;
    s.solution_dim = k - n;

    if (s.bezout_log2 <= 64.0) {
        unsigned __int128 v = 1;
        const long long e = n * static_cast<long long>(d);
        bool ok = true;
        for (long long i = 0; i < e; ++i) {
            const unsigned __int128 next = v * static_cast<unsigned>(l);
            if (l > 1 && next / static_cast<unsigned>(l) != v) {
                ok = false;
                break;
            }
            v = next;
        }
        if (ok) {
            s.exact_available = true;
            s.bezout_exact = u128_to_string(v);
        }
    }
    return s;
}

BezoutBound bezout_bound(const PolySystem& sys) {
    BezoutBound b;
    unsigned __int128 prod = 1;
    bool exact = true;
    for (const auto& e : sys.equations) {
        const int deg = e.total_degree();
        if (deg < 1) {
            throw UsageError("Bezout bound requires every equation nonconstant");
        }
        b.log2 += std::log2(static_cast<double>(deg));
        if (exact) {
            const unsigned __int128 next = prod * static_cast<unsigned>(deg);
            if (deg > 1 && next / static_cast<unsigned>(deg) != prod) {
                exact = false;
            } else {
                prod = next;
            }
        }
    }
    b.exact_available = exact;
    if (exact) b.exact_decimal = u128_to_string(prod);
    return b;
}

TinyPolyNet make_tree_net(std::size_t depth) {
    if (depth < 1) throw UsageError("tree net depth must be >= 1");
    if (depth > 6) throw UsageError("tree net depth capped at 6");
    TinyPolyNet net;
    net.n_inputs = std::size_t{1} << depth;
    net.n_weights = 3;
    std::size_t units = net.n_inputs / 2;
    for (std::size_t level = 0; level < depth; ++level, units /= 2) {
        std::vector<TinyUnit> layer(units);
        for (std::size_t j = 0; j < units; ++j) {
            TinyUnit& u = layer[j];
            if (level == 0) {
                u.taps.push_back({2 * j, TinyEntry{0, 1.0}});
                u.taps.push_back({2 * j + 1, TinyEntry{1, 1.0}});
                u.bias = TinyEntry{2, 1.0};
            } else {
                u.taps.push_back({2 * j, TinyEntry{-1, 1.0}});
                u.taps.push_back({2 * j + 1, TinyEntry{-1, 1.0}});
                u.bias = TinyEntry{-1, 0.0};
            }
            u.activate = true;
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace {

Poly entry_poly(const TinyEntry& e, std::size_t nvars) {
    if (e.var >= 0) {
        if (static_cast<std::size_t>(e.var) >= nvars) {
            throw UsageError("tiny net references weight beyond K");
        }
        return Poly::variable(nvars, static_cast<std::size_t>(e.var)) * e.coeff;
    }
    return Poly::constant(nvars, e.coeff);
}

} // namespace

PolySystem build_zero_system(const TinyPolyNet& net, const std::vector<double>& activation,
                             const std::vector<std::vector<double>>& x,
                             const std::vector<double>& y) {
    if (activation.size() < 2 || activation.back() == 0.0) {
        throw UsageError("activation must have degree >= 1 with nonzero leading coefficient");
    }
    if (net.layers.empty() || net.layers.back().size() != 1) {
        throw UsageError("tiny net must end in a single output unit");
    }
    if (x.size() != y.size() || x.empty()) {
        throw UsageError("data rows and targets must be nonempty and equal in count");
    }

    PolySystem sys;
    sys.nvars = net.n_weights;
    sys.provenance = "zero-error";
    sys.activation_degree = static_cast<int>(activation.size()) - 1;
    sys.depth = 0;
    for (const auto& layer : net.layers) {
        bool all = true;
        for (const auto& u : layer) all = all && u.activate;
        if (all) ++sys.depth;
    }

    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].size() != net.n_inputs) {
            throw UsageError("data row " + std::to_string(i) + " has wrong dimension");
        }
        std::vector<Poly> prev;
        prev.reserve(net.n_inputs);
        for (double v : x[i]) prev.push_back(Poly::constant(net.n_weights, v));
        for (const auto& layer : net.layers) {
            std::vector<Poly> cur;
            cur.reserve(layer.size());
            for (const auto& unit : layer) {
                Poly s = entry_poly(unit.bias, net.n_weights);
                for (const auto& [src, entry] : unit.taps) {
                    if (src >= prev.size()) {
                        throw UsageError("tiny net tap outside previous layer");
                    }
                    s = s + entry_poly(entry, net.n_weights) * prev[src];
                }
                cur.push_back(unit.activate ? compose_univariate(activation, s)
                                            : std::move(s));
            }
            prev = std::move(cur);
        }
        sys.equations.push_back(prev[0] + (-y[i]));
    }
    return sys;
}

PolySystem build_critical_system(const PolySystem& zero_system) {
    if (zero_system.equations.empty()) throw UsageError("empty system");
    PolySystem sys;
    sys.nvars = zero_system.nvars;
    sys.provenance = "critical-point";
    sys.activation_degree = zero_system.activation_degree;
    sys.depth = zero_system.depth;
    for (std::size_t k = 0; k < sys.nvars; ++k) {
        Poly g(sys.nvars);
        for (const auto& r : zero_system.equations) {
            g = g + r * r.derivative(k) * 2.0;
        }
        sys.equations.push_back(std::move(g));
    }
    return sys;
}

DegeneracyReport degeneracy_check(const PolySystem& sys, const std::vector<double>& zero) {
    if (zero.size() != sys.nvars) throw UsageError("point dimension mismatch");
    const double resid = sys.residual_linf(zero);
    if (resid > 1e-8) {
        throw UsageError("degeneracy_check: point is not on the system (residual " +
                         std::to_string(resid) + ")");
    }
    const std::size_t n = sys.equations.size();
    const std::size_t k = sys.nvars;
    const double h = 1e-6;
    std::vector<double> jac(n * k, 0.0);
    std::vector<double> p = zero;
    for (std::size_t j = 0; j < k; ++j) {
        const double save = p[j];
        p[j] = save + h;
        const std::vector<double> hi = sys.residual(p);
        p[j] = save - h;
        const std::vector<double> lo = sys.residual(p);
        p[j] = save;
        for (std::size_t i = 0; i < n; ++i) {
            jac[i * k + j] = (hi[i] - lo[i]) / (2.0 * h);
        }
    }

    DegeneracyReport rep;
    rep.singular_values = singular_values(jac, n, k);
    const double smax = rep.singular_values.empty() ? 0.0 : rep.singular_values[0];
    // Absolute floor: the h = 1e-6 stencil cannot certify derivatives below
    // its own noise, and a fully rank-deficient Jacobian is all noise, so a
    // relative cutoff alone would keep one spurious singular value.
    const double thresh = std::max(1e-8 * smax, 1e-6);
    std::size_t rank = 0;
    for (double s : rep.singular_values) {
        if (s > thresh) ++rank;
    }
    rep.rank = rank;
    rep.nullity = k - std::min(rank, k);
    rep.degenerate = rep.nullity >= 1;
    return rep;
}

namespace {

struct LmOutcome {
    std::vector<double> x;
    double phi = 0.0;
    double linf = 0.0;
};

// Damped (Levenberg) Newton on the least-squares residual with the exact
// polynomial Jacobian. Runs past the caller's acceptance threshold, down
// to machine-level residuals when the zero is regular enough, so residual
// checks on derived systems stay tight.
LmOutcome lm_polish(const PolySystem& sys, const std::vector<Poly>& jac_polys,
                    std::vector<double> x, int max_iter) {
    const std::size_t n = sys.equations.size();
    const std::size_t k = sys.nvars;
    double lambda = 1e-3;

    std::vector<double> r = sys.residual(x);
    auto phi_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double a : v) s += a * a;
        return s;
    };
    double phi = phi_of(r);
    LmOutcome out;

    for (int it = 0; it < max_iter; ++it) {
        double linf = 0.0;
        for (double v : r) linf = std::max(linf, std::fabs(v));
        if (linf <= 1e-14) break;

        std::vector<double> jac(n * k);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                jac[i * k + j] = jac_polys[i * k + j].eval(x);
            }
        }
        std::vector<double> a(k * k, 0.0), g(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
                g[p] += jac[i * k + p] * r[i];
                for (std::size_t q = p; q < k; ++q) {
                    a[p * k + q] += jac[i * k + p] * jac[i * k + q];
                }
            }
        }
        for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t q = 0; q < p; ++q) a[p * k + q] = a[q * k + p];
        }

        // No gradient-based early exit: at a degenerate zero the gradient
        // decays a full order faster than the residual, so a stationarity
        // test would stop while the residual is still above acceptance.
        // Termination is by residual or by the step search failing below.
        bool stepped = false;
        while (lambda <= 1e12) {
            std::vector<double> m = a;
            for (std::size_t p = 0; p < k; ++p) m[p * k + p] += lambda;
            std::vector<double> rhs(k);
            for (std::size_t p = 0; p < k; ++p) rhs[p] = -g[p];
            std::vector<double> dx;
            try {
                dx = solve_linear(std::move(m), std::move(rhs), k);
            } catch (const std::runtime_error&) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> xn = x;
            for (std::size_t p = 0; p < k; ++p) xn[p] += dx[p];
            const std::vector<double> rn = sys.residual(xn);
            const double phin = phi_of(rn);
            if (phin < phi) {
                x = std::move(xn);
                r = rn;
                phi = phin;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) break;
    }

    out.x = std::move(x);
    out.phi = phi;
    out.linf = 0.0;
    for (double v : r) out.linf = std::max(out.linf, std::fabs(v));
    return out;
}

std::vector<Poly> jacobian_polys(const PolySystem& sys) {
    std::vector<Poly> jac;
    jac.reserve(sys.equations.size() * sys.nvars);
    for (const auto& e : sys.equations) {
        for (std::size_t j = 0; j < sys.nvars; ++j) {
            jac.push_back(e.derivative(j));
        }
    }
    return jac;
}

} // namespace

ZeroCensus find_real_zeros(const PolySystem& sys, const ZeroSearchOptions& opt) {
    if (sys.nvars == 0 || sys.nvars > 4) {
        throw UsageError("grid search supports 1 <= K <= 4 variables");
    }
    if (opt.grid_per_axis == 0) throw UsageError("grid density must be >= 1");
    double seeds_d = 1.0;
    for (std::size_t i = 0; i < sys.nvars; ++i) {
        seeds_d *= static_cast<double>(opt.grid_per_axis);
    }
    if (seeds_d > 200000.0) throw UsageError("grid too dense: over 200000 seeds");

    const std::vector<Poly> jac = jacobian_polys(sys);
    const std::size_t k = sys.nvars;
    const double r = opt.box_halfwidth;

    ZeroCensus census;
    std::vector<std::size_t> idx(k, 0);
    const std::size_t g = opt.grid_per_axis;
    const std::size_t total = static_cast<std::size_t>(seeds_d);

    for (std::size_t s = 0; s < total; ++s) {
        std::size_t rem = s;
        std::vector<double> x(k);
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t pos = rem % g;
            rem /= g;
            x[j] = g == 1 ? 0.0
                          : -r + 2.0 * r * static_cast<double>(pos) /
                                static_cast<double>(g - 1);
        }
        ++census.seeds_tried;

        LmOutcome lm = lm_polish(sys, jac, std::move(x), opt.max_iterations);
        if (lm.linf > opt.accept_residual) {
            ++census.seeds_dropped;
            continue;
        }
        bool in_box = true;
        for (double v : lm.x) {
            if (std::fabs(v) > r + 1e-9) in_box = false;
        }
        if (!in_box) {
            ++census.seeds_dropped;
            continue;
        }
        ++census.seeds_converged;

        bool fresh = true;
        for (const auto& z : census.zeros) {
            double d = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                d = std::max(d, std::fabs(z[j] - lm.x[j]));
            }
            if (d <= opt.distinct_tol) {
                fresh = false;
                break;
            }
        }
        if (fresh) {
            census.degeneracy.push_back(degeneracy_check(sys, lm.x));
            census.zeros.push_back(std::move(lm.x));
        }
    }

    std::size_t degenerate = 0;
    for (const auto& d : census.degeneracy) {
        if (d.degenerate) ++degenerate;
    }
    census.continuum_detected = degenerate >= 10;
    return census;
}

ConsistencyReport consistency_probe(const PolySystem& sys, std::uint64_t seed,
                                    std::size_t starts) {
    if (sys.equations.empty()) throw UsageError("empty system");
    ConsistencyReport rep;

    if (sys.equations.size() == 1) {
        const int deg = sys.equations[0].total_degree();
        if (deg >= 1) {
            rep.consistent = true;
            rep.note = "single nonconstant equation: solvable over the complex numbers";
        } else {
            const double c = sys.equations[0].eval(std::vector<double>(sys.nvars, 0.0));
            rep.consistent = c == 0.0;
            rep.note = rep.consistent ? "zero equation" : "nonzero constant equation";
            rep.best_residual = c * c;
            rep.argmin.assign(sys.nvars, 0.0);
            return rep;
        }
    }

    const std::vector<Poly> jac = jacobian_polys(sys);
    Rng rng(seed);
    double best = -1.0;
    std::vector<double> best_x;
    for (std::size_t s = 0; s < std::max<std::size_t>(starts, 1); ++s) {
        std::vector<double> x(sys.nvars);
        for (double& v : x) v = rng.uniform(-3.0, 3.0);
        LmOutcome lm = lm_polish(sys, jac, std::move(x), 300);
        if (best < 0.0 || lm.phi < best) {
            best = lm.phi;
            best_x = lm.x;
        }
        if (best <= 1e-10) break;
    }
    rep.best_residual = best;
    rep.argmin = best_x;
    if (sys.equations.size() > 1) {
        rep.consistent = best <= 1e-10;
        rep.note = rep.consistent ? "zero found" : "no zero found; not a certificate";
    }
    return rep;
}

namespace {

void enumerate_exponents(std::size_t nvars, int degree_left, std::vector<int>& cur,
                         std::vector<std::vector<int>>& out) {
    if (cur.size() == nvars - 1) {
        for (int last = 0; last <= degree_left; ++last) {
            std::vector<int> e = cur;
            e.push_back(last);
            out.push_back(std::move(e));
        }
        return;
    }
    for (int v = 0; v <= degree_left; ++v) {
        cur.push_back(v);
        enumerate_exponents(nvars, degree_left - v, cur, out);
        cur.pop_back();
    }
}

} // namespace

Poly random_poly(std::size_t nvars, int degree, Rng& rng) {
    if (nvars == 0 || degree < 1) throw UsageError("random_poly needs nvars >= 1, degree >= 1");
    std::vector<std::vector<int>> exps;
    std::vector<int> cur;
    enumerate_exponents(nvars, degree, cur, exps);
    Poly p(nvars);
    for (const auto& e : exps) {
        const double mag = rng.uniform(0.25, 2.0);
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        Poly term = Poly::constant(nvars, sign * mag);
        for (std::size_t v = 0; v < nvars; ++v) {
            if (e[v] > 0) term = term * Poly::variable(nvars, v).pow(static_cast<unsigned>(e[v]));
        }
        p = p + term;
    }
    return p;
}

PolySystem random_system(std::size_t k, std::size_t n, int degree, Rng& rng,
                         const std::vector<double>* planted) {
    if (planted && planted->size() != k) {
        throw UsageError("planted zero has wrong dimension");
    }
    PolySystem sys;
    sys.nvars = k;
    sys.provenance = "adhoc";
    for (std::size_t i = 0; i < n; ++i) {
        Poly p = random_poly(k, degree, rng);
        if (planted) p = p + (-p.eval(*planted));
        sys.equations.push_back(std::move(p));
    }
    return sys;
}

} // namespace risklab
