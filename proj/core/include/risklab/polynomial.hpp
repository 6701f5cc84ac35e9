#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace risklab {

// Sparse multivariate polynomial over double coefficients. Terms live in a
// std::map keyed by exponent vector, so iteration order (and hence every
// derived quantity) is deterministic. Sized for small systems: a handful
// of variables, total degree up to a few dozen.
class Poly {
public:
    Poly() = default;
    explicit Poly(std::size_t nvars);
    static Poly constant(std::size_t nvars, double c);
    static Poly variable(std::size_t nvars, std::size_t index);

    std::size_t nvars() const { return nvars_; }
    const std::map<std::vector<int>, double>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }
    int total_degree() const; // -1 for the zero polynomial

    Poly operator+(const Poly& o) const;
    Poly operator-(const Poly& o) const;
    Poly operator*(const Poly& o) const;
    Poly operator*(double s) const;
    Poly operator+(double c) const;
    Poly operator-(double c) const { return *this + (-c); }
    Poly pow(unsigned k) const;

    Poly derivative(std::size_t var) const;
    double eval(const std::vector<double>& x) const;

    // Drop terms with |coefficient| <= tol.
    void prune(double tol = 0.0);

    std::string to_string() const; // e.g. "2.5*w0^2*w1 - w2 + 1"

private:
    std::size_t nvars_ = 0;
    std::map<std::vector<int>, double> terms_; // exponents -> coefficient

    void add_term(const std::vector<int>& e, double c);
    friend Poly compose_univariate(const std::vector<double>& coeffs, const Poly& inner);
};

// p(inner) for a univariate p given by its power-basis coefficients
// (a0..al). Powers of inner are built once and reused.
Poly compose_univariate(const std::vector<double>& coeffs, const Poly& inner);

} // namespace risklab
