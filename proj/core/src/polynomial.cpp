#include "risklab/polynomial.hpp"

#include "risklab/errors.hpp"

#include <cmath>
#include <cstdio>

namespace risklab {

Poly::Poly(std::size_t nvars) : nvars_(nvars) {}

Poly Poly::constant(std::size_t nvars, double c) {
    Poly p(nvars);
    if (c != 0.0) p.terms_[std::vector<int>(nvars, 0)] = c;
    return p;
}

Poly Poly::variable(std::size_t nvars, std::size_t index) {
    if (index >= nvars) throw UsageError("variable index out of range");
    Poly p(nvars);
    std::vector<int> e(nvars, 0);
    e[index] = 1;
    p.terms_[e] = 1.0;
    return p;
}

int Poly::total_degree() const {
    int deg = -1;
    for (const auto& [e, c] : terms_) {
        int d = 0;
        for (int x : e) d += x;
        if (d > deg) deg = d;
    }
    return deg;
}

void Poly::add_term(const std::vector<int>& e, double c) {
    auto it = terms_.find(e);
    if (it == terms_.end()) {
        if (c != 0.0) terms_[e] = c;
    } else {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

Poly Poly::operator+(const Poly& o) const {
    if (nvars_ != o.nvars_) throw UsageError("polynomial variable count mismatch");
    Poly r = *this;
    for (const auto& [e, c] : o.terms_) r.add_term(e, c);
    return r;
}

Poly Poly::operator-(const Poly& o) const {
    if (nvars_ != o.nvars_) throw UsageError("polynomial variable count mismatch");
    Poly r = *this;
    for (const auto& [e, c] : o.terms_) r.add_term(e, -c);
    return r;
}

Poly Poly::operator*(const Poly& o) const {
    if (nvars_ != o.nvars_) throw UsageError("polynomial variable count mismatch");
    Poly r(nvars_);
    std::vector<int> e(nvars_);
    for (const auto& [ea, ca] : terms_) {
        for (const auto& [eb, cb] : o.terms_) {
            for (std::size_t i = 0; i < nvars_; ++i) e[i] = ea[i] + eb[i];
            r.add_term(e, ca * cb);
        }
    }
    return r;
}

Poly Poly::operator*(double s) const {
    Poly r(nvars_);
    if (s == 0.0) return r;
    for (const auto& [e, c] : terms_) r.terms_[e] = c * s;
    return r;
}

Poly Poly::operator+(double c) const {
    Poly r = *this;
    r.add_term(std::vector<int>(nvars_, 0), c);
    return r;
}

Poly Poly::pow(unsigned k) const {
    Poly r = Poly::constant(nvars_, 1.0);
    Poly base = *this;
    while (k > 0) {
        if (k & 1u) r = r * base;
        base = base * base;
        k >>= 1u;
    }
    return r;
}

Poly Poly::derivative(std::size_t var) const {
    if (var >= nvars_) throw UsageError("variable index out of range");
    Poly r(nvars_);
    for (const auto& [e, c] : terms_) {
        if (e[var] == 0) continue;
        std::vector<int> d = e;
        const double f = c * static_cast<double>(d[var]);
        d[var] -= 1;
        r.add_term(d, f);
    }
    return r;
}

double Poly::eval(const std::vector<double>& x) const {
    if (x.size() != nvars_) throw UsageError("evaluation point has wrong dimension");
    double total = 0.0;
    for (const auto& [e, c] : terms_) {
        double t = c;
        for (std::size_t i = 0; i < nvars_; ++i) {
            for (int k = 0; k < e[i]; ++k) t *= x[i];
        }
        total += t;
    }
    return total;
}

void Poly::prune(double tol) {
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (std::fabs(it->second) <= tol) {
            it = terms_.erase(it);
        } else {
            ++it;
        }
    }
}

std::string Poly::to_string() const {
    if (terms_.empty()) return "0";
    std::string s;
    for (const auto& [e, c] : terms_) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.10g", std::fabs(c));
        if (s.empty()) {
            if (c < 0.0) s += "-";
        } else {
            s += c < 0.0 ? " - " : " + ";
        }
        std::string mono;
        for (std::size_t i = 0; i < nvars_; ++i) {
            if (e[i] == 0) continue;
            if (!mono.empty()) mono += "*";
            mono += "w" + std::to_string(i);
            if (e[i] > 1) mono += "^" + std::to_string(e[i]);
        }
        if (mono.empty()) {
            s += buf;
        } else if (std::fabs(c) == 1.0) {
            s += mono;
        } else {
            s += std::string(buf) + "*" + mono;
        }
    }
    return s;
}

Poly compose_univariate(const std::vector<double>& coeffs, const Poly& inner) {
    Poly r = Poly::constant(inner.nvars(), coeffs.empty() ? 0.0 : coeffs[0]);
    Poly p = Poly::constant(inner.nvars(), 1.0);
    for (std::size_t k = 1; k < coeffs.size(); ++k) {
        p = p * inner;
        if (coeffs[k] != 0.0) r = r + p * coeffs[k];
    }
    return r;
}

} // namespace risklab
