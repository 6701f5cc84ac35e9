#pragma once

#include <vector>

namespace risklab {

// Fixed polynomial activation a0 + a1 x + ... + al x^l. The coefficients
// are part of the architecture, not of the trainable state.
struct PolyActivation {
    std::vector<double> coeffs;
    double halfwidth = 1.0; // fitted on [-halfwidth, halfwidth]
    double sup_error = 0.0;

    int degree() const { return coeffs.empty() ? -1 : static_cast<int>(coeffs.size()) - 1; }
    double eval(double x) const;
    double deriv(double x) const;
};

// Best uniform approximation of max(0,x) on [-halfwidth, halfwidth] by a
// polynomial of the given degree, via Remez exchange. The fit runs in
// normalized coordinates on [-1,1] and is rescaled, so the error scales
// linearly with the halfwidth. Degree must be in [1, 10].
PolyActivation fit_relu_minimax(int degree, double halfwidth);

} // namespace risklab
