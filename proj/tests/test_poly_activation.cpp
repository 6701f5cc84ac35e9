#include "doctest.h"

#include "risklab/errors.hpp"
#include "risklab/poly_activation.hpp"

#include <algorithm>
#include <cmath>

using namespace risklab;

namespace {
double relu(double x) { return x > 0.0 ? x : 0.0; }
} // namespace

TEST_CASE("degree-1 fit on the unit interval") {
    const PolyActivation p = fit_relu_minimax(1, 1.0);
    REQUIRE(p.coeffs.size() == 2);
    CHECK(p.coeffs[0] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(p.coeffs[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(p.sup_error == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("degree-2 fit on the unit interval") {
    const PolyActivation p = fit_relu_minimax(2, 1.0);
    REQUIRE(p.coeffs.size() == 3);
    CHECK(p.coeffs[0] == doctest::Approx(1.0 / 16.0).epsilon(1e-8));
    CHECK(p.coeffs[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(p.coeffs[2] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(p.sup_error == doctest::Approx(0.0625).epsilon(1e-7));
}

TEST_CASE("degree-4 fit: linear part exact, odd cubic term vanishes") {
    const PolyActivation p = fit_relu_minimax(4, 1.0);
    REQUIRE(p.coeffs.size() == 5);
    CHECK(p.coeffs[1] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(std::abs(p.coeffs[3]) < 1e-7);
    CHECK(p.sup_error == doctest::Approx(0.03381044927).epsilon(1e-6));
}

TEST_CASE("sup error is attained, never exceeded") {
    for (int deg : {1, 2, 3, 4, 6}) {
        const PolyActivation p = fit_relu_minimax(deg, 1.0);
        double worst = 0.0;
        for (int i = 0; i <= 20000; ++i) {
            const double x = -1.0 + 2.0 * i / 20000.0;
            worst = std::max(worst, std::abs(p.eval(x) - relu(x)));
        }
        CHECK(worst <= p.sup_error * (1.0 + 1e-6) + 1e-12);
        CHECK(worst >= p.sup_error * (1.0 - 1e-3));
    }
}

TEST_CASE("fits scale with the interval halfwidth") {
    const PolyActivation unit = fit_relu_minimax(2, 1.0);
    const PolyActivation wide = fit_relu_minimax(2, 4.0);
    // a_k scales as B^(1-k), the error as B
    CHECK(wide.coeffs[0] == doctest::Approx(unit.coeffs[0] * 4.0).epsilon(1e-8));
    CHECK(wide.coeffs[1] == doctest::Approx(unit.coeffs[1]).epsilon(1e-8));
    CHECK(wide.coeffs[2] == doctest::Approx(unit.coeffs[2] / 4.0).epsilon(1e-8));
    CHECK(wide.sup_error == doctest::Approx(unit.sup_error * 4.0).epsilon(1e-8));
    CHECK(wide.halfwidth == 4.0);
}

TEST_CASE("eval and deriv agree with the power basis") {
    PolyActivation p;
    p.coeffs = {1.0, -2.0, 0.5, 3.0}; // 1 - 2x + 0.5x^2 + 3x^3
    CHECK(p.degree() == 3);
    CHECK(p.eval(2.0) == doctest::Approx(1.0 - 4.0 + 2.0 + 24.0).epsilon(1e-14));
    CHECK(p.deriv(2.0) == doctest::Approx(-2.0 + 2.0 + 36.0).epsilon(1e-14));
    PolyActivation empty;
    CHECK(empty.degree() == -1);
}

TEST_CASE("fit rejects out-of-range arguments") {
    CHECK_THROWS_AS(fit_relu_minimax(0, 1.0), UsageError);
    CHECK_THROWS_AS(fit_relu_minimax(11, 1.0), UsageError);
    CHECK_THROWS_AS(fit_relu_minimax(2, 0.0), UsageError);
    CHECK_THROWS_AS(fit_relu_minimax(2, -1.0), UsageError);
}
