#include "doctest.h"

#include "risklab/errors.hpp"
#include "risklab/polynomial.hpp"

#include <vector>

using namespace risklab;

TEST_CASE("construction and evaluation") {
    const Poly c = Poly::constant(2, 3.5);
    CHECK(c.eval({1.0, 2.0}) == 3.5);
    CHECK(c.total_degree() == 0);

    const Poly x = Poly::variable(2, 0);
    const Poly y = Poly::variable(2, 1);
    CHECK(x.eval({4.0, 9.0}) == 4.0);
    CHECK(y.eval({4.0, 9.0}) == 9.0);

    const Poly zero(2);
    CHECK(zero.is_zero());
    CHECK(zero.total_degree() == -1);
    CHECK_THROWS_AS(Poly::variable(2, 2), UsageError);
}

TEST_CASE("ring operations") {
    const Poly x = Poly::variable(2, 0);
    const Poly y = Poly::variable(2, 1);

    const Poly s = (x + y).pow(2); // x^2 + 2xy + y^2
    CHECK(s.total_degree() == 2);
    CHECK(s.term_count() == 3);
    CHECK(s.eval({2.0, 3.0}) == 25.0);

    const Poly p = x * y - x * 2.0 + 1.0;
    CHECK(p.eval({3.0, 5.0}) == 3.0 * 5.0 - 6.0 + 1.0);

    // cancellation removes the term outright
    const Poly q = x - x;
    CHECK(q.is_zero());

    const Poly mixed = Poly::variable(3, 2);
    CHECK_THROWS_AS(x + mixed, UsageError);
}

TEST_CASE("derivatives") {
    const Poly x = Poly::variable(2, 0);
    const Poly y = Poly::variable(2, 1);
    const Poly f = x.pow(3) * y + y * 2.0; // x^3 y + 2y
    const Poly fx = f.derivative(0);       // 3 x^2 y
    const Poly fy = f.derivative(1);       // x^3 + 2
    CHECK(fx.eval({2.0, 5.0}) == 60.0);
    CHECK(fy.eval({2.0, 5.0}) == 10.0);
    CHECK(Poly::constant(2, 7.0).derivative(0).is_zero());
}

TEST_CASE("univariate composition") {
    // p(z) = 1 + 2z + z^2 at z = x + 1 gives (x + 2)^2
    const Poly inner = Poly::variable(1, 0) + 1.0;
    const Poly comp = compose_univariate({1.0, 2.0, 1.0}, inner);
    CHECK(comp.total_degree() == 2);
    for (double v : {-2.0, 0.0, 0.5, 3.0}) {
        CHECK(comp.eval({v}) == doctest::Approx((v + 2.0) * (v + 2.0)).epsilon(1e-14));
    }

    // degree multiplies: z^2 composed with a quadratic is quartic
    const Poly quad = Poly::variable(1, 0).pow(2) + 1.0;
    const Poly quart = compose_univariate({0.0, 0.0, 1.0}, quad);
    CHECK(quart.total_degree() == 4);
}

TEST_CASE("prune drops small coefficients") {
    const Poly x = Poly::variable(1, 0);
    Poly p = x * 1e-14 + 1.0;
    p.prune(1e-12);
    CHECK(p.term_count() == 1);
    CHECK(p.eval({100.0}) == 1.0);
}

TEST_CASE("printing names the variables") {
    const Poly x = Poly::variable(2, 0);
    const Poly y = Poly::variable(2, 1);
    const std::string s = (x * y + 1.0).to_string();
    CHECK(s.find("w0") != std::string::npos);
    CHECK(s.find("w1") != std::string::npos);
}
