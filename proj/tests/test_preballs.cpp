#include <doctest.h>

#include <cmath>

#include "nue/errors.hpp"
#include "nue/preballs.hpp"

using namespace nue;

TEST_SUITE("preballs") {
  TEST_CASE("doubling pre-ball is a 2^-n copy of the ball") {
    PreBall b = build_preball(doubling_map(), 0.49, 3, 0.2, ZoomingContraction::power(0.5));
    CHECK(b.interval.length() == doctest::Approx(0.4 / 8.0).epsilon(1e-13));
    CHECK(b.interval.lo < 0.49);
    CHECK(b.interval.hi > 0.49);
    CHECK(b.cert <= 1.0 + 1e-9);
    CHECK(distortion_estimate(doubling_map(), b, {}) == doctest::Approx(0.0).scale(1.0));
  }

  TEST_CASE("pull back along an itinerary") {
    Interval w = pull_back(tent_map(), {1}, {0.2, 0.4});
    CHECK(w.lo == doctest::Approx(0.8));
    CHECK(w.hi == doctest::Approx(0.9));
    Interval v = pull_back(doubling_map(), {0, 1}, {0.25, 0.5});
    CHECK(v.lo == doctest::Approx(0.3125));
    CHECK(v.hi == doctest::Approx(0.375));
  }

  TEST_CASE("no pre-ball at the neutral fixed point") {
    CHECK_THROWS_AS(build_preball(neutral_circle_map(), 0.0, 3, 0.1, ZoomingContraction::power(0.9)), Error);
  }

  TEST_CASE("logistic pre-ball carries bounded distortion") {
    MapSystem l = logistic_map(4.0);
    OrbitRecord o = iterate(l, 0.3, 5);
    PreBallAttempt a = certify_preball(l, o, 2, 0.02, ZoomingContraction::power(0.9));
    REQUIRE(a.ok);
    double rho = distortion_estimate(l, a.ball, {});
    CHECK(rho > 0.0);
    CHECK(std::isfinite(rho));
  }

  TEST_CASE("delta choice for the doubling map") {
    HyperbolicParams p;
    p.sigma = 0.5;
    DeltaChoice c = choose_delta(doubling_map(), p, 200, 30, 1);
    CHECK(c.found);
    CHECK(c.delta == doctest::Approx(0.3));
  }
}
