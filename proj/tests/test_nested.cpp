#include <doctest.h>

#include <cmath>

#include "nue/errors.hpp"
#include "nue/nested.hpp"

using namespace nue;

namespace {

TimeSource zooming_doubling(std::size_t ell) {
  TimeSource s;
  s.kind = TimeKind::Zooming;
  s.alpha = ZoomingContraction::power(0.5);
  s.delta = 0.2;
  s.ell = ell;
  return s;
}

}  // namespace

TEST_SUITE("nested") {
  TEST_CASE("linking") {
    CHECK(is_linked({0.1, 0.3}, {0.2, 0.4}, false));
    CHECK_FALSE(is_linked({0.1, 0.4}, {0.2, 0.3}, false));
    CHECK_FALSE(is_linked({0.1, 0.2}, {0.2, 0.3}, false));
    CHECK(is_linked({0.9, 1.05}, {0.0, 0.1}, true));
  }

  TEST_CASE("(1/3, 2/3) is nice for the doubling map, (0.3, 0.6) is not") {
    TimeSource every;
    every.kind = TimeKind::Every;
    NestedReport nice = verify_nested(doubling_map(), {1.0 / 3.0, 2.0 / 3.0}, 12, every, 8);
    CHECK(nice.nested);
    CHECK(nice.linked.empty());
    CHECK(nice.pairwise_violations == 0);
    NestedReport bad = verify_nested(doubling_map(), {0.3, 0.6}, 12, every);
    CHECK_FALSE(bad.nested);
    CHECK_FALSE(bad.linked.empty());
  }

  TEST_CASE("nested ball core contains the half ball and is nested") {
    for (double p : {0.3, 0.5, 0.71}) {
      // chains closed through order 15; the default cap only bounds the core's displacement
      NestedBall b = build_nested_ball(doubling_map(), p, 0.05, zooming_doubling(3), 15);
      CHECK(b.contains_half_ball());
      CHECK(b.contraction_sum < b.r / 4.0);
      NestedReport r = verify_nested(doubling_map(), {b.core.lo, b.core.hi}, 15, zooming_doubling(3));
      CHECK(r.nested);
      CHECK(r.linked.empty());
    }
  }

  TEST_CASE("chain elements shorter than the region merge tolerance still cut the core") {
    TimeSource s;
    s.kind = TimeKind::Zooming;
    s.alpha = ZoomingContraction::power(0.8277532798848107);
    s.delta = 0.05;
    s.ell = 12;
    NestedBall b = build_nested_ball(neutral_circle_map(), 0.3, 0.05, s, 15);
    // an order-4 element of length ~8e-13 straddles 0.35
    CHECK(b.core.hi < 0.35 - 1e-13);
    CHECK(b.contains_half_ball());
    CHECK(verify_nested(neutral_circle_map(), {b.core.lo, b.core.hi}, 15, s).linked.empty());
  }

  TEST_CASE("weak contraction fails the summability hypothesis") {
    TimeSource s = zooming_doubling(1);
    s.alpha = ZoomingContraction::power(0.9);
    try {
      build_nested_ball(doubling_map(), 0.5, 0.05, s);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::HypothesisFail);
    }
  }

  TEST_CASE("invariant partition of the doubling map") {
    GlobalPartition g = build_invariant_partition(doubling_map(), {0.0}, 0.05, 4);
    // backward orbits of 0 until gaps are at most 0.05: the grid k/32
    CHECK(g.atoms.size() == 32);
    double mass = 0.0;
    for (const auto& a : g.atoms) mass += a.region.measure();
    CHECK(mass == doctest::Approx(1.0));
    for (double b : g.boundary) CHECK(b * 32.0 == doctest::Approx(std::round(b * 32.0)));
    CHECK(g.atom_of(0.01) != npos);
    CHECK(g.atom_of(0.0) == npos);
    CHECK_THROWS_AS(build_invariant_partition(doubling_map(), {0.3}, 0.05, 4), Error);
  }
}
