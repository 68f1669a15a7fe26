#include <doctest.h>

#include <cmath>

#include "nue/config.hpp"
#include "nue/dynamics.hpp"
#include "nue/errors.hpp"
#include "nue/expr.hpp"

using namespace nue;

TEST_SUITE("dynamics") {
  TEST_CASE("doubling map values, derivative and circle distance") {
    MapSystem d = doubling_map();
    CHECK(d.circle());
    CHECK(d.apply(0.3) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(d.apply(0.7) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(d.derivative(0.123) == 2.0);
    CHECK(d.dist(0.95, 0.05) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(d.branch_of(0.25) == 0);
    CHECK(d.branch_of(0.75) == 1);
  }

  TEST_CASE("inverse branches and offsets") {
    MapSystem d = doubling_map();
    CHECK(d.invert(1, 0.0) == doctest::Approx(0.5));
    auto u = d.inverse_offset(0.3, 1e-20);
    REQUIRE(u);
    CHECK(*u == doctest::Approx(0.5e-20).epsilon(1e-15));
    CHECK(d.forward_offset(0.3, 1e-20) == doctest::Approx(2e-20).epsilon(1e-15));
    // continuation across the seam of the circle
    auto w = d.local_inverse(0.49, 0.98 + 0.04);
    REQUIRE(w);
    CHECK(*w == doctest::Approx(0.51).epsilon(1e-14));

    MapSystem t = tent_map();
    CHECK(t.invert(1, 0.4) == doctest::Approx(0.8));
  }

  TEST_CASE("logistic map: critical point and orbit truncation") {
    MapSystem l = logistic_map(4.0);
    CHECK(l.apply(0.25) == doctest::Approx(0.75));
    CHECK(l.derivative(0.1) == doctest::Approx(3.2));
    REQUIRE(l.critical_set().size() == 1);
    CHECK(l.crit_distance(0.2) == doctest::Approx(0.3));
    CHECK_THROWS_AS(iterate(l, 0.5, 3), CriticalHit);
    OrbitRecord o = iterate_until_critical(l, 0.5, 3);
    CHECK(o.truncated);
    // 1/4 -> 3/4 -> 3/4: the fixed point is reached exactly
    OrbitRecord p = iterate(l, 0.25, 4);
    CHECK(p.points.size() == 5);
    CHECK(p.points[4] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(p.log_inv_deriv[1] == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("neutral circle map has derivative one at the fixed point") {
    MapSystem n = neutral_circle_map();
    CHECK(n.apply(0.0) == 0.0);
    CHECK(n.derivative(0.0) == doctest::Approx(1.0));
    CHECK(n.apply(0.1) == doctest::Approx(0.12));
    CHECK(n.apply(0.9) == doctest::Approx(0.88));
  }

  TEST_CASE("truncated distance") {
    CHECK(truncated_distance_value(0.05, 0.1) == 0.05);
    CHECK(truncated_distance_value(0.2, 0.1) == 1.0);
  }

  TEST_CASE("Viana skew product orbit length") {
    OrbitRecord o = iterate_viana(VianaMap{}, 0.1, 0.3, 50);
    CHECK(o.points.size() == 51);
  }

  TEST_CASE("polynomial shift metric") {
    SymbolicSystem sys;
    Word x{0, 1, 1, 0, 1}, y{0, 1, 0, 0, 1};
    CHECK(first_difference(x, y) == 3);
    CHECK(symbolic_distance(sys, x, y) == doctest::Approx(1.0 / 9.0));
    CHECK(symbolic_distance(sys, shift(x, 2), shift(y, 2)) == 1.0);
    CHECK(conformal_derivative(sys, x) == 1.0);
    sys.metric = MetricKind::Standard;
    CHECK(symbolic_distance(sys, x, y) == doctest::Approx(0.125));
  }

  TEST_CASE("expression grammar") {
    Expr e = Expr::parse("2*x^2 - sin(x) + (3 mod 2)");
    CHECK(e(0.0) == doctest::Approx(1.0));
    CHECK(e(1.0) == doctest::Approx(3.0 - std::sin(1.0)));
    CHECK_THROWS_AS(Expr::parse("2*"), Error);
  }
}

TEST_SUITE("config") {
  TEST_CASE("sections, comments and numbers") {
    ConfigFile c = ConfigFile::parse("# run\n[run]\nseed = 42  # inline\n\n[time]\ndelta = 2.5e-1\n");
    CHECK(c.require_u64("run", "seed") == 42);
    CHECK(c.get_number("time", "delta", 0.0) == 0.25);
    CHECK(c.line_of("time", "delta") == 6);
    CHECK(c.get_number("time", "missing", 7.0) == 7.0);
  }

  TEST_CASE("errors name the field") {
    ConfigFile c = ConfigFile::parse("[run]\nseed = x\n");
    try {
      c.require_u64("run", "seed");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ConfigError);
      CHECK(std::string(e.what()).find("[run] seed") != std::string::npos);
    }
    try {
      c.require_number("corr", "z");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("[corr] z") != std::string::npos);
    }
    CHECK_THROWS_AS(ConfigFile::parse("[run\n"), Error);
    CHECK_THROWS_AS(ConfigFile::parse("[a]\nk = 1\nk = 2\n"), Error);
  }

  TEST_CASE("a map from branch expressions matches the preset") {
    ConfigFile c = ConfigFile::parse(
        "[map]\nname = tent2\ndomain = interval\n"
        "[branch.0]\nleft = 0\nright = 0.5\nf = 2*x\ndf = 2\n"
        "[branch.1]\nleft = 0.5\nright = 1\nf = 2 - 2*x\ndf = -2\n");
    MapSystem m = map_from_config(c);
    MapSystem t = tent_map();
    for (double x : {0.1, 0.3, 0.6, 0.9}) {
      CHECK(m.apply(x) == doctest::Approx(t.apply(x)));
      CHECK(m.derivative(x) == doctest::Approx(t.derivative(x)));
    }
    CHECK(map_from_config(ConfigFile::parse("[map]\npreset = logistic\n")).name() == "logistic");
    CHECK_THROWS_AS(map_from_config(ConfigFile::parse("[map]\npreset = nope\n")), Error);
  }
}
