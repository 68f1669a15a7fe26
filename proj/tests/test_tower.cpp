#include <doctest.h>

#include <cmath>

#include "nue/errors.hpp"
#include "nue/rng.hpp"
#include "nue/tower.hpp"

using namespace nue;

namespace {

const InducedMarkovMap& doubling_local() {
  static InducedMarkovMap t = [] {
    TimeSource s;
    s.kind = TimeKind::Every;
    TowerOptions o;
    o.unresolved_target = 1e-12;
    return build_local_tower(doubling_map(), Interval{1.0 / 3.0, 2.0 / 3.0}, s, 40, o);
  }();
  return t;
}

}  // namespace

TEST_SUITE("tower") {
  TEST_CASE("doubling local tower: exact atoms") {
    const InducedMarkovMap& t = doubling_local();
    REQUIRE(t.atoms.size() == 76);
    CHECK(t.atoms[0].interval().lo == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(t.atoms[0].interval().hi == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
    CHECK(t.atoms[0].R == 2);
    CHECK(t.atoms[1].interval().hi == doctest::Approx(11.0 / 24.0).epsilon(1e-15));
    CHECK(t.atoms[1].R == 3);
    double len = 0.0, kac = 0.0;
    for (const auto& a : t.atoms) {
      len += a.length();
      kac += a.length() * static_cast<double>(a.R);
    }
    CHECK(len + t.unresolved_mass == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    // Kac: mean return time under Lebesgue is 1 / |Delta|
    CHECK(kac / len == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(t.unresolved_mass < 1e-11);
  }

  TEST_CASE("induced map, inverse and Jacobian") {
    const InducedMarkovMap& t = doubling_local();
    CHECK(t.induced(0, 0.35) == doctest::Approx(0.4));
    CHECK(t.inverse(0, 0.5) == doctest::Approx(0.375));
    CHECK(t.log_jacobian(0, 0.35) == doctest::Approx(2.0 * std::log(2.0)));
    CHECK(t.atom_of(0.35) == 0);
    CHECK(t.partial(0, 0.35, 1) == doctest::Approx(0.7));
    auto many = t.inverse_many(1, {0.4, 0.6});
    CHECK(t.induced(1, many[0]) == doctest::Approx(0.4));
    CHECK(t.induced(1, many[1]) == doctest::Approx(0.6));
  }

  TEST_CASE("Markov conditions and a corrupted atom") {
    InducedMarkovMap t = doubling_local();
    MarkovReport ok = verify_markov(t);
    CHECK(ok.pass());
    CHECK(ok.conditions.size() == 5);
    CHECK(ok.distinct_images == 1);
    t.atoms[5].R += 1;
    MarkovReport bad = verify_markov(t);
    CHECK_FALSE(bad.pass());
    CHECK_FALSE(bad.conditions[3].pass);  // endpoint matching
  }

  TEST_CASE("first return time") {
    TimeSource s;
    s.kind = TimeKind::Every;
    Interval d{1.0 / 3.0, 2.0 / 3.0};
    auto h = first_return_time(doubling_map(), 0.35, {d}, d, s, 40);
    REQUIRE(h);
    CHECK(h->R == 2);
    CHECK_FALSE(first_return_time(doubling_map(), 0.35, {d}, d, s, 1));
  }

  TEST_CASE("doubling global tower expands by 16 and has a finite partition") {
    TimeSource s;
    s.kind = TimeKind::Zooming;
    s.alpha = ZoomingContraction::power(0.5);
    s.delta = 0.2;
    s.ell = 4;
    GlobalPartition p = build_invariant_partition(doubling_map(), {0.0}, 0.05, 4);
    InducedMarkovMap t = build_global_tower(doubling_map(), p, s, 40);
    CHECK(t.atoms.size() == 512);
    CHECK(t.unresolved_mass == doctest::Approx(0.0).scale(1.0));
    CHECK(verify_markov(t).pass());
    for (std::size_t a = 0; a < t.atoms.size(); a += 37) {
      Interval v = t.atoms[a].interval();
      double x = v.lo + 0.25 * v.length(), y = v.lo + 0.75 * v.length();
      double fx = t.induced(a, x), fy = t.induced(a, y);
      CHECK(std::fabs(fx - fy) == doctest::Approx(16.0 * (y - x)).epsilon(1e-9));
    }
    SplitMix64 rng(3);
    std::vector<double> xs(500);
    for (double& x : xs) x = rng.open_uniform();
    HyperbolicParams h;
    h.sigma = 0.5;
    TailStats ts = tail_statistics(t, xs, h);
    CHECK(ts.violating_points.empty());
    CHECK(ts.monotone());
    CHECK(invariance_domain(t, xs, 5) == doctest::Approx(1.0));
  }
}
