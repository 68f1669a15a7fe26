#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nue/contraction.hpp"
#include "nue/errors.hpp"
#include "nue/rng.hpp"
#include "nue/zooming.hpp"

using namespace nue;

TEST_SUITE("zooming") {
  TEST_CASE("contraction sequences and their axioms") {
    auto p = ZoomingContraction::power(0.5);
    CHECK(p(3, 0.8) == doctest::Approx(0.1));
    auto q = ZoomingContraction::polynomial();
    CHECK(q(2, 0.25) == doctest::Approx(0.25 / 4.0));
    auto e = ZoomingContraction::exponential(8.0);
    CHECK(e(1, 1.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(p.subsample(4)(1, 1.0) == doctest::Approx(1.0 / 16.0));
    CHECK(p.sum(1.0, 3) == doctest::Approx(0.875));
    CHECK(p.total(1.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& a : {p, q, e}) {
      AxiomReport r = check_axioms(a);
      CHECK(r.strict_contraction);
      CHECK(r.semigroup);
      CHECK(r.summable);
    }
  }

  TEST_CASE("polynomial contraction composes exactly") {
    auto q = ZoomingContraction::polynomial();
    for (std::size_t n : {1, 3, 7})
      for (std::size_t j : {1, 2, 5})
        for (double r : {1.0, 0.25, 1e-4}) CHECK(q(n, q(j, r)) == doctest::Approx(q(n + j, r)).epsilon(1e-13));
  }

  TEST_CASE("ell rules") {
    EllCertificate c = compute_ell(std::log(2.0));
    CHECK(c.ell == 26);  // ceil(16 log 3 / log 2)
    CHECK(c.certified);
    CHECK(c.series <= 0.125);
    // 2^-k / (1 - 2^-k) <= 1/8 first at k = 4
    CHECK(ell_for_contraction(ZoomingContraction::power(0.5), 0.05) == 4);
    // e^{-0.2k} / (1 - e^{-0.2k}) <= 1/8 first at k = 11
    CHECK(ell_for_contraction(ZoomingContraction::power(std::exp(-0.2)), 0.05) == 11);
    CHECK_THROWS_AS(compute_ell(0.0), Error);
  }

  TEST_CASE("hyperbolic times of the doubling map") {
    OrbitRecord o = iterate(doubling_map(), 0.1234, 30);
    HyperbolicParams p;
    p.sigma = 0.5;
    TimeFlags all = detect_hyperbolic_times(o, p);
    CHECK(all.count[30] == 30);
    p.sigma = 0.45;
    TimeFlags none = detect_hyperbolic_times(o, p);
    CHECK(none.count[30] == 0);
    TimeFlags sub = sub_collection_filter(all, 4);
    CHECK(sub.horizon() == 7);
    CHECK(sub.count[7] == 7);
    FrequencyReport fr = frequency_stats(all, 0.5);
    CHECK(fr.max_prefix_frequency == 1.0);
    CHECK(fr.qualifying.size() == 30);
  }

  TEST_CASE("zooming times with exact backward contraction") {
    TimeFlags z = detect_zooming_times(doubling_map(), 0.7316, ZoomingContraction::power(0.5), 0.2, 20);
    CHECK(z.count[20] == 20);
    // contraction 0.4 < 1/2 is stronger than the doubling map provides
    TimeFlags w = detect_zooming_times(doubling_map(), 0.7316, ZoomingContraction::power(0.4), 0.2, 20);
    CHECK(w.count[20] == 0);
  }

  TEST_CASE("expansion statistics") {
    OrbitRecord o = iterate(doubling_map(), 0.3, 10);
    auto e = expansion_stat(o);
    CHECK(e[10] == doctest::Approx(std::log(2.0)));
    auto s = slow_approximation_stat(o, 0.1);
    CHECK(s[10] == doctest::Approx(0.0));
    auto j = first_expanding_moment(o, 0.5, 0.1, 0.1);
    REQUIRE(j);
    CHECK(*j == 1);
    CHECK_FALSE(first_expanding_moment(o, 1.0, 0.1, 0.1));
  }

  TEST_CASE("critical pre-images of the logistic map") {
    auto c = critical_preimages(logistic_map(4.0), 2, 100);
    std::sort(c.begin(), c.end());
    REQUIRE(c.size() == 3);
    CHECK(c[0] == doctest::Approx((2.0 - std::sqrt(2.0)) / 4.0));
    CHECK(c[1] == doctest::Approx(0.5));
    CHECK(c[2] == doctest::Approx((2.0 + std::sqrt(2.0)) / 4.0));
    CHECK(critical_preimages(logistic_map(4.0), 5, 1000).size() == 31);
  }

  TEST_CASE("transport inequality on logistic orbits") {
    MapSystem l = logistic_map(4.0);
    SplitMix64 rng(5);
    for (int i = 0; i < 5; ++i) {
      OrbitRecord o = iterate(l, rng.open_uniform(), 2000);
      TransportReport t = check_transport_inequality(l, o, 2, 1e-4, 4.0);
      CHECK(t.holds);
      CHECK(t.violations == 0);
      CHECK(t.prefixes_checked > 0);
    }
    OrbitRecord o = iterate(l, 0.3, 10);
    CHECK_THROWS_AS(check_transport_inequality(l, o, 2, 0.1, 4.0), Error);
  }
}
