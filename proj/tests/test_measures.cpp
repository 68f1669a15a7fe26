#include <doctest.h>

#include <cmath>

#include "nue/bernoulli.hpp"
#include "nue/errors.hpp"
#include "nue/measures.hpp"
#include "nue/statistics.hpp"

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

// global doubling tower over the pieces (0,1/2), (1/2,1): every return takes ell steps
InducedMarkovMap constant_return(std::size_t ell) {
  TimeSource s;
  s.kind = TimeKind::Every;
  s.ell = ell;
  GlobalPartition p = build_invariant_partition(doubling_map(), {0.0}, 0.5, ell);
  return build_global_tower(doubling_map(), p, s, ell);
}

}  // namespace

TEST_SUITE("measures") {
  TEST_CASE("doubling tower: invariant density is Lebesgue") {
    DensityOptions o;
    o.grid = 1u << 10;
    TowerMeasure m = invariant_density(doubling_local(), {}, o);
    double sup = 0.0;
    for (double h : m.density) sup = std::max(sup, std::fabs(h - 1.0));
    CHECK(sup < 1e-9);
    CHECK(m.mean_R == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(m.sup_inf_ratio <= m.distortion_bound);
    ProjectedMeasure p = project(m, 256);
    CHECK(p.moment1 == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(p.moment2 == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
    CHECK(p.invariance_residual < 1e-6);
  }

  TEST_CASE("projection needs a Lebesgue reference") {
    ReferenceMeasure mu;
    mu.name = "other";
    mu.log_jacobian = [](const MapSystem& f, double x) { return std::log(std::fabs(f.derivative(x))); };
    DensityOptions o;
    o.grid = 256;
    TowerMeasure m = invariant_density(doubling_local(), mu, o);
    CHECK_THROWS_AS(project(m, 64), Error);
  }

  TEST_CASE("histogram L1 and Birkhoff averages") {
    CHECK(histogram_l1({1.0, 1.0}, {2.0, 0.0}) == doctest::Approx(1.0));
    auto h = birkhoff_histogram(doubling_map(), 0.1234, 1000000, 64, 1);
    CHECK(histogram_l1(h, std::vector<double>(64, 1.0)) < 0.02);
  }

  TEST_CASE("liftability identity with constant return times") {
    for (std::size_t R : {1, 3}) {
      InducedMarkovMap t = constant_return(R);
      for (const auto& a : t.atoms) REQUIRE(a.R == R);
      // floating doubling orbits stay off the dyadic grid for 40 steps
      LiftabilityReport rep = liftability_frequency(t, 0.1234567, 40);
      CHECK(rep.identity_holds);
      REQUIRE(rep.n_reached == 40);
      // lhs(n) = #{0 <= j < n : R | j}
      CHECK(rep.lhs[40] == (40 + R - 1) / R);
      CHECK(rep.frequency == doctest::Approx(1.0 / static_cast<double>(R)).epsilon(0.05));
    }
  }

  TEST_CASE("liftability identity on the doubling local tower") {
    LiftabilityReport rep = liftability_frequency(doubling_local(), 0.4123, 30);
    CHECK(rep.identity_holds);
  }

  TEST_CASE("counting lemma: equality case and an invalid scenario") {
    const std::size_t N = 10;
    CountingScenario s;
    s.G.assign(N + 1, std::vector<char>(N + 1, 0));
    s.B.assign(N + 1, 1);
    s.g.assign(N + 1, 1);
    for (std::size_t m = 1; m <= N; ++m)
      for (std::size_t j = 0; j < m; ++j) s.G[j][m - j] = 1;
    CHECK(counting_inequality_check(s, N));
    CountingScenario bad = s;
    bad.g.assign(N + 1, 2);
    CHECK_THROWS_AS(validate_scenario(bad, N), Error);
    SplitMix64 rng(1);
    for (int i = 0; i < 50; ++i) CHECK(counting_inequality_check(random_scenario(rng, 12), 12));
  }

  TEST_CASE("Lyapunov exponent of the doubling map") {
    LyapunovEstimate e = lyapunov(doubling_map(), [](SplitMix64& r) { return r.open_uniform(); }, 200, 20, 1);
    CHECK(e.mean == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(e.samples == 20);
  }

  TEST_CASE("periodic repellers of the doubling map") {
    PeriodicOrbit one = find_periodic_repeller(doubling_map(), {0.0, 1.0}, 1);
    CHECK(one.period == 1);
    CHECK(std::fabs(one.points[0] - std::round(one.points[0])) < 1e-12);
    CHECK(one.multiplier == doctest::Approx(2.0));
    PeriodicOrbit two = find_periodic_repeller(doubling_map(), {0.0, 1.0}, 2, {}, 2);
    REQUIRE(two.points.size() == 2);
    double lo = std::min(two.points[0], two.points[1]), hi = std::max(two.points[0], two.points[1]);
    CHECK(lo == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(hi == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(two.multiplier == doctest::Approx(4.0));
    CHECK_THROWS_AS(find_periodic_repeller(doubling_map(), {0.0, 1.0}, 1, {}, 2), Error);
  }
}

TEST_SUITE("bernoulli") {
  TEST_CASE("cylinder masses follow the product law") {
    const InducedMarkovMap& t = doubling_local();
    std::vector<double> w(t.atoms.size(), 1.0 / static_cast<double>(t.atoms.size()));
    BernoulliMeasure m = bernoulli_tower_measure(t, w);
    CHECK(m.cylinder_mass({0, 1, 2}) == doctest::Approx(std::pow(1.0 / 76.0, 3)));
    CHECK(m.tail(1) == doctest::Approx(1.0));
    // two atoms for each R = 2..38, one each for 39 and 40
    CHECK(m.mean_R == doctest::Approx(1559.0 / 76.0).epsilon(1e-14));
    std::vector<double> short_w(t.atoms.size(), 1e-6);
    CHECK_THROWS_AS(bernoulli_tower_measure(t, short_w), Error);
  }

  TEST_CASE("exponential weights give a geometric tail") {
    const InducedMarkovMap& t = doubling_local();
    BernoulliMeasure m = bernoulli_tower_measure(t, exponential_weights(t, 0.1));
    TailFit f = fit_tail(m, 2, 30);
    CHECK(f.rate == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(f.r2 > 0.999999);
  }

  TEST_CASE("sampled points lie on true F-orbits") {
    const InducedMarkovMap& t = doubling_local();
    BernoulliMeasure m = bernoulli_tower_measure(t, exponential_weights(t, 0.3));
    SplitMix64 rng(4);
    for (int i = 0; i < 20; ++i) {
      TowerSample s = sample_tower_orbit(m, rng, 10, false);
      for (std::size_t k = 0; k + 1 < s.atoms.size() && k < 5; ++k)
        CHECK(t.induced(s.atoms[k], s.returns[k]) == doctest::Approx(s.returns[k + 1]).epsilon(1e-9));
      CHECK(s.orbit.size() == 11);
    }
    TowerExponent e = bernoulli_exponent(m, 50, 5, 2);
    CHECK(e.per_step == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  }
}

TEST_SUITE("statistics") {
  TEST_CASE("least squares") {
    Fit f = least_squares({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
  }

  TEST_CASE("cos 2 pi x decorrelates at once under Lebesgue for the doubling map") {
    MapSystem d = doubling_map();
    Observable c = observable_by_name("cos2pi");
    CorrelationSeries s = correlation(lebesgue_sampler(d), c, c, 6, 20000, 3);
    CHECK(s.values[0] == doctest::Approx(0.5).epsilon(0.05));
    for (std::size_t n = 1; n <= 6; ++n) CHECK(std::fabs(s.values[n]) < 5.0 * s.stderr_[n] + 1e-3);
  }

  TEST_CASE("CLT diagnostics: constant and coboundary observables") {
    MapSystem d = doubling_map();
    CltReport k = clt_diagnostic(lebesgue_sampler(d), observable_by_name("const"), 100, 200, 1);
    CHECK(k.degenerate);
    CHECK(k.mean == doctest::Approx(1.0));
    CltReport cb = clt_diagnostic(lebesgue_sampler(d), observable_by_name("coboundary", &d), 1000, 400, 2);
    CHECK(cb.variance < 0.01);
    CltReport x = clt_diagnostic(lebesgue_sampler(d), observable_by_name("sin2pi"), 400, 400, 3);
    CHECK_FALSE(x.degenerate);
    CHECK(x.variance == doctest::Approx(0.5).epsilon(0.25));
    CHECK_THROWS_AS(observable_by_name("coboundary"), Error);
  }
}
