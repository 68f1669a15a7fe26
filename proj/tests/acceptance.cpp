// Acceptance run: one PASS/FAIL line per criterion, with measured values.
// Usage: acceptance [criterion ...]   (no arguments: all ten)
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "nue/bernoulli.hpp"
#include "nue/errors.hpp"
#include "nue/measures.hpp"
#include "nue/nested.hpp"
#include "nue/rng.hpp"
#include "nue/statistics.hpp"
#include "nue/tower.hpp"
#include "nue/zooming.hpp"

using namespace nue;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  Outcome() { detail.precision(8); }
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TimeSource every_source() {
  TimeSource s;
  s.kind = TimeKind::Every;
  return s;
}

InducedMarkovMap doubling_local() {
  TowerOptions o;
  o.unresolved_target = 1e-12;
  return build_local_tower(doubling_map(), Interval{1.0 / 3.0, 2.0 / 3.0}, every_source(), 40, o);
}

TimeSource doubling_zooming() {
  TimeSource s;
  s.kind = TimeKind::Zooming;
  s.alpha = ZoomingContraction::power(0.5);
  s.delta = 0.2;
  s.ell = ell_for_contraction(s.alpha, 0.05);
  return s;
}

// logistic a = 4 at hyperbolic times, sigma = e^-0.4
TimeSource logistic_hyperbolic(const MapSystem& lg) {
  TimeSource s;
  s.kind = TimeKind::Hyperbolic;
  s.hyp.sigma = std::exp(-0.4);
  s.hyp.epsilon = 1e-3;
  s.hyp.b = default_b(lg.beta());
  s.hyp.delta = 0.05;
  s.delta = 0.05;
  s.alpha = ZoomingContraction::power(std::sqrt(s.hyp.sigma));
  s.ell = 11;
  return s;
}

void criterion1(Outcome& o) {
  InducedMarkovMap t = doubling_local();
  MarkovReport rep = verify_markov(t, 1e-9);
  std::size_t passed = 0;
  for (const auto& c : rep.conditions) passed += c.pass;
  TowerMeasure m = invariant_density(t);
  double sup = 0.0;
  for (double w : m.density) sup = std::max(sup, std::fabs(w - 1.0));
  ProjectedMeasure pm = project(m);
  o.detail << t.atoms.size() << " atoms, Markov " << passed << "/5, sup|w-1| " << sup << ", moments ("
           << pm.moment1 << ", " << pm.moment2 << ")";
  o.require(rep.conditions.size() == 5 && rep.pass(), "Markov conditions");
  o.require(sup <= 1e-6, "density");
  o.require(std::fabs(pm.moment1 - 0.5) <= 1e-4 && std::fabs(pm.moment2 - 1.0 / 3.0) <= 1e-4, "moments");
}

void criterion2(Outcome& o) {
  const MapSystem f = doubling_map();
  TimeSource s = doubling_zooming();
  GlobalPartition p = build_invariant_partition(f, {0.0}, 0.05, s.ell);
  std::vector<std::size_t> counts;
  InducedMarkovMap last;
  for (std::size_t R_max : {20, 40, 80}) {
    last = build_global_tower(f, p, s, R_max);
    counts.push_back(last.atoms.size());
  }
  bool stable = counts[1] == counts[2] && last.unresolved_mass < 1e-12;
  SplitMix64 rng(17);
  std::size_t pairs = 0, bad = 0;
  double worst = INFINITY;
  for (std::size_t a = 0; a < last.atoms.size(); ++a) {
    Interval v = last.atoms[a].interval();
    for (int k = 0; k < 20; ++k) {
      double x = v.lo + rng.open_uniform() * v.length(), y = v.lo + rng.open_uniform() * v.length();
      if (x == y) continue;
      double fx = last.induced(a, x), fy = last.induced(a, y);
      double dF = f.dist(f.reduce(fx), f.reduce(fy)), d = f.dist(x, y);
      ++pairs;
      if (dF < 8.0 * d - 1e-9) ++bad;
      worst = std::min(worst, dF / d);
    }
  }
  o.detail << "ell " << s.ell << ", atoms at R_max 20/40/80: " << counts[0] << "/" << counts[1] << "/"
           << counts[2] << ", unresolved " << last.unresolved_mass << ", " << pairs
           << " pairs, min ratio " << worst << ", " << bad << " below 8";
  o.require(stable, "atom count stabilizes");
  o.require(bad == 0, "expansion");
}

void criterion3(Outcome& o) {
  struct Combo {
    std::string map;
    ZoomingContraction alpha;
    double delta;
  };
  std::vector<Combo> combos = {
      {"doubling", ZoomingContraction::power(0.5), 0.2},
      {"doubling", ZoomingContraction::power(0.7), 0.2},
      {"times3", ZoomingContraction::power(1.0 / 3.0), 0.2},
      {"times3", ZoomingContraction::power(0.5), 0.2},
      {"tent", ZoomingContraction::power(0.5), 0.2},
      {"logistic", ZoomingContraction::power(0.5), 0.1},
      {"neutral", ZoomingContraction::power(0.8277532798848107), 0.05},
  };
  std::size_t built = 0, skipped = 0, failed = 0;
  std::ostringstream fails;
  for (const Combo& c : combos) {
    MapSystem f = map_by_name(c.map);
    TimeSource s;
    s.kind = TimeKind::Zooming;
    s.alpha = c.alpha;
    s.delta = c.delta;
    double r = std::min(0.05, c.delta);
    s.ell = ell_for_contraction(s.alpha, r);
    for (double p : {0.3, 0.5, 0.71}) {
      try {
        NestedBall b = build_nested_ball(f, p, r, s, std::max<std::size_t>(15, default_order_cap(s, r)));
        ++built;
        NestedReport rep = verify_nested(f, {b.core.lo, b.core.hi}, 15, s);
        bool ok = b.contraction_sum < r / 4.0 && b.contains_half_ball() && rep.linked.empty();
        if (!ok) {
          ++failed;
          fails << " " << c.map << "@" << p;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::HypothesisFail) throw;
        ++skipped;
      }
    }
  }
  o.detail << built << " balls built, " << skipped << " combos outside the hypothesis, " << failed << " failed"
           << fails.str();
  o.require(built > 0, "at least one certified combo");
  o.require(failed == 0, "core and nesting");
}

void criterion4(Outcome& o) {
  MapSystem lg = logistic_map();
  TimeSource s = logistic_hyperbolic(lg);
  GlobalPartition p = build_invariant_partition(lg, {0.0}, 0.05, s.ell);
  TowerOptions opt;
  opt.seeds = 4096;
  opt.max_gap_seeds = 40000;
  opt.unresolved_target = 1e-3;
  InducedMarkovMap t = build_global_tower(lg, p, s, 220, opt);
  SplitMix64 rng(7);
  std::vector<double> xs(10000);
  for (double& x : xs) x = rng.open_uniform();
  TailStats ts = tail_statistics(t, xs, s.hyp);
  o.detail << t.atoms.size() << " atoms, unresolved " << t.unresolved_mass << ", " << ts.samples << " samples, "
           << ts.violating_points.size() << " violations";
  o.require(ts.samples == 10000, "sample count");
  o.require(ts.violating_points.empty(), "tail inclusion");
}

double alpha_poly(std::size_t n, double r) {
  double q = 1.0 + static_cast<double>(n) * std::sqrt(r);
  return r / (q * q);
}

// returns the largest relative error of the identity over all 0 <= j <= n < phi
double shift_identity_error(const SymbolicSystem& sys, const Word& x, const Word& y) {
  std::size_t phi = first_difference(x, y);
  if (phi == 0) return 0.0;
  double worst = 0.0;
  for (std::size_t n = 0; n < phi; ++n) {
    double dn = symbolic_distance(sys, shift(x, n), shift(y, n));
    for (std::size_t j = 0; j <= n; ++j) {
      double lhs = symbolic_distance(sys, shift(x, j), shift(y, j));
      worst = std::max(worst, std::fabs(lhs - alpha_poly(n - j, dn)) / lhs);
    }
  }
  return worst;
}

void criterion5(Outcome& o) {
  SymbolicSystem sys;
  std::size_t pairs = 0;
  double worst = 0.0;
  // every pair of binary words up to length 6
  for (std::size_t len = 1; len <= 6; ++len)
    for (std::uint32_t a = 0; a < (1u << len); ++a)
      for (std::uint32_t b = 0; b < (1u << len); ++b) {
        Word x(len), y(len);
        for (std::size_t i = 0; i < len; ++i) {
          x[i] = (a >> i) & 1u;
          y[i] = (b >> i) & 1u;
        }
        worst = std::max(worst, shift_identity_error(sys, x, y));
        ++pairs;
      }
  // longer words: the distance depends on the first difference only, so each
  // (length, first difference) class is sampled
  SplitMix64 rng(5);
  for (std::size_t len = 7; len <= 20; ++len)
    for (std::size_t phi = 1; phi <= len; ++phi)
      for (int k = 0; k < 64; ++k) {
        Word x(len), y(len);
        for (std::size_t i = 0; i < len; ++i) x[i] = y[i] = static_cast<std::uint8_t>(rng.below(2));
        y[phi - 1] ^= 1u;
        for (std::size_t i = phi; i < len; ++i) y[i] = static_cast<std::uint8_t>(rng.below(2));
        worst = std::max(worst, shift_identity_error(sys, x, y));
        ++pairs;
      }
  o.detail << pairs << " pairs, max relative error " << worst;
  o.require(worst <= 8.0 * 2.220446049250313e-16, "identity to machine precision");
}

void criterion6(Outcome& o) {
  InducedMarkovMap t = doubling_local();
  SplitMix64 rng(6);
  std::size_t orbits = 0, mismatches = 0, steps = 0;
  while (orbits < 1000) {
    double x = 1.0 / 3.0 + rng.open_uniform() / 3.0;
    if (t.atom_of(x) == npos) continue;
    LiftabilityReport rep = liftability_frequency(t, x, 40);
    ++orbits;
    steps += rep.n_reached;
    if (!rep.identity_holds) ++mismatches;
  }
  SplitMix64 srng(66);
  std::size_t scenarios = 0, counting_bad = 0;
  for (; scenarios < 1000; ++scenarios) {
    std::size_t n_max = 4 + static_cast<std::size_t>(srng.below(29));
    CountingScenario s = random_scenario(srng, n_max);
    if (!counting_inequality_check(s, n_max)) ++counting_bad;
  }
  o.detail << orbits << " orbits (" << steps << " f-steps), " << mismatches << " identity mismatches; "
           << scenarios << " scenarios, " << counting_bad << " counting violations";
  o.require(mismatches == 0, "liftability identity");
  o.require(counting_bad == 0, "counting inequality");
}

void criterion7(Outcome& o) {
  MapSystem lg = logistic_map();
  TowerOptions opt;
  opt.unresolved_target = 1e-9;
  InducedMarkovMap t = build_local_tower(lg, Interval{0.25, 0.75}, every_source(), 60, opt);
  DensityOptions dopt;
  dopt.grid = 16384;
  TowerMeasure m = invariant_density(t, {}, dopt);
  ProjectedMeasure pm = project(m, 512);
  std::vector<double> h = birkhoff_histogram(lg, 0.1234, 10000000, 512, 5);
  double l1 = histogram_l1(pm.histogram, h);
  o.detail << t.atoms.size() << " atoms, L1 to 1e7-step histogram (512 bins) " << l1;
  o.require(l1 <= 0.02, "L1 within 2%");
}

void criterion8(Outcome& o) {
  MapSystem f = neutral_circle_map();
  PeriodicOrbit po = find_periodic_repeller(f, {0.0, 1.0}, 2, {}, 2);
  const std::size_t ell = 11;
  TimeSource s;
  s.kind = TimeKind::Hyperbolic;
  s.ell = ell;
  s.hyp.sigma = std::pow(1.0 / 64.0, 1.0 / 11.0);
  s.hyp.b = default_b(f.beta());
  s.delta = s.hyp.delta = 0.05;
  s.alpha = ZoomingContraction::power(std::pow(1.0 / 8.0, 1.0 / 11.0));
  double p = *std::min_element(po.points.begin(), po.points.end());
  NestedBall ball = build_nested_ball(f, p, 0.01, s);
  TowerOptions opt;
  opt.unresolved_target = 1e-6;
  opt.max_gap_seeds = 50000;
  InducedMarkovMap t = build_local_tower(f, ball, s, 330, opt);
  BernoulliMeasure nu = bernoulli_tower_measure(t, exponential_weights(t, 0.01));
  TowerExponent ex = bernoulli_exponent(nu, 2000, 20, 3);
  double per_block = ex.per_step * static_cast<double>(ell);
  LyapunovEstimate e = lyapunov(f, [](SplitMix64& r) { return r.open_uniform(); }, 1000000, 12, 8);
  o.detail << "period " << po.period << " multiplier " << po.multiplier << "; " << t.atoms.size()
           << " atoms, per-block log expansion " << per_block << "; Lebesgue e_1e6 " << e.mean << " +- "
           << e.stderr_;
  o.require(po.period == 2 && std::fabs(po.multiplier) > 1.0, "repeller");
  o.require(per_block >= 8.0 * 0.95, "per-block expansion");
  o.require(std::fabs(e.mean) < 0.01, "Lebesgue Lyapunov estimate below 0.01");
}

void criterion9(Outcome& o) {
  InducedMarkovMap t = doubling_local();
  const double z = 0.1;
  BernoulliMeasure nu = bernoulli_tower_measure(t, exponential_weights(t, z));
  Observable bump = observable_by_name("bump");
  CorrelationSeries cs = correlation(bernoulli_sampler(nu), bump, bump, 32, 200000, 11);
  const Fit* ex = nullptr;
  for (const Fit& fit : cs.fits)
    if (fit.kind == "exponential") ex = &fit;
  TailFit tf = fit_tail(nu, 2, 30);
  double rate = std::pow(z, 1.0 / static_cast<double>(t.src.ell));
  double err = std::fabs(tf.rate / rate - 1.0);
  o.detail << "exponential fit R2 " << (ex ? ex->r2 : 0.0) << " slope " << (ex ? ex->slope : 0.0)
           << "; tail rate " << tf.rate << " vs " << rate << " (rel err " << err << ")";
  o.require(ex && ex->ok() && ex->r2 > 0.9, "exponential fit");
  o.require(err <= 0.1, "tail rate");
}

void criterion10(Outcome& o) {
  MapSystem lg = logistic_map();
  SplitMix64 rng(5);
  std::size_t violations = 0, prefixes = 0, orbits = 0;
  double worst = 0.0;
  while (orbits < 100) {
    double x = rng.open_uniform();
    OrbitRecord orb = iterate_until_critical(lg, x, 2000);
    if (orb.truncated) continue;
    TransportReport rep = check_transport_inequality(lg, orb, 2, 1e-4, 4.0);
    ++orbits;
    violations += rep.violations;
    prefixes += rep.prefixes_checked;
    worst = std::max(worst, rep.max_ratio);
  }
  o.detail << orbits << " orbits, " << prefixes << " prefixes, " << violations << " violations, max ratio "
           << worst;
  o.require(violations == 0, "transport inequality");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"doubling exactness", criterion1},          {"global tower finiteness and expansion", criterion2},
      {"nested-ball guarantee", criterion3},       {"tail inclusion", criterion4},
      {"polynomial shift metric", criterion5},     {"liftability and counting", criterion6},
      {"logistic density", criterion7},            {"neutral fixed point dichotomy", criterion8},
      {"correlation decay", criterion9},           {"transport inequality", criterion10},
  };
  const double budget[] = {30, 120, 0, 300, 0, 0, 600, 0, 0, 0};  // seconds, 0: none

  std::vector<std::size_t> which;
  for (int i = 1; i < argc; ++i) {
    long k = std::strtol(argv[i], nullptr, 10);
    if (k < 1 || k > 10) {
      std::fprintf(stderr, "usage: acceptance [criterion 1-10 ...]\n");
      return 2;
    }
    which.push_back(static_cast<std::size_t>(k));
  }
  if (which.empty())
    for (std::size_t k = 1; k <= 10; ++k) which.push_back(k);

  int failures = 0;
  for (std::size_t k : which) {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[k - 1].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << "]";
    }
    double sec = seconds_since(t0);
    if (budget[k - 1] > 0 && sec > budget[k - 1]) {
      o.pass = false;
      o.detail << " [failed: runtime above " << budget[k - 1] << " s]";
    }
    std::printf("%s criterion %zu (%s): %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", k, criteria[k - 1].first.c_str(),
                o.detail.str().c_str(), sec);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
