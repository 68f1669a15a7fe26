#include "nue/statistics.hpp"

#include <algorithm>
#include <cmath>

#include "nue/errors.hpp"
#include "nue/measures.hpp"
#include "nue/parallel.hpp"

namespace nue {

namespace {

constexpr std::size_t kBlocks = 256;

// Runs samples [0, mc) in kBlocks fixed blocks; block b sees samples
// b*mc/kBlocks .. and owns its accumulator, so merging in block order gives
// the same sums for any thread count.
template <class Acc, class Body>
std::vector<Acc> blocked(std::size_t mc, std::uint64_t seed, const Acc& init, Body body) {
  std::size_t nb = std::min(kBlocks, mc);
  std::vector<Acc> acc(nb, init);
  SplitMix64 root(seed);
  parallel_for(nb, [&](std::size_t b) {
    for (std::size_t i = mc * b / nb; i < mc * (b + 1) / nb; ++i) {
      SplitMix64 rng = root.split(i);
      body(acc[b], rng);
    }
  });
  return acc;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

Observable observable_by_name(const std::string& name, const MapSystem* map) {
  const double tau = 2.0 * M_PI;
  if (name == "cos2pi") return {name, [tau](double x) { return std::cos(tau * x); }, 1.0};
  if (name == "sin2pi") return {name, [tau](double x) { return std::sin(tau * x); }, 1.0};
  if (name == "bump")
    return {name, [](double x) { return std::max(0.0, 1.0 - 4.0 * std::fabs(x - 0.5)); }, 1.0};
  if (name == "const") return {name, [](double) { return 1.0; }, 1.0};
  if (name == "x") return {name, [](double x) { return x; }, 1.0};
  if (name == "coboundary") {
    if (!map) throw Error(ErrorKind::ConfigError, "observable coboundary needs a map");
    MapSystem f = *map;
    return {name, [f, tau](double x) { return std::cos(tau * f.apply(x)) - std::cos(tau * x); }, 2.0};
  }
  throw Error(ErrorKind::ConfigError, "unknown observable '" + name + "'");
}

OrbitSampler lebesgue_sampler(const MapSystem& map, std::size_t burn_in) {
  return [map, burn_in](SplitMix64& rng, std::size_t n, std::vector<double>& orbit) {
    double x = rng.open_uniform();
    for (std::size_t i = 0; i < burn_in; ++i) x = perturbed_step(map, x, rng);
    orbit.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
      orbit[j] = x;
      if (j < n) x = perturbed_step(map, x, rng);
    }
  };
}

OrbitSampler bernoulli_sampler(const BernoulliMeasure& m) {
  const BernoulliMeasure* mp = &m;
  return [mp](SplitMix64& rng, std::size_t n, std::vector<double>& orbit) {
    orbit = sample_tower_orbit(*mp, rng, n, true).orbit;
  };
}

Fit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  Fit f;
  f.points = x.size();
  if (x.size() < 2 || x.size() != y.size()) return f;
  double n = static_cast<double>(x.size()), mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

void fit_decay(CorrelationSeries& s) {
  std::size_t n_max = s.values.size() - 1;
  std::vector<double> ns, logs;
  for (std::size_t n = std::max<std::size_t>(1, n_max / 4); n <= n_max; ++n) {
    double c = std::fabs(s.values[n]);
    if (c > 2.0 * s.stderr_[n] && c > 0.0) {
      ns.push_back(static_cast<double>(n));
      logs.push_back(std::log(c));
    }
  }
  s.fits.clear();
  Fit e = least_squares(ns, logs);
  e.kind = "exponential";
  s.fits.push_back(e);
  std::vector<double> logn(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) logn[i] = std::log(ns[i]);
  Fit p = least_squares(logn, logs);
  p.kind = "polynomial";
  s.fits.push_back(p);
  Fit best_st;
  best_st.kind = "stretched";
  for (int k = 1; k <= 20; ++k) {
    double g = 0.05 * k;
    std::vector<double> ng(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) ng[i] = std::pow(ns[i], g);
    Fit f = least_squares(ng, logs);
    if (f.points >= 3 && (best_st.points < 3 || f.r2 > best_st.r2)) {
      best_st = f;
      best_st.gamma = g;
      best_st.kind = "stretched";
    }
  }
  s.fits.push_back(best_st);
  s.best = Fit{};
  for (const Fit& f : s.fits)
    if (f.ok() && (!s.best.ok() || f.r2 > s.best.r2)) s.best = f;
}

CorrelationSeries correlation(const OrbitSampler& sampler, const Observable& phi, const Observable& psi,
                              std::size_t n_max, std::size_t mc, std::uint64_t seed) {
  if (mc < 2) throw Error(ErrorKind::InvalidScenario, "correlation needs mc >= 2");
  struct Acc {
    double sphi = 0.0;
    std::vector<double> spsi, sprod, sprod2;
  };
  Acc init;
  init.spsi.assign(n_max + 1, 0.0);
  init.sprod.assign(n_max + 1, 0.0);
  init.sprod2.assign(n_max + 1, 0.0);
  auto acc = blocked(mc, seed, init, [&](Acc& a, SplitMix64& rng) {
    std::vector<double> orbit;
    sampler(rng, n_max, orbit);
    double p = phi.fn(orbit[0]);
    a.sphi += p;
    for (std::size_t n = 0; n <= n_max; ++n) {
      double q = psi.fn(orbit[n]);
      a.spsi[n] += q;
      a.sprod[n] += p * q;
      a.sprod2[n] += p * q * p * q;
    }
  });
  Acc tot = init;
  for (const Acc& a : acc) {
    tot.sphi += a.sphi;
    for (std::size_t n = 0; n <= n_max; ++n) {
      tot.spsi[n] += a.spsi[n];
      tot.sprod[n] += a.sprod[n];
      tot.sprod2[n] += a.sprod2[n];
    }
  }
  CorrelationSeries s;
  s.phi = phi.name;
  s.psi = psi.name;
  s.mc = mc;
  double M = static_cast<double>(mc);
  double mphi = tot.sphi / M;
  s.values.resize(n_max + 1);
  s.stderr_.resize(n_max + 1);
  for (std::size_t n = 0; n <= n_max; ++n) {
    double mprod = tot.sprod[n] / M;
    s.values[n] = mprod - mphi * tot.spsi[n] / M;
    double var = std::max(0.0, tot.sprod2[n] / M - mprod * mprod);
    s.stderr_[n] = std::sqrt(var / (M - 1.0));
  }
  fit_decay(s);
  return s;
}

CltReport clt_diagnostic(const OrbitSampler& sampler, const Observable& phi, std::size_t n, std::size_t mc,
                         std::uint64_t seed) {
  if (n == 0 || mc < 2) throw Error(ErrorKind::InvalidScenario, "clt needs n >= 1 and mc >= 2");
  // per-sample Birkhoff sums; the mean is pooled afterwards
  std::vector<double> sums(mc, 0.0);
  SplitMix64 root(seed);
  parallel_for(mc, [&](std::size_t i) {
    SplitMix64 rng = root.split(i);
    std::vector<double> orbit;
    sampler(rng, n - 1, orbit);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += phi.fn(orbit[j]);
    sums[i] = s;
  });
  CltReport r;
  r.n = n;
  r.mc = mc;
  double tot = 0.0;
  for (double s : sums) tot += s;
  r.mean = tot / (static_cast<double>(mc) * static_cast<double>(n));
  std::vector<double> z(mc);
  double rn = std::sqrt(static_cast<double>(n)), v = 0.0;
  for (std::size_t i = 0; i < mc; ++i) {
    z[i] = (sums[i] - r.mean * static_cast<double>(n)) / rn;
    v += z[i] * z[i];
  }
  r.variance = v / static_cast<double>(mc - 1);
  if (r.variance < 1e-12) {
    r.degenerate = true;
    return r;
  }
  std::sort(z.begin(), z.end());
  double sd = std::sqrt(r.variance), M = static_cast<double>(mc);
  for (std::size_t i = 0; i < mc; ++i) {
    double F = normal_cdf(z[i] / sd);
    r.ks = std::max({r.ks, std::fabs(F - static_cast<double>(i) / M), std::fabs(F - static_cast<double>(i + 1) / M)});
  }
  return r;
}

}  // namespace nue
