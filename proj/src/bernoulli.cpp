#include "nue/bernoulli.hpp"

#include <algorithm>
#include <cmath>

#include "nue/errors.hpp"
#include "nue/parallel.hpp"
#include "nue/statistics.hpp"

namespace nue {

namespace {

double lift_near(bool circle, double x, double ref) { return circle ? x + std::round(ref - x) : x; }

std::size_t draw_from(const std::vector<double>& cdf, SplitMix64& rng) {
  double u = rng.uniform() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

// pull y back through atom a: all levels f^j(F_a^{-1} y), j = 0..R, as lifts
std::vector<double> pull_back_levels(const BernoulliMeasure& m, std::size_t a, double y) {
  const InducedMarkovMap& t = *m.tower;
  const MapSystem& map = t.map;
  const TowerAtom& at = t.atoms[a];
  const std::vector<double>& pts = m.charts[a];
  OrbitRecord orbit;
  orbit.points = pts;
  double v = lift_near(map.circle(), y, pts[at.R]) - pts[at.R];
  auto levels = pull_back_offsets(map, orbit, at.R, {v});
  if (levels.empty()) throw Error(ErrorKind::BranchEscape, "pull-back through atom " + std::to_string(a) + " failed");
  std::vector<double> out(at.R + 1);
  for (std::size_t j = 0; j <= at.R; ++j) out[j] = pts[j] + levels[j][0];
  out[0] = at.base + levels[0][0];
  return out;
}

}  // namespace

std::size_t BernoulliMeasure::draw(SplitMix64& rng) const { return draw_from(cdf, rng); }
std::size_t BernoulliMeasure::draw_biased(SplitMix64& rng) const { return draw_from(biased_cdf, rng); }

double BernoulliMeasure::tail(std::size_t n) const {
  double s = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a)
    if (tower->atoms[a].R > n) s += weights[a];
  return s;
}

double BernoulliMeasure::cylinder_mass(const std::vector<std::size_t>& word) const {
  double p = 1.0;
  for (std::size_t a : word) p *= weights.at(a);
  return p;
}

BernoulliMeasure bernoulli_tower_measure(const InducedMarkovMap& tower, const std::vector<double>& weights) {
  if (tower.kind != TowerKind::Local || tower.images.size() != 1)
    throw Error(ErrorKind::InvalidScenario, "Bernoulli measures need a local tower");
  if (weights.size() != tower.atoms.size()) throw Error(ErrorKind::InvalidScenario, "one weight per atom expected");
  BernoulliMeasure m;
  m.tower = &tower;
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorKind::InvalidScenario, "weights must be positive");
    m.discovered_mass += w;
  }
  if (m.discovered_mass < 1.0 - 1e-3)
    throw Error(ErrorKind::WeightMass, "weights over the discovered atoms sum to " + std::to_string(m.discovered_mass));
  m.weights = weights;
  double acc = 0.0, bacc = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    m.weights[a] /= m.discovered_mass;
    m.mean_R += m.weights[a] * static_cast<double>(tower.atoms[a].R);
  }
  for (std::size_t a = 0; a < weights.size(); ++a) {
    acc += m.weights[a];
    bacc += m.weights[a] * static_cast<double>(tower.atoms[a].R);
    m.cdf.push_back(acc);
    m.biased_cdf.push_back(bacc);
  }
  m.charts.resize(tower.atoms.size());
  parallel_for(tower.atoms.size(), [&](std::size_t a) { m.charts[a] = tower.base_orbit(a).points; });
  return m;
}

std::vector<double> exponential_weights(const InducedMarkovMap& tower, double z) {
  if (!(z > 0.0 && z < 1.0)) throw Error(ErrorKind::InvalidScenario, "z must lie in (0,1)");
  double ell = static_cast<double>(std::max<std::size_t>(1, tower.src.ell));
  std::vector<double> w(tower.atoms.size());
  double s = 0.0;
  for (std::size_t a = 0; a < w.size(); ++a) {
    w[a] = std::pow(z, static_cast<double>(tower.atoms[a].R) / ell);
    s += w[a];
  }
  for (double& x : w) x /= s;
  return w;
}

TowerSample sample_tower_orbit(const BernoulliMeasure& m, SplitMix64& rng, std::size_t n, bool stationary,
                               std::size_t min_atoms) {
  const InducedMarkovMap& t = *m.tower;
  const MapSystem& map = t.map;
  const Interval& img = t.images[0];
  TowerSample s;
  std::size_t first = stationary ? m.draw_biased(rng) : m.draw(rng);
  s.atoms.push_back(first);
  if (stationary) s.offset = rng.below(t.atoms[first].R);
  // enough atoms to cover offset + n steps, then more until the cylinder is
  // far below rounding
  std::size_t covered = t.atoms[first].R;
  auto needed = [&] { return covered < s.offset + n + 1 || s.atoms.size() < min_atoms; };
  double pin = 0.0;
  while (needed() || pin < m.pin_log_jacobian) {
    bool tail = !needed();
    std::size_t a = m.draw(rng);
    s.atoms.push_back(a);
    covered += t.atoms[a].R;
    if (tail) pin += std::log(img.length() / t.atoms[a].length());
  }
  std::size_t K = s.atoms.size();
  // F^K(x) uniform in the image, then nested pull-back
  std::vector<std::vector<double>> levels(K);
  double y = img.lo + img.length() * rng.open_uniform();
  s.returns.assign(K + 1, 0.0);
  s.returns[K] = y;
  for (std::size_t k = K; k-- > 0;) {
    levels[k] = pull_back_levels(m, s.atoms[k], y);
    y = lift_near(map.circle(), levels[k][0], 0.5 * (img.lo + img.hi));
    s.returns[k] = y;
  }
  s.orbit.reserve(n + 1);
  s.log_deriv.reserve(n);
  std::size_t step = 0;
  for (std::size_t k = 0; k < K && s.orbit.size() < n + 1; ++k) {
    std::size_t R = t.atoms[s.atoms[k]].R;
    for (std::size_t j = 0; j < R && s.orbit.size() < n + 1; ++j, ++step) {
      if (step < s.offset) continue;
      double p = map.reduce(j == 0 ? s.returns[k] : levels[k][j]);
      s.orbit.push_back(p);
      if (s.orbit.size() <= n) s.log_deriv.push_back(std::log(std::fabs(map.derivative(p))));
    }
  }
  return s;
}

TowerExponent bernoulli_exponent(const BernoulliMeasure& m, std::size_t samples, std::size_t returns_per_sample,
                                 std::uint64_t seed) {
  if (samples == 0 || returns_per_sample == 0) throw Error(ErrorKind::InvalidScenario, "empty exponent estimate");
  const InducedMarkovMap& t = *m.tower;
  std::vector<double> lj(samples, 0.0), steps(samples, 0.0);
  SplitMix64 root(seed);
  parallel_for(samples, [&](std::size_t i) {
    SplitMix64 rng = root.split(i);
    // a nu-typical F-orbit: returns_per_sample atoms plus pinning atoms
    TowerSample s = sample_tower_orbit(m, rng, 0, false, returns_per_sample);
    for (std::size_t k = 0; k < returns_per_sample; ++k) {
      std::size_t a = s.atoms[k];
      lj[i] += t.log_jacobian(a, s.returns[k]);
      steps[i] += static_cast<double>(t.atoms[a].R);
    }
  });
  TowerExponent e;
  e.returns = samples * returns_per_sample;
  double L = 0.0, S = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    L += lj[i];
    S += steps[i];
  }
  e.log_jacobian_per_return = L / static_cast<double>(e.returns);
  e.steps_per_return = S / static_cast<double>(e.returns);
  e.per_step = L / S;
  // ratio estimator spread
  double q = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    double r = lj[i] - e.per_step * steps[i];
    q += r * r;
  }
  double mean_steps = S / static_cast<double>(samples);
  if (samples > 1) e.stderr_ = std::sqrt(q / static_cast<double>(samples - 1) / static_cast<double>(samples)) / mean_steps;
  return e;
}

TailFit fit_tail(const BernoulliMeasure& m, std::size_t n_lo, std::size_t n_hi, std::size_t step) {
  std::vector<double> xs, ys;
  for (std::size_t n = n_lo; n <= n_hi; n += std::max<std::size_t>(1, step)) {
    double v = m.tail(n);
    if (v <= 0.0) break;
    xs.push_back(static_cast<double>(n));
    ys.push_back(std::log(v));
  }
  TailFit f;
  f.n_lo = n_lo;
  f.n_hi = xs.empty() ? n_lo : static_cast<std::size_t>(xs.back());
  Fit ls = least_squares(xs, ys);
  f.rate = std::exp(ls.slope);
  f.r2 = ls.r2;
  return f;
}

}  // namespace nue
