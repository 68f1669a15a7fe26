#include "nue/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "nue/errors.hpp"
#include "nue/parallel.hpp"

namespace nue {

namespace {

double lift_near(bool circle, double x, double ref) { return circle ? x + std::round(ref - x) : x; }

// Preimages of the grid nodes under one branch of F, with the weights
// 1/J F there, plus the f-images of those preimages up to R - 1.
struct BranchGrid {
  std::vector<double> x;               // F^{-1}(y_i), lifted near the image
  std::vector<double> w;               // 1 / J_mu F at x
  std::vector<std::vector<double>> f;  // f^j(x_i) as lifts, j < R (filled on request)
};

BranchGrid branch_grid(const InducedMarkovMap& t, std::size_t a, const std::vector<double>& nodes,
                       const ReferenceMeasure& mu, bool keep_levels) {
  const TowerAtom& at = t.atoms[a];
  const MapSystem& map = t.map;
  OrbitRecord orbit = t.base_orbit(a);
  double yr = orbit.points[at.R];
  std::vector<double> v(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = lift_near(map.circle(), nodes[i], yr) - yr;
  auto levels = pull_back_offsets(map, orbit, at.R, v);
  if (levels.empty()) throw Error(ErrorKind::BranchEscape, "grid node outside the image of atom " + std::to_string(a));
  BranchGrid g;
  const Interval& img = t.images[at.image];
  double mid = 0.5 * (img.lo + img.hi);
  g.x.resize(nodes.size());
  g.w.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double lj = 0.0;
    for (std::size_t j = 0; j < at.R; ++j) {
      double p = map.reduce(orbit.points[j] + levels[j][i]);
      lj += mu.log_jacobian ? mu.log_jacobian(map, p) : std::log(std::fabs(map.derivative(p)));
    }
    g.x[i] = lift_near(map.circle(), at.base + levels[0][i], mid);
    g.w[i] = std::exp(-lj);
  }
  if (keep_levels) {
    g.f.resize(at.R);
    for (std::size_t j = 0; j < at.R; ++j) {
      g.f[j].resize(nodes.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) g.f[j][i] = orbit.points[j] + levels[j][i];
    }
  }
  return g;
}

double interp(const std::vector<double>& h, double lo, double cell, double x) {
  double s = (x - lo) / cell;
  double n = static_cast<double>(h.size() - 1);
  if (s <= 0.0) return h.front();
  if (s >= n) return h.back();
  auto k = static_cast<std::size_t>(s);
  double t = s - static_cast<double>(k);
  return h[k] + t * (h[k + 1] - h[k]);
}

std::vector<double> grid_nodes(const Interval& d, std::size_t cells) {
  std::vector<double> y(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    y[i] = d.lo + d.length() * static_cast<double>(i) / static_cast<double>(cells);
  y.back() = d.hi;
  return y;
}

// masses of the image cells [y_i, y_{i+1}] pulled back through one branch
std::vector<double> segment_masses(const BranchGrid& g, const std::vector<double>& h, const Interval& d,
                                   double cell) {
  std::vector<double> m(g.x.size() - 1);
  for (std::size_t i = 0; i + 1 < g.x.size(); ++i) {
    double a = g.w[i] * interp(h, d.lo, cell, g.x[i]);
    double b = g.w[i + 1] * interp(h, d.lo, cell, g.x[i + 1]);
    m[i] = 0.5 * (a + b) * cell / d.length();
  }
  return m;
}

}  // namespace

double TowerMeasure::value(double x) const {
  if (density.empty() || x < domain.lo || x > domain.hi) return 0.0;
  return interp(density, domain.lo, cell(), x);
}

TowerMeasure invariant_density(const InducedMarkovMap& tower, const ReferenceMeasure& mu, const DensityOptions& opt) {
  if (tower.kind != TowerKind::Local || tower.images.size() != 1)
    throw Error(ErrorKind::HypothesisFail, "invariant_density needs a local tower with one image");
  if (tower.atoms.empty()) throw Error(ErrorKind::HypothesisFail, "tower has no atoms");
  if (opt.grid < 2) throw Error(ErrorKind::InvalidScenario, "grid needs at least two cells");
  std::size_t A = tower.atoms.size(), N = opt.grid;
  if (A * (N + 1) > opt.max_entries)
    throw Error(ErrorKind::CapExceeded, std::to_string(A) + " atoms on " + std::to_string(N) + " cells exceed the cap");

  TowerMeasure m;
  m.tower = &tower;
  m.reference = mu.name;
  m.domain = tower.images[0];
  const Interval& d = m.domain;
  std::vector<double> nodes = grid_nodes(d, N);
  double cell = d.length() / static_cast<double>(N);

  std::vector<BranchGrid> grids(A);
  parallel_for(A, [&](std::size_t a) { grids[a] = branch_grid(tower, a, nodes, mu, false); });

  // Lipschitz constant of log w in the image coordinate, over all branches
  double K = 0.0, wmax = 0.0;
  for (const auto& g : grids) {
    for (std::size_t i = 0; i + 1 < g.w.size(); ++i)
      K = std::max(K, std::fabs(std::log(g.w[i + 1]) - std::log(g.w[i])) / cell);
    for (double w : g.w) wmax = std::max(wmax, w);
  }
  if (!(wmax < 1.0)) throw Error(ErrorKind::DistortionUnbounded, "some branch of F does not expand");
  double lambda = 1.0 / wmax;
  m.distortion_bound = std::exp(K * lambda / (lambda - 1.0) * d.length());

  auto integral = [&](const std::vector<double>& h) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < h.size(); ++i) s += 0.5 * (h[i] + h[i + 1]);
    return s / static_cast<double>(N);
  };

  std::vector<double> h(N + 1, 1.0), g(N + 1);
  bool done = false;
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    std::fill(g.begin(), g.end(), 0.0);
    for (const auto& bg : grids)
      for (std::size_t i = 0; i <= N; ++i) g[i] += bg.w[i] * interp(h, d.lo, cell, bg.x[i]);
    double mass = integral(g);
    if (!(mass > 0.0)) throw Error(ErrorKind::NoConvergence, "transfer operator lost all mass");
    double diff = 0.0;
    for (std::size_t i = 0; i <= N; ++i) {
      g[i] /= mass;
      double e = std::fabs(g[i] - h[i]);
      diff += (i == 0 || i == N) ? 0.5 * e : e;
    }
    diff /= static_cast<double>(N);
    h.swap(g);
    m.iterations = it;
    m.residual = diff;
    if (diff < opt.tol) {
      done = true;
      break;
    }
  }
  if (!done)
    throw Error(ErrorKind::NoConvergence, "L1 change " + std::to_string(m.residual) + " after " +
                                              std::to_string(opt.max_iter) + " sweeps");
  m.density = h;

  double lo = *std::min_element(h.begin(), h.end()), hi = *std::max_element(h.begin(), h.end());
  if (!(lo > 0.0) || !std::isfinite(hi)) throw Error(ErrorKind::DistortionUnbounded, "density not bounded away from 0");
  m.sup_inf_ratio = hi / lo;
  if (m.sup_inf_ratio > m.distortion_bound * (1.0 + 1e-6))
    throw Error(ErrorKind::DistortionUnbounded, "density ratio " + std::to_string(m.sup_inf_ratio) +
                                                    " above the distortion bound " +
                                                    std::to_string(m.distortion_bound));

  m.atom_mass.resize(A);
  double raw = 0.0;
  for (std::size_t a = 0; a < A; ++a) {
    auto seg = segment_masses(grids[a], h, d, cell);
    double s = 0.0;
    for (double x : seg) s += x;
    m.atom_mass[a] = s;
    raw += s;
  }
  m.defect = 1.0 - raw;
  for (std::size_t a = 0; a < A; ++a) {
    m.atom_mass[a] /= raw;
    m.mean_R += m.atom_mass[a] * static_cast<double>(tower.atoms[a].R);
  }
  return m;
}

namespace {

// Spreads `mass` uniformly over the segment [a, b] of [0,1] (or the circle)
// into density bins; also accumulates the first two moments.
struct Depositor {
  std::vector<double>& hist;
  bool circle;
  double m1 = 0.0, m2 = 0.0;

  void piece(double a, double b, double mass) {
    std::size_t n = hist.size();
    double fn = static_cast<double>(n);
    m1 += mass * 0.5 * (a + b);
    m2 += mass * (a * a + a * b + b * b) / 3.0;
    double len = b - a;
    auto clamp_bin = [&](double x) {
      auto k = static_cast<std::ptrdiff_t>(std::floor(x * fn));
      return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(n) - 1));
    };
    std::size_t ka = clamp_bin(a), kb = clamp_bin(b);
    if (ka == kb || len <= 0.0) {
      hist[ka] += mass;
      return;
    }
    for (std::size_t k = ka; k <= kb; ++k) {
      double lo = std::max(a, static_cast<double>(k) / fn), hi = std::min(b, static_cast<double>(k + 1) / fn);
      if (hi > lo) hist[k] += mass * (hi - lo) / len;
    }
  }

  void add(double a, double b, double mass) {
    if (b < a) std::swap(a, b);
    if (circle) {
      double k = std::floor(a);
      a -= k;
      b -= k;
      if (b > 1.0) {
        double share = (1.0 - a) / (b - a);
        piece(a, 1.0, mass * share);
        piece(0.0, b - 1.0, mass * (1.0 - share));
        return;
      }
    }
    piece(std::clamp(a, 0.0, 1.0), std::clamp(b, 0.0, 1.0), mass);
  }
};

}  // namespace

ProjectedMeasure project(const TowerMeasure& m, std::size_t bins) {
  if (!m.tower || m.density.empty()) throw Error(ErrorKind::InvalidScenario, "empty tower measure");
  if (m.reference != "lebesgue") throw Error(ErrorKind::HypothesisFail, "projection needs a Lebesgue reference");
  if (!std::isfinite(m.mean_R) || m.mean_R <= 0.0) throw Error(ErrorKind::InfiniteMeanReturn, "mean return not finite");
  const InducedMarkovMap& t = *m.tower;
  const Interval& d = m.domain;
  std::size_t N = m.density.size() - 1;
  double cell = m.cell();
  std::vector<double> nodes = grid_nodes(d, N);
  // segment masses from the image side are renormalized like atom_mass
  double raw = 1.0 - m.defect;

  ProjectedMeasure out;
  out.histogram.assign(bins, 0.0);
  Depositor dep{out.histogram, t.map.circle()};
  constexpr int kTests = 6;
  double drift[kTests] = {};
  auto test = [](int k, double x) {
    double a = 2.0 * M_PI * static_cast<double>(k / 2 + 1) * x;
    return (k % 2 == 0) ? std::cos(a) : std::sin(a);
  };
  ReferenceMeasure leb;
  for (std::size_t a = 0; a < t.atoms.size(); ++a) {
    BranchGrid g = branch_grid(t, a, nodes, leb, true);
    auto seg = segment_masses(g, m.density, d, cell);
    std::size_t R = t.atoms[a].R;
    for (std::size_t i = 0; i < N; ++i) {
      double w = seg[i] / raw;
      for (std::size_t j = 0; j < R; ++j) dep.add(g.f[j][i], g.f[j][i + 1], w);
      out.total_mass += w * static_cast<double>(R);
      double x0 = 0.5 * (g.x[i] + g.x[i + 1]);
      double y0 = 0.5 * (nodes[i] + nodes[i + 1]);
      for (int k = 0; k < kTests; ++k) {
        drift[k] += w * (test(k, y0) - test(k, x0));
      }
    }
  }
  out.gamma = out.total_mass;
  double fb = static_cast<double>(bins);
  for (double& v : out.histogram) v *= fb / out.gamma;
  out.moment1 = dep.m1 / out.gamma;
  out.moment2 = dep.m2 / out.gamma;
  for (int k = 0; k < kTests; ++k) out.invariance_residual = std::max(out.invariance_residual, std::fabs(drift[k]) / out.gamma);
  return out;
}

double histogram_l1(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw Error(ErrorKind::InvalidScenario, "histograms differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double perturbed_step(const MapSystem& map, double x, SplitMix64& rng) {
  // raw branch value: apply() snaps points within 1e-13 of 0 onto the fixed
  // point, which would trap the orbit there
  double y = map.reduce(map.raw(map.branch_of(x), x));
  y += (rng.uniform() - 0.5) * 0x1.0p-50;
  if (map.circle()) return map.reduce(y);
  if (y < 0.0) y = -y;
  if (y > 1.0) y = 2.0 - y;
  return y;
}

std::vector<double> birkhoff_histogram(const MapSystem& map, double x0, std::size_t n, std::size_t bins,
                                       std::uint64_t seed, std::size_t burn_in) {
  SplitMix64 rng(seed);
  double x = x0;
  for (std::size_t i = 0; i < burn_in; ++i) x = perturbed_step(map, x, rng);
  std::vector<double> h(bins, 0.0);
  double fb = static_cast<double>(bins);
  for (std::size_t i = 0; i < n; ++i) {
    auto k = static_cast<std::size_t>(x * fb);
    h[std::min(k, bins - 1)] += 1.0;
    x = perturbed_step(map, x, rng);
  }
  for (double& v : h) v *= fb / static_cast<double>(n);
  return h;
}

LiftabilityReport liftability_frequency(const InducedMarkovMap& tower, double x, std::size_t n_max) {
  const MapSystem& map = tower.map;
  LiftabilityReport rep;
  std::vector<double> returns{map.reduce(x)};  // F^k(x)
  std::vector<std::size_t> times{0};           // R(x) + ... + R(F^{k-1} x)
  std::vector<double> f_orbit;                 // f^j(x), scanned independently below
  double z = x;
  while (times.back() < n_max) {
    std::size_t a = tower.atom_of(z);
    if (a == npos) {
      rep.escaped = true;
      break;
    }
    const TowerAtom& at = tower.atoms[a];
    OrbitRecord orbit = tower.base_orbit(a);
    double u = z - at.base;
    if (map.circle()) u -= std::round(u);
    for (std::size_t j = 0; j < at.R; ++j) {
      f_orbit.push_back(map.reduce(orbit.points[j] + u));
      u = map.forward_offset(orbit.points[j], u);
    }
    z = tower.induced(a, z);
    returns.push_back(map.reduce(z));
    times.push_back(times.back() + at.R);
  }
  rep.n_reached = std::min(n_max, times.back());
  if (rep.escaped) rep.n_reached = std::min(n_max, times.back());

  // lhs: is f^j(x) one of the F-orbit points?
  std::vector<double> sorted = returns;
  std::sort(sorted.begin(), sorted.end());
  auto member = [&](double y) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), y - 1e-12);
    return it != sorted.end() && std::fabs(*it - y) <= 1e-12;
  };
  rep.lhs.assign(rep.n_reached + 1, 0);
  rep.rhs.assign(rep.n_reached + 1, 0);
  for (std::size_t n = 1; n <= rep.n_reached; ++n) rep.lhs[n] = rep.lhs[n - 1] + (member(f_orbit[n - 1]) ? 1 : 0);
  // rhs: 1 + #{j >= 0 : times[j + 1] < n}
  std::size_t k = 0;
  for (std::size_t n = 1; n <= rep.n_reached; ++n) {
    while (k + 1 < times.size() && times[k + 1] < n) ++k;
    rep.rhs[n] = 1 + k;
  }
  for (std::size_t n = 0; n <= rep.n_reached; ++n) {
    if (rep.lhs[n] != rep.rhs[n]) {
      rep.identity_holds = false;
      rep.first_mismatch = n;
      break;
    }
  }
  if (rep.n_reached > 0)
    rep.frequency = static_cast<double>(rep.lhs[rep.n_reached]) / static_cast<double>(rep.n_reached);
  for (std::size_t n = 1; n <= rep.n_reached; n *= 2)
    rep.on_grid.push_back({n, static_cast<double>(rep.lhs[n]) / static_cast<double>(n)});
  return rep;
}

namespace {

// T-orbit of x = orbit index 0 under i -> i + g[i], as long as it stays in B
std::vector<std::size_t> t_orbit(const CountingScenario& s) {
  std::vector<std::size_t> idx{0};
  while (true) {
    std::size_t i = idx.back();
    if (i >= s.horizon() || !s.B[i] || s.g[i] == 0) break;
    std::size_t next = i + s.g[i];
    if (next >= s.horizon()) break;
    idx.push_back(next);
  }
  return idx;
}

}  // namespace

void validate_scenario(const CountingScenario& s, std::size_t n_max) {
  std::size_t H = s.horizon();
  if (s.G.size() != H || s.g.size() != H) throw Error(ErrorKind::InvalidScenario, "scenario arrays differ in length");
  if (H == 0 || !s.B[0]) throw Error(ErrorKind::InvalidScenario, "x must lie in B");
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t n = 1; n < s.G[i].size(); ++n) {
      if (!s.G[i][n]) continue;
      for (std::size_t j = 0; j < n && i + j < H; ++j)
        if (n - j >= s.G[i + j].size() || !s.G[i + j][n - j])
          throw Error(ErrorKind::InvalidScenario, "f^" + std::to_string(j) + " of a point of G_" + std::to_string(n) +
                                                      " (orbit index " + std::to_string(i) + ") misses G_" +
                                                      std::to_string(n - j));
    }
  }
  for (std::size_t i : t_orbit(s)) {
    if (!s.B[i]) continue;
    if (s.g[i] < 1) throw Error(ErrorKind::InvalidScenario, "g < 1 at orbit index " + std::to_string(i));
    if (i + s.g[i] < H && !s.B[i + s.g[i]])
      throw Error(ErrorKind::InvalidScenario, "T leaves B at orbit index " + std::to_string(i));
    for (std::size_t j = 1; j < s.g[i] && j < s.G[i].size() && i + j < H; ++j)
      if (s.G[i][j] && s.B[i + j])
        throw Error(ErrorKind::InvalidScenario, "g exceeds the first G-and-B time at orbit index " + std::to_string(i));
  }
  (void)n_max;
}

bool counting_inequality_check(const CountingScenario& s, std::size_t n_max) {
  validate_scenario(s, n_max);
  std::vector<std::size_t> idx = t_orbit(s);
  std::size_t gamma = 0, k = 0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    if (n < s.horizon() && n < s.G[0].size() && s.G[0][n] && s.B[n]) ++gamma;
    // Sigma_n: j >= 0 with g(x) + ... + g(T^j x) = idx[j + 1] <= n
    while (k + 1 < idx.size() && idx[k + 1] <= n) ++k;
    if (gamma > k) return false;
  }
  return true;
}

CountingScenario random_scenario(SplitMix64& rng, std::size_t n_max, double density) {
  std::size_t H = 2 * n_max + 2;
  CountingScenario s;
  s.G.assign(H, std::vector<char>(n_max + 1, 0));
  s.B.assign(H, 0);
  s.g.assign(H, 0);
  for (std::size_t i = 0; i < H; ++i) {
    s.B[i] = rng.uniform() < 0.5;
    for (std::size_t n = 1; n <= n_max; ++n)
      if (rng.uniform() < density) s.G[i][n] = 1;
  }
  s.B[0] = 1;
  // closure: G_n at i forces G_{n-j} at i + j
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t n = n_max; n >= 1; --n)
      if (s.G[i][n])
        for (std::size_t j = 1; j < n && i + j < H; ++j) s.G[i + j][n - j] = 1;
  std::size_t i = 0;
  while (i < H && s.B[i]) {
    std::size_t cap = 0;
    for (std::size_t j = 1; j <= n_max && i + j < H; ++j)
      if (s.G[i][j] && s.B[i + j]) {
        cap = j;
        break;
      }
    std::vector<std::size_t> choices;
    std::size_t limit = cap ? cap : n_max;
    for (std::size_t j = 1; j <= limit && i + j < H; ++j)
      if (s.B[i + j]) choices.push_back(j);
    if (choices.empty()) {
      s.g[i] = H;  // leaves the horizon
      break;
    }
    // prefer the largest admissible step half of the time: the tight case
    s.g[i] = rng.uniform() < 0.5 ? choices.back() : choices[rng.below(choices.size())];
    i += s.g[i];
  }
  return s;
}

LyapunovEstimate lyapunov(const MapSystem& map, const std::function<double(SplitMix64&)>& sampler, std::size_t n,
                          std::size_t samples, std::uint64_t seed) {
  if (n == 0 || samples == 0) throw Error(ErrorKind::InvalidScenario, "lyapunov needs n >= 1 and samples >= 1");
  LyapunovEstimate est;
  est.samples = samples;
  est.values.assign(samples, 0.0);
  SplitMix64 root(seed);
  parallel_for(samples, [&](std::size_t i) {
    SplitMix64 rng = root.split(i);
    double x = sampler(rng), s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      s += std::log(std::fabs(map.derivative(x)));
      x = perturbed_step(map, x, rng);
    }
    est.values[i] = s / static_cast<double>(n);
  });
  double m = 0.0, q = 0.0;
  for (double v : est.values) m += v;
  m /= static_cast<double>(samples);
  for (double v : est.values) q += (v - m) * (v - m);
  est.mean = m;
  est.stderr_ = samples > 1 ? std::sqrt(q / static_cast<double>(samples - 1) / static_cast<double>(samples)) : 0.0;
  return est;
}

namespace {

// x in branch b with f(x) = y mod 1 (circle) or f(x) = y
std::optional<double> branch_inverse(const MapSystem& map, std::size_t b, double y) {
  double lo = std::min(map.raw_left(b), map.raw_right(b)), hi = std::max(map.raw_left(b), map.raw_right(b));
  int span = map.circle() ? 3 : 0;
  for (int k = -span; k <= span; ++k) {
    double yr = y + k;
    if (yr >= lo && yr <= hi) return map.invert(b, yr);
  }
  return std::nullopt;
}

}  // namespace

PeriodicOrbit find_periodic_repeller(const MapSystem& map, const Interval& region, std::size_t max_period,
                                     const std::vector<double>& reference, std::size_t min_period) {
  std::size_t nb = map.branches().size();
  double start = 0.5 * (region.lo + region.hi);
  auto inside = [&](double x) {
    for (int k = -1; k <= 1; ++k) {
      double xs = x + (map.circle() ? k : 0);
      if (xs >= region.lo - 1e-12 && xs <= region.hi + 1e-12) return true;
    }
    return false;
  };
  for (std::size_t p = std::max<std::size_t>(1, min_period); p <= max_period; ++p) {
    std::size_t words = 1;
    for (std::size_t k = 0; k < p; ++k) words *= nb;
    for (std::size_t code = 0; code < words; ++code) {
      Itinerary w(p);
      std::size_t c = code;
      for (std::size_t k = p; k-- > 0;) {
        w[k] = static_cast<int>(c % nb);
        c /= nb;
      }
      auto g = [&](double y) -> std::optional<double> {
        for (std::size_t k = p; k-- > 0;) {
          auto x = branch_inverse(map, static_cast<std::size_t>(w[k]), y);
          if (!x) return std::nullopt;
          y = *x;
        }
        return y;
      };
      std::optional<double> y = start;
      for (int it = 0; it < 400 && y; ++it) {
        auto nx = g(*y);
        if (!nx) {
          y.reset();
          break;
        }
        double step = map.dist(*nx, *y);
        y = nx;
        if (step < 1e-16) break;
      }
      if (!y) continue;
      PeriodicOrbit o;
      o.period = p;
      o.itinerary = w;
      double x = map.reduce(*y);
      double mult = 1.0;
      bool ok = true, hits_region = false;
      for (std::size_t k = 0; k < p && ok; ++k) {
        if (map.branch_of(x) != static_cast<std::size_t>(w[k]) && map.dist(x, map.branches()[w[k]].left) > 1e-12 &&
            map.dist(x, map.branches()[w[k]].right) > 1e-12)
          ok = false;
        o.points.push_back(x);
        hits_region = hits_region || inside(x);
        mult *= map.derivative_on(static_cast<std::size_t>(w[k]), x);
        x = map.reduce(map.raw(static_cast<std::size_t>(w[k]), x));
      }
      if (!ok || !hits_region || map.dist(x, o.points[0]) > 1e-10) continue;
      bool minimal = true;
      for (std::size_t k = 1; k < p; ++k)
        if (p % k == 0 && map.dist(o.points[k], o.points[0]) < 1e-9) minimal = false;
      if (!minimal || !(std::fabs(mult) > 1.0)) continue;
      o.multiplier = mult;
      for (double r : reference) {
        double best = std::numeric_limits<double>::infinity();
        for (double q : o.points) best = std::min(best, map.dist(r, q));
        o.density_gap = std::max(o.density_gap, best);
      }
      return o;
    }
  }
  throw Error(ErrorKind::NotFound, "no repelling orbit of period <= " + std::to_string(max_period) + " in the region");
}

}  // namespace nue
