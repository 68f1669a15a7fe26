#include "nue/tower.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "nue/errors.hpp"
#include "nue/parallel.hpp"
#include "nue/region.hpp"

namespace nue {

namespace {

constexpr double kSameTol = 1e-12;

double lift_near(bool circle, double x, double ref) { return circle ? x + std::round(ref - x) : x; }

// Sorted open pieces for point location; circle pieces crossing 1 are split.
class ImageIndex {
 public:
  ImageIndex(const std::vector<Interval>& images, bool circle) : circle_(circle) {
    for (std::size_t i = 0; i < images.size(); ++i) {
      Interval c = images[i];
      if (circle) {
        double k = std::floor(c.lo);
        c.lo -= k;
        c.hi -= k;
      }
      if (circle && c.hi > 1.0) {
        entries_.push_back({c.lo, 1.0, i});
        entries_.push_back({0.0, c.hi - 1.0, i});
      } else {
        entries_.push_back({c.lo, c.hi, i});
      }
    }
    std::sort(entries_.begin(), entries_.end(), [](const E& a, const E& b) { return a.lo < b.lo; });
  }
  // image whose interior contains y; `edge` is set when y sits on an image boundary
  std::size_t find(double y, bool* edge) const {
    if (circle_) y = circle_reduce(y);
    auto it = std::upper_bound(entries_.begin(), entries_.end(), y, [](double v, const E& e) { return v < e.lo; });
    if (it != entries_.begin()) {
      --it;
      if (y > it->lo && y < it->hi) return it->id;
      if (y == it->lo || y == it->hi) *edge = true;
    }
    if (it != entries_.end() && y == it->lo) *edge = true;
    return npos;
  }

 private:
  struct E {
    double lo, hi;
    std::size_t id;
  };
  bool circle_;
  std::vector<E> entries_;
};

std::optional<ReturnHit> first_return_indexed(const MapSystem& map, double x, const std::vector<Interval>& images,
                                              const ImageIndex& index, const Interval& home, const TimeSource& src,
                                              std::size_t R_max, std::size_t* boundary, std::size_t* straddle) {
  double xr = map.reduce(x);
  OrbitRecord orbit = iterate_until_critical(map, xr, R_max);
  double xl = lift_near(map.circle(), xr, 0.5 * (home.lo + home.hi));
  for (std::size_t steps = src.ell; steps <= R_max; steps += src.ell) {
    if (orbit.size() <= steps) break;
    bool edge = false;
    std::size_t k = index.find(orbit.points[steps], &edge);
    if (k == npos) {
      if (edge && boundary) ++*boundary;
      continue;
    }
    auto q = pull_back_set(map, orbit, steps / src.ell, images[k], src);
    if (!q) continue;
    if (xl + q->qa < home.lo - kSameTol || xl + q->qb > home.hi + kSameTol) {
      if (straddle) ++*straddle;
      continue;
    }
    ReturnHit hit;
    hit.R = steps;
    hit.image = k;
    hit.piece = *q;
    hit.piece.base = xl;
    hit.itinerary.assign(orbit.branch_itinerary.begin(), orbit.branch_itinerary.begin() + steps);
    return hit;
  }
  return std::nullopt;
}

}  // namespace

std::optional<ReturnHit> first_return_time(const MapSystem& map, double x, const std::vector<Interval>& images,
                                           const Interval& home, const TimeSource& src, std::size_t R_max,
                                           std::size_t* boundary_rejects, std::size_t* straddle_rejects) {
  if (src.ell == 0) throw Error(ErrorKind::InvalidScenario, "ell must be positive");
  ImageIndex index(images, map.circle());
  return first_return_indexed(map, x, images, index, home, src, R_max, boundary_rejects, straddle_rejects);
}

std::size_t InducedMarkovMap::atom_of(double x) const {
  if (atoms.empty()) return npos;
  if (map.circle()) x = circle_reduce(x);
  auto it = std::upper_bound(atoms.begin(), atoms.end(), x,
                             [](double v, const TowerAtom& a) { return v < a.base + a.qa; });
  if (it != atoms.begin()) {
    const TowerAtom& a = *std::prev(it);
    if (x > a.base + a.qa && x < a.base + a.qb) return static_cast<std::size_t>(std::prev(it) - atoms.begin());
  }
  if (map.circle()) {
    const TowerAtom& a = atoms.back();
    if (x + 1.0 > a.base + a.qa && x + 1.0 < a.base + a.qb) return atoms.size() - 1;
  }
  return npos;
}

double InducedMarkovMap::partial(std::size_t a, double x, std::size_t j) const {
  const TowerAtom& at = atoms[a];
  OrbitRecord orbit = iterate(map, map.reduce(at.base), j);
  double u = x - at.base;
  if (map.circle()) u -= std::round(u);
  for (std::size_t k = 0; k < j; ++k) u = map.forward_offset(orbit.points[k], u);
  return orbit.points[j] + u;
}

double InducedMarkovMap::induced(std::size_t a, double x) const {
  const Interval& img = images[atoms[a].image];
  return lift_near(map.circle(), partial(a, x, atoms[a].R), 0.5 * (img.lo + img.hi));
}

Interval InducedMarkovMap::image_of(std::size_t a) const {
  const TowerAtom& at = atoms[a];
  OrbitRecord orbit = iterate(map, map.reduce(at.base), at.R);
  double ua = at.qa, ub = at.qb;
  for (std::size_t k = 0; k < at.R; ++k) {
    ua = map.forward_offset(orbit.points[k], ua);
    ub = map.forward_offset(orbit.points[k], ub);
  }
  const Interval& img = images[at.image];
  double y = lift_near(map.circle(), orbit.points[at.R], 0.5 * (img.lo + img.hi));
  return {y + std::min(ua, ub), y + std::max(ua, ub)};
}

double InducedMarkovMap::inverse(std::size_t a, double y) const {
  const TowerAtom& at = atoms[a];
  OrbitRecord orbit = iterate(map, map.reduce(at.base), at.R);
  double yr = orbit.points[at.R];
  double v = lift_near(map.circle(), y, yr) - yr;
  auto levels = pull_back_offsets(map, orbit, at.R, {v});
  if (levels.empty()) throw Error(ErrorKind::BranchEscape, "point outside the image of the atom");
  return at.base + levels[0][0];
}

OrbitRecord InducedMarkovMap::base_orbit(std::size_t a) const {
  return iterate(map, map.reduce(atoms[a].base), atoms[a].R);
}

std::vector<double> InducedMarkovMap::inverse_many(std::size_t a, const std::vector<double>& ys) const {
  const TowerAtom& at = atoms[a];
  OrbitRecord orbit = base_orbit(a);
  double yr = orbit.points[at.R];
  std::vector<double> v(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) v[i] = lift_near(map.circle(), ys[i], yr) - yr;
  auto levels = pull_back_offsets(map, orbit, at.R, v);
  if (levels.empty()) throw Error(ErrorKind::BranchEscape, "point outside the image of the atom");
  for (auto& u : levels[0]) u += at.base;
  return levels[0];
}

double InducedMarkovMap::log_jacobian(std::size_t a, double x) const {
  const TowerAtom& at = atoms[a];
  OrbitRecord orbit = iterate(map, map.reduce(at.base), at.R);
  double u = x - at.base;
  if (map.circle()) u -= std::round(u);
  double s = 0.0;
  for (std::size_t k = 0; k < at.R; ++k) {
    s += std::log(std::fabs(map.derivative(map.reduce(orbit.points[k] + u))));
    u = map.forward_offset(orbit.points[k], u);
  }
  return s;
}

namespace {

struct Probe {
  std::optional<ReturnHit> hit;
  std::size_t boundary = 0, straddle = 0;
};

// Seeds one home interval: a uniform grid, then midpoints of the largest
// uncovered gaps until the uncovered mass drops below the target.
void seed_home(InducedMarkovMap& tower, const ImageIndex& index, const Interval& home, std::size_t grid,
               double target, std::size_t gap_budget) {
  const MapSystem& map = tower.map;
  auto probe = [&](double x) {
    Probe p;
    p.hit = first_return_indexed(map, x, tower.images, index, home, tower.src, tower.R_max, &p.boundary,
                                 &p.straddle);
    return p;
  };
  std::map<double, std::pair<double, ReturnHit>> found;  // lo -> (hi, hit), home coordinates
  auto absorb = [&](Probe& p) {
    tower.boundary_rejects += p.boundary;
    tower.straddle_rejects += p.straddle;
    ++tower.seeds;
    if (!p.hit) return false;
    Interval v = p.hit->piece.abs();
    auto it = found.lower_bound(v.lo - kSameTol);
    if (it != found.end() && std::fabs(it->first - v.lo) <= kSameTol && std::fabs(it->second.first - v.hi) <= kSameTol)
      return false;
    found.emplace(v.lo, std::make_pair(v.hi, *p.hit));
    return true;
  };
  double len = home.hi - home.lo;
  std::vector<Probe> first(grid);
  parallel_for(grid, [&](std::size_t k) {
    first[k] = probe(home.lo + len * (static_cast<double>(k) + 0.5) / static_cast<double>(grid));
  });
  for (Probe& p : first) absorb(p);

  using Gap = std::pair<double, std::pair<double, double>>;  // (length, (lo, hi))
  std::priority_queue<Gap> gaps;
  double uncovered = 0.0;
  auto push_gap = [&](double a, double b) {
    if (b - a > 0) {
      gaps.push({b - a, {a, b}});
      uncovered += b - a;
    }
  };
  double cursor = home.lo;
  for (const auto& [lo, e] : found) {
    push_gap(cursor, lo);
    cursor = std::max(cursor, e.first);
  }
  push_gap(cursor, home.hi);
  std::size_t spent = 0;
  while (uncovered > target * len && !gaps.empty() && spent < gap_budget) {
    auto [g, ab] = gaps.top();
    gaps.pop();
    auto [a, b] = ab;
    uncovered -= g;
    // below this the midpoint is no longer distinct from the ends
    if (g <= 4e-16 * std::max(1.0, std::fabs(a))) continue;
    double mid = 0.5 * (a + b);
    Probe p = probe(mid);
    ++spent;
    if (absorb(p)) {
      Interval v = p.hit->piece.abs();
      push_gap(a, std::min(b, v.lo));
      push_gap(std::max(a, v.hi), b);
    } else {
      push_gap(a, mid);
      push_gap(mid, b);
    }
  }
  for (auto& [lo, e] : found) {
    const ReturnHit& h = e.second;
    TowerAtom at;
    at.base = h.piece.base;
    at.qa = h.piece.qa;
    at.qb = h.piece.qb;
    at.R = h.R;
    at.image = h.image;
    at.itinerary = h.itinerary;
    if (map.circle()) at.base -= std::floor(at.base + at.qa);
    tower.atoms.push_back(std::move(at));
  }
}

void finish(InducedMarkovMap& tower) {
  std::sort(tower.atoms.begin(), tower.atoms.end(),
            [](const TowerAtom& a, const TowerAtom& b) { return a.base + a.qa < b.base + b.qa; });
  double covered = 0.0;
  for (const TowerAtom& a : tower.atoms) covered += a.length();
  tower.unresolved_mass = std::max(0.0, tower.base_mass - covered);
}

}  // namespace

InducedMarkovMap build_local_tower(const MapSystem& map, const Interval& delta, const TimeSource& src,
                                   std::size_t R_max, const TowerOptions& opt) {
  if (!(delta.hi > delta.lo)) throw Error(ErrorKind::HypothesisFail, "base interval is empty");
  if (src.kind != TimeKind::Every && !(delta.hi - delta.lo < src.delta / 2))
    throw Error(ErrorKind::HypothesisFail, "base diameter must be below delta/2");
  InducedMarkovMap t;
  t.kind = TowerKind::Local;
  t.map = map;
  t.src = src;
  t.images = {delta};
  t.image_group = {0};
  t.R_max = R_max;
  t.base_mass = delta.hi - delta.lo;
  ImageIndex index(t.images, map.circle());
  seed_home(t, index, delta, opt.seeds, opt.unresolved_target, opt.max_gap_seeds);
  finish(t);
  return t;
}

InducedMarkovMap build_local_tower(const MapSystem& map, const NestedBall& ball, const TimeSource& src,
                                   std::size_t R_max, const TowerOptions& opt) {
  return build_local_tower(map, Interval{ball.core.lo, ball.core.hi}, src, R_max, opt);
}

InducedMarkovMap build_global_tower(const MapSystem& map, const GlobalPartition& p0, const TimeSource& src,
                                    std::size_t R_max, const TowerOptions& opt) {
  if (src.ell != p0.ell) throw Error(ErrorKind::HypothesisFail, "tower and partition use different ell");
  InducedMarkovMap t;
  t.kind = TowerKind::Global;
  t.map = map;
  t.src = src;
  t.R_max = R_max;
  for (std::size_t i = 0; i < p0.atoms.size(); ++i)
    for (const Arc& c : p0.atoms[i].region.interior().components()) {
      t.images.push_back({c.lo, c.hi});
      t.image_group.push_back(i);
      t.base_mass += c.hi - c.lo;
    }
  ImageIndex index(t.images, map.circle());
  for (const Interval& home : t.images) {
    double share = (home.hi - home.lo) / t.base_mass;
    std::size_t grid = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(share * opt.seeds)));
    std::size_t budget = std::max<std::size_t>(64, static_cast<std::size_t>(share * opt.max_gap_seeds));
    seed_home(t, index, home, grid, opt.unresolved_target, budget);
  }
  finish(t);
  return t;
}

bool MarkovReport::pass() const {
  for (const MarkovCondition& c : conditions)
    if (!c.pass) return false;
  return !conditions.empty();
}

MarkovReport verify_markov(const InducedMarkovMap& t, double tol) {
  MarkovReport rep;
  const bool circle = t.map.circle();
  const std::size_t n = t.atoms.size();
  std::vector<double> lo(n), hi(n);
  double maxlen = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = t.atoms[i].base + t.atoms[i].qa;
    hi[i] = t.atoms[i].base + t.atoms[i].qb;
    maxlen = std::max(maxlen, hi[i] - lo[i]);
  }
  std::vector<double> shifts = circle ? std::vector<double>{-1.0, 0.0, 1.0} : std::vector<double>{0.0};
  // atoms j whose shifted copy meets (a, b)
  auto meeting = [&](double a, double b, auto&& visit) {
    for (double s : shifts) {
      auto first = std::lower_bound(lo.begin(), lo.end(), a - s - maxlen);
      for (auto it = first; it != lo.end() && *it + s < b; ++it) {
        std::size_t j = static_cast<std::size_t>(it - lo.begin());
        if (hi[j] + s > a) visit(j, s);
      }
    }
  };

  MarkovCondition c1{"disjoint interiors", true, 0.0, ""};
  double run = -1e300;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) c1.residual = std::max(c1.residual, run - lo[i]);
    run = std::max(run, hi[i]);
  }
  if (circle && n > 1) c1.residual = std::max(c1.residual, run - 1.0 - lo[0]);
  c1.residual = std::max(0.0, c1.residual);
  c1.pass = c1.residual <= tol;
  c1.detail = "largest overlap of atom interiors";

  std::vector<Interval> img(n);
  for (std::size_t i = 0; i < n; ++i) img[i] = t.image_of(i);

  MarkovCondition c2{"image onto", true, 0.0, ""};
  std::size_t partial_hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    meeting(img[i].lo, img[i].hi, [&](std::size_t j, double s) {
      double a = lo[j] + s, b = hi[j] + s;
      double overlap = std::min(b, img[i].hi) - std::max(a, img[i].lo);
      if (overlap <= tol) return;
      double out = std::max({0.0, img[i].lo - a, b - img[i].hi});
      if (out > tol) ++partial_hits;
      c2.residual = std::max(c2.residual, out);
    });
  }
  c2.pass = partial_hits == 0;
  c2.detail = std::to_string(partial_hits) + " atoms cut by an image";

  MarkovCondition c3{"finitely many images", true, 0.0, ""};
  std::vector<Interval> sorted = img;
  std::sort(sorted.begin(), sorted.end(), [&](const Interval& a, const Interval& b) {
    double la = circle ? circle_reduce(a.lo) : a.lo, lb = circle ? circle_reduce(b.lo) : b.lo;
    return la < lb;
  });
  std::vector<Interval> distinct;
  for (const Interval& v : sorted) {
    bool same = false;
    for (auto it = distinct.rbegin(); it != distinct.rend(); ++it) {
      double d = circle ? circle_dist(it->lo, v.lo) : std::fabs(it->lo - v.lo);
      if (d > tol) break;
      if (std::fabs(it->length() - v.length()) <= tol) {
        same = true;
        break;
      }
    }
    if (!same) distinct.push_back(v);
  }
  rep.distinct_images = distinct.size();
  c3.pass = n > 0 && distinct.size() <= t.images.size();
  c3.residual = static_cast<double>(distinct.size());
  c3.detail = std::to_string(distinct.size()) + " distinct images, " + std::to_string(t.images.size()) + " allowed";

  MarkovCondition c4{"endpoint matching", true, 0.0, ""};
  for (std::size_t i = 0; i < n; ++i) {
    const Interval& target = t.images[t.atoms[i].image];
    double shift = circle ? std::round(0.5 * (target.lo + target.hi) - 0.5 * (img[i].lo + img[i].hi)) : 0.0;
    c4.residual = std::max({c4.residual, std::fabs(img[i].lo + shift - target.lo),
                            std::fabs(img[i].hi + shift - target.hi)});
  }
  c4.pass = c4.residual <= tol;
  c4.detail = "largest endpoint mismatch of F(P) against its image";

  MarkovCondition c5{"cylinder diameters", true, 0.0, ""};
  rep.d1 = maxlen;
  // per image, its largest atoms; the widest 2-cylinders sit over these
  std::vector<std::vector<std::size_t>> inside(t.images.size());
  for (std::size_t j = 0; j < n; ++j) {
    double mid = 0.5 * (lo[j] + hi[j]);
    for (std::size_t k = 0; k < t.images.size(); ++k) {
      double m = circle ? lift_near(true, mid, 0.5 * (t.images[k].lo + t.images[k].hi)) : mid;
      if (m > t.images[k].lo && m < t.images[k].hi) inside[k].push_back(j);
    }
  }
  for (auto& v : inside) {
    std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) { return hi[a] - lo[a] > hi[b] - lo[b]; });
    if (v.size() > 4) v.resize(4);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : inside[t.atoms[i].image]) {
      double a = t.inverse(i, lo[j]), b = t.inverse(i, hi[j]);
      rep.d2 = std::max(rep.d2, std::fabs(b - a));
    }
  c5.residual = rep.d1 > 0 ? rep.d2 / rep.d1 : 1.0;
  c5.pass = n > 0 && rep.d2 < rep.d1;
  c5.detail = "ratio of the widest 2-cylinder to the widest atom";

  rep.conditions = {c1, c2, c3, c4, c5};
  return rep;
}

bool TailStats::monotone() const {
  for (const auto* v : {&counts, &zoom_tail, &h_tail})
    for (std::size_t i = 1; i < v->size(); ++i)
      if ((*v)[i] > (*v)[i - 1]) return false;
  return true;
}

namespace {

// image whose interior contains x, npos otherwise
std::size_t home_of(const InducedMarkovMap& t, double x) {
  for (std::size_t k = 0; k < t.images.size(); ++k) {
    const Interval& I = t.images[k];
    double y = lift_near(t.map.circle(), x, 0.5 * (I.lo + I.hi));
    if (y > I.lo && y < I.hi) return k;
  }
  return npos;
}

}  // namespace

TailStats tail_statistics(const InducedMarkovMap& t, const std::vector<double>& samples, const HyperbolicParams& hyp) {
  TailStats ts;
  const std::size_t ell = t.src.ell;
  ts.n_max = t.R_max / ell;
  ts.counts.assign(ts.n_max + 1, 0.0);
  ts.zoom_tail.assign(ts.n_max + 1, 0.0);
  ts.h_tail.assign(ts.n_max + 1, 0.0);
  ImageIndex index(t.images, t.map.circle());
  struct One {
    bool used = false;
    std::size_t R = 0, first_flag = 0, first_h = 0;
  };
  std::vector<One> res(samples.size());
  const std::size_t never = static_cast<std::size_t>(-1);
  parallel_for(samples.size(), [&](std::size_t i) {
    double x = samples[i];
    std::size_t home = home_of(t, x);
    if (home == npos) return;
    One& o = res[i];
    o.used = true;
    auto hit = first_return_indexed(t.map, x, t.images, index, t.images[home], t.src, t.R_max, nullptr, nullptr);
    o.R = hit ? hit->R : never;
    OrbitRecord orbit = iterate_until_critical(t.map, t.map.reduce(x), t.R_max);
    o.first_flag = never;
    for (std::size_t j = 1; j * ell <= t.R_max && j * ell < orbit.size(); ++j)
      if (time_flagged(t.map, orbit, j * ell, t.src)) {
        o.first_flag = j * ell;
        break;
      }
    o.first_h = never;
    bool finite = true;
    for (std::size_t j = 0; j + 1 < orbit.size(); ++j)
      if (!std::isfinite(orbit.log_inv_deriv[j])) finite = false;
    if (finite && orbit.size() > 1) {
      TimeFlags f = detect_hyperbolic_times(orbit, hyp);
      for (std::size_t m = 1; m <= f.horizon(); ++m)
        if (f.flag[m]) {
          o.first_h = m;
          break;
        }
    }
  });
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const One& o = res[i];
    if (!o.used) continue;
    ++ts.samples;
    if (o.R == never) ++ts.no_return;
    for (std::size_t m = 0; m <= ts.n_max; ++m) {
      std::size_t steps = m * ell;
      if (o.R == never || o.R > steps) ts.counts[m] += 1;
      if (o.first_flag == never || o.first_flag > steps) ts.zoom_tail[m] += 1;
      if (o.first_h == never || o.first_h > steps) ts.h_tail[m] += 1;
    }
    if (o.first_flag != never && (o.R == never || o.R > o.first_flag)) ts.violating_points.push_back(samples[i]);
  }
  if (ts.samples > 0)
    for (auto* v : {&ts.counts, &ts.zoom_tail, &ts.h_tail})
      for (double& c : *v) c /= static_cast<double>(ts.samples);
  return ts;
}

double invariance_domain(const InducedMarkovMap& t, const std::vector<double>& samples, std::size_t J) {
  if (samples.empty()) return 0.0;
  ImageIndex index(t.images, t.map.circle());
  std::vector<char> stays(samples.size(), 0);
  parallel_for(samples.size(), [&](std::size_t i) {
    OrbitRecord orbit = iterate_until_critical(t.map, t.map.reduce(samples[i]), t.src.ell * J);
    if (orbit.size() <= t.src.ell * J) return;
    for (std::size_t j = 0; j <= J; ++j) {
      double y = orbit.points[j * t.src.ell];
      if (t.atom_of(y) != npos) continue;
      std::size_t home = home_of(t, y);
      if (home == npos) return;
      if (!first_return_indexed(t.map, y, t.images, index, t.images[home], t.src, t.R_max, nullptr, nullptr)) return;
    }
    stays[i] = 1;
  });
  double c = 0.0;
  for (char s : stays) c += s;
  return c / static_cast<double>(samples.size());
}

}  // namespace nue
