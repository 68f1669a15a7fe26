#include "nue/nested.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <set>
#include <tuple>

#include "nue/errors.hpp"

namespace nue {

std::string TimeSource::describe() const {
  std::string k = kind == TimeKind::Every ? "every" : kind == TimeKind::Zooming ? "zooming" : "hyperbolic";
  return k + " ell=" + std::to_string(ell) + " alpha=" + alpha.describe() + " delta=" + std::to_string(delta);
}

bool time_flagged(const MapSystem& map, const OrbitRecord& orbit, std::size_t steps, const TimeSource& src) {
  if (src.kind == TimeKind::Every) return true;
  if (orbit.size() <= steps || steps == 0) return false;
  if (src.kind == TimeKind::Hyperbolic) {
    OrbitRecord prefix = orbit;
    prefix.points.resize(steps + 1);
    prefix.log_inv_deriv.resize(steps + 1);
    prefix.crit_dist.resize(steps + 1);
    prefix.branch_itinerary.resize(steps + 1);
    for (std::size_t j = 0; j < steps; ++j)
      if (!std::isfinite(orbit.log_inv_deriv[j])) return false;
    TimeFlags f = detect_hyperbolic_times(prefix, src.hyp);
    if (!f.flag[steps]) return false;
  }
  return certify_preball(map, orbit, steps, src.delta, src.alpha).ok;
}

bool is_linked(const Interval& u, const Interval& v0, bool circle) {
  if (!(u.hi > u.lo) || !(v0.hi > v0.lo)) return false;
  if (circle && u.length() + v0.length() >= 1.0)
    return arcs_linked(Arc{u.lo, u.hi}, Arc{v0.lo, v0.hi}, true);
  Interval v = v0;
  if (circle) {
    double k = std::round((u.lo + u.hi) / 2 - (v.lo + v.hi) / 2);
    v.lo += k;
    v.hi += k;
  }
  bool meet = v.lo < u.hi && u.lo < v.hi;
  bool u_in_v = u.lo >= v.lo && u.hi <= v.hi;
  bool v_in_u = v.lo >= u.lo && v.hi <= u.hi;
  return meet && !u_in_v && !v_in_u;
}

namespace {

// lift of y that lies strictly inside the open interval A, if any
std::optional<double> lift_into(const MapSystem& map, double y, const Interval& A) {
  if (map.circle()) y += std::round((A.lo + A.hi) / 2 - y);
  if (y > A.lo && y < A.hi) return y;
  return std::nullopt;
}

bool critical_inside(const MapSystem& map, double p, double lo, double hi) {
  for (double c : map.critical_set()) {
    double d = c - p;
    if (map.circle()) d -= std::ceil(d - lo);
    if (d > lo && d < hi) return true;
  }
  return false;
}

// centre first, then outwards
const std::vector<int>& test_order() {
  static const std::vector<int> order = [] {
    std::vector<int> o{kCertGrid / 2};
    for (int d = 1; d <= kCertGrid / 2; ++d) {
      o.push_back(kCertGrid / 2 - d);
      o.push_back(kCertGrid / 2 + d);
    }
    return o;
  }();
  return order;
}

}  // namespace

std::optional<PreImage> pull_back_set(const MapSystem& map, const OrbitRecord& orbit, std::size_t order,
                                      const Interval& A, const TimeSource& src) {
  std::size_t steps = src.ell * order;
  if (steps == 0 || orbit.size() <= steps) return std::nullopt;
  auto y = lift_into(map, orbit.points[steps], A);
  if (!y) return std::nullopt;
  double ea = A.lo - *y, eb = A.hi - *y;
  std::vector<double> t(kCertGrid);
  for (int k = 0; k < kCertGrid; ++k) t[k] = ea + (eb - ea) * static_cast<double>(k) / (kCertGrid - 1);
  t.front() = ea;
  t.back() = eb;
  auto levels = pull_back_offsets(map, orbit, steps, t);
  if (levels.empty()) return std::nullopt;
  for (std::size_t j = 0; j < steps; ++j) {
    const auto& L = levels[j];
    int dir = L.back() > L.front() ? 1 : -1;
    for (int k = 1; k < kCertGrid; ++k)
      if ((L[k] - L[k - 1]) * dir <= 0) return std::nullopt;
    if (critical_inside(map, orbit.points[j], std::min(L.front(), L.back()), std::max(L.front(), L.back())))
      return std::nullopt;
  }
  PreImage q;
  q.base = orbit.points[0];
  q.qa = std::min(levels[0].front(), levels[0].back());
  q.qb = std::max(levels[0].front(), levels[0].back());
  q.order = order;
  if (!(q.qa < 0.0 && q.qb > 0.0)) return std::nullopt;
  if (src.kind == TimeKind::Every) return q;
  // the orbit itself first
  // A inside B_delta(g), up to rounding: with r = delta the centre sits on the edge
  auto within = [&](double g) { return A.lo >= g - src.delta - kLinkTol && A.hi <= g + src.delta + kLinkTol; };
  if (within(*y) && time_flagged(map, orbit, steps, src)) return q;
  for (int k : test_order()) {
    double g = *y + t[k];
    if (!within(g)) continue;
    std::vector<double> pts(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) pts[j] = map.reduce(orbit.points[j] + levels[j][k]);
    OrbitRecord w = orbit_from_points(map, pts);
    if (w.size() <= steps) continue;
    if (time_flagged(map, w, steps, src)) return q;
  }
  return std::nullopt;
}

std::size_t default_order_cap(const TimeSource& src, double r) {
  ZoomingContraction a = src.induced();
  for (std::size_t N = 0; N < 100000; ++N)
    if (a.tail(2.0 * r, N) < 1e-6 * r) return N;
  throw Error(ErrorKind::CapExceeded, "contraction tail does not fall below 1e-6 r");
}

namespace {

Region union_of(const std::vector<Interval>& ivs, bool circle) {
  std::vector<Interval> v;
  for (const Interval& i : ivs) {
    Interval c = i;
    if (circle) {
      double k = std::floor(c.lo);
      c.lo -= k;
      c.hi -= k;
    }
    if (c.hi > c.lo) v.push_back(c);
  }
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  for (const Interval& c : v) {
    if (!merged.empty() && c.lo < merged.back().hi) merged.back().hi = std::max(merged.back().hi, c.hi);
    else merged.push_back(c);
  }
  Region out(circle);
  for (const Interval& c : merged) out = out.unite(Region::open_arc(c.lo, c.hi, circle));
  return out;
}

bool on_domain_edge(const MapSystem& map, double z) { return !map.circle() && (z <= 0.0 || z >= 1.0); }

}  // namespace

ChainClosure enumerate_chain_closure(const MapSystem& map, const std::vector<Interval>& anchors,
                                     const TimeSource& src, std::size_t n_max, std::size_t cap) {
  ChainClosure out;
  out.anchors = anchors;
  out.n_max = n_max;
  ZoomingContraction alpha = src.induced();
  double diam = 0.0;
  for (const Interval& a : anchors) diam = std::max(diam, a.hi - a.lo);
  // how far the descendants of an element of order m can reach past it
  std::vector<double> reach(n_max + 1, 0.0);
  for (std::size_t m = 0; m <= n_max; ++m) reach[m] = alpha.sum(diam, n_max) - alpha.sum(diam, m);

  struct Node {
    double lo, hi, len;
    std::size_t order, depth, index;
  };
  out.cores = anchors;
  for (std::size_t root = 0; root < anchors.size(); ++root) {
    const Interval& A = anchors[root];
    for (int inner_dir : {+1, -1}) {
      // inner_dir = +1: cluster at A.lo, whose inward extent is max hi
      double z0 = inner_dir > 0 ? A.lo : A.hi;
      if (on_domain_edge(map, z0)) continue;
      double best = z0;
      auto extent = [&](const Node& n) { return inner_dir > 0 ? n.hi : -n.lo; };
      auto potential = [&](const Node& n) { return extent(n) + reach[n.order]; };
      auto cmp = [&](const Node& a, const Node& b) { return potential(a) < potential(b); };
      std::priority_queue<Node, std::vector<Node>, decltype(cmp)> queue(cmp);
      // the anchor enters only through the endpoint z0
      queue.push({A.lo, A.hi, A.hi - A.lo, 0, 0, npos});
      std::set<std::tuple<std::size_t, std::size_t, long long>> seen;
      bool first = true;
      while (!queue.empty()) {
        Node P = queue.top();
        queue.pop();
        if (!first && potential(P) <= inner_dir * best + kLinkTol) continue;
        if (P.order >= n_max) continue;
        for (int side = 0; side < 2; ++side) {
          if (first && side != (inner_dir > 0 ? 0 : 1)) continue;
          double z = side == 0 ? P.lo : P.hi;
          if (on_domain_edge(map, z)) continue;
          OrbitRecord orbit = iterate_until_critical(map, map.reduce(z), src.ell * n_max);
          for (std::size_t n = P.order + 1; n <= n_max; ++n) {
            std::size_t steps = src.ell * n;
            if (orbit.size() <= steps) break;
            double y = orbit.points[steps];
            for (std::size_t j = 0; j < anchors.size(); ++j) {
              if (!lift_into(map, y, anchors[j])) continue;
              ++out.candidates;
              auto q = pull_back_set(map, orbit, n, anchors[j], src);
              if (!q) continue;
              double inside = side == 0 ? q->qb : -q->qa;
              double outside = side == 0 ? -q->qa : q->qb;
              if (!(inside > kLinkTol && outside > kLinkTol && P.len - inside > kLinkTol)) continue;
              if (q->length() > alpha(n, anchors[j].hi - anchors[j].lo) * (1.0 + 1e-9) + kLinkTol)
                throw Error(ErrorKind::HypothesisFail, "pre-image of order " + std::to_string(n) +
                                                           " is longer than the contraction allows");
              q->base = z;
              q->anchor = j;
              q->parent = P.index;
              Interval a = q->abs();
              long long key = std::llround((map.circle() ? a.lo - std::floor(a.lo) : a.lo) * 1e14);
              if (!seen.insert({j, n, key}).second) continue;
              Node c{a.lo, a.hi, q->length(), n, P.depth + 1, npos};
              if (potential(c) <= inner_dir * best + kLinkTol && extent(c) <= inner_dir * best) {
                ++out.pruned;
                continue;
              }
              out.elements.push_back(*q);
              c.index = out.elements.size() - 1;
              if (out.elements.size() > cap)
                throw Error(ErrorKind::CapExceeded, "chain closure exceeds " + std::to_string(cap) + " elements");
              out.max_chain_length = std::max(out.max_chain_length, c.depth);
              best = inner_dir > 0 ? std::max(best, c.hi) : std::min(best, c.lo);
              queue.push(c);
            }
          }
        }
        first = false;
      }
      (inner_dir > 0 ? out.cores[root].lo : out.cores[root].hi) = best;
    }
  }
  std::vector<Interval> ivs;
  for (const PreImage& e : out.elements) ivs.push_back(e.abs());
  out.swept = union_of(ivs, map.circle());
  return out;
}

namespace {

Interval ball(const MapSystem& map, double p, double r) {
  Interval a{p - r, p + r};
  if (!map.circle()) {
    a.lo = std::max(a.lo, 0.0);
    a.hi = std::min(a.hi, 1.0);
  }
  return a;
}

// relatively open in [0,1]: domain ends are kept
Region anchor_region(const MapSystem& map, const Interval& a) {
  Arc arc{a.lo, a.hi, !map.circle() && a.lo <= 0.0, !map.circle() && a.hi >= 1.0};
  return Region::from_arc(arc, map.circle());
}

// Fails when some pre-image of A through p contains A.
void check_not_self_covered(const MapSystem& map, const Interval& A, double p, std::size_t n_max,
                            std::size_t ell) {
  TimeSource every;
  every.kind = TimeKind::Every;
  every.ell = ell;
  OrbitRecord orbit = iterate_until_critical(map, p, ell * n_max);
  for (std::size_t n = 1; n <= n_max; ++n) {
    auto q = pull_back_set(map, orbit, n, A, every);
    if (!q) continue;
    Interval a = q->abs();
    if (a.lo <= A.lo && a.hi >= A.hi)
      throw Error(ErrorKind::HypothesisFail, "the set lies inside one of its own pre-images (order " +
                                                 std::to_string(n) + ")");
  }
}

}  // namespace

bool NestedBall::contains_half_ball() const {
  double lo = center - r / 2, hi = center + r / 2;
  if (anchor.lo <= 0.0) lo = std::max(lo, 0.0);
  if (anchor.hi >= 1.0) hi = std::min(hi, 1.0);
  return core.hi > core.lo && core.lo <= lo && core.hi >= hi;
}

NestedBall build_nested_ball(const MapSystem& map, double p, double r, const TimeSource& src,
                             std::optional<std::size_t> n_max) {
  if (!(r > 0)) throw Error(ErrorKind::HypothesisFail, "nested ball radius must be positive");
  if (src.kind != TimeKind::Every && r > src.delta)
    throw Error(ErrorKind::HypothesisFail, "nested ball radius exceeds the pre-ball radius");
  NestedBall nb;
  nb.center = p;
  nb.r = r;
  nb.contraction_sum = src.induced().total(r);
  if (!(nb.contraction_sum < r / 4))
    throw Error(ErrorKind::HypothesisFail, "sum of alpha_n(r) = " + std::to_string(nb.contraction_sum) +
                                               " is not below r/4");
  nb.n_max = n_max ? *n_max : default_order_cap(src, r);
  nb.tail_bound = src.induced().tail(2.0 * r, nb.n_max);
  nb.anchor = ball(map, p, r);
  check_not_self_covered(map, nb.anchor, p, nb.n_max, src.ell);
  nb.closure = enumerate_chain_closure(map, {nb.anchor}, src, nb.n_max);
  nb.closure.tail_bound = nb.tail_bound;
  Region star = anchor_region(map, nb.anchor).subtract(nb.closure.swept.closure());
  nb.core = star.component_containing(map.circle() ? circle_reduce(p) : p);
  if (nb.core.hi > nb.core.lo) {
    // Region merges breakpoints closer than kMergeTol, which can swallow a
    // chain element shorter than that; the closure's own extents are exact
    const Interval& ext = nb.closure.cores.front();
    double shift = map.circle() ? std::round(nb.core.mid() - 0.5 * (ext.lo + ext.hi)) : 0.0;
    double lo = std::max(nb.core.lo - shift, ext.lo), hi = std::min(nb.core.hi - shift, ext.hi);
    if (hi <= lo) {
      nb.core.hi = nb.core.lo;
    } else {
      if (lo > nb.core.lo - shift) nb.core.lo_closed = false;
      if (hi < nb.core.hi - shift) nb.core.hi_closed = false;
      double k = map.circle() ? std::floor(lo) : 0.0;
      nb.core.lo = lo - k;
      nb.core.hi = hi - k;
    }
  }
  return nb;
}

NestedReport verify_nested(const MapSystem& map, const Interval& V, std::size_t n_check, const TimeSource& src,
                           std::size_t pairwise_orders, std::size_t cap) {
  NestedReport rep;
  check_not_self_covered(map, V, 0.5 * (V.lo + V.hi), n_check, src.ell);
  double len = V.hi - V.lo;
  for (int side = 0; side < 2; ++side) {
    double z = side == 0 ? V.lo : V.hi;
    if (on_domain_edge(map, z)) continue;
    OrbitRecord orbit = iterate_until_critical(map, map.reduce(z), src.ell * n_check);
    for (std::size_t n = 1; n <= n_check; ++n) {
      if (orbit.size() <= src.ell * n) break;
      if (!lift_into(map, orbit.points[src.ell * n], V)) continue;
      ++rep.checked;
      auto q = pull_back_set(map, orbit, n, V, src);
      if (!q) continue;
      double inside = side == 0 ? q->qb : -q->qa;
      double outside = side == 0 ? -q->qa : q->qb;
      bool linked = inside > kLinkTol && outside > kLinkTol && len - inside > kLinkTol;
      if (linked) {
        q->base = z;
        rep.linked.push_back(*q);
      }
    }
  }
  rep.nested = rep.linked.empty();

  if (pairwise_orders > 0) {
    // all pre-images by inverse-branch recursion, each step one application of f
    struct Piece {
      double lo, hi;
      std::size_t order;
    };
    std::vector<Piece> all;
    std::vector<Interval> level{V};
    for (std::size_t step = 1; step <= src.ell * pairwise_orders; ++step) {
      std::vector<Interval> next;
      for (const Interval& I : level) {
        double mid = 0.5 * (I.lo + I.hi);
        for (std::size_t b = 0; b < map.branches().size(); ++b) {
          double lo_raw = std::min(map.raw_left(b), map.raw_right(b));
          double hi_raw = std::max(map.raw_left(b), map.raw_right(b));
          for (int k = map.circle() ? -2 : 0; k <= (map.circle() ? 2 : 0); ++k) {
            double m = mid + k;
            if (!(m >= lo_raw && m < hi_raw)) continue;
            double w = map.invert(b, m);
            double fw = map.apply(w);
            auto a = map.local_inverse(w, fw + (I.lo - mid));
            auto c = map.local_inverse(w, fw + (I.hi - mid));
            if (!a || !c) continue;
            Interval J{std::min(*a, *c), std::max(*a, *c)};
            if (critical_inside(map, 0.0, J.lo, J.hi)) continue;
            if (map.circle()) {
              double s = std::floor(J.lo);
              J.lo -= s;
              J.hi -= s;
            }
            next.push_back(J);
          }
        }
      }
      if (next.size() > cap) throw Error(ErrorKind::CapExceeded, "pre-image enumeration exceeds the cap");
      level = std::move(next);
      if (step % src.ell == 0)
        for (const Interval& I : level) all.push_back({I.lo, I.hi, step / src.ell});
    }
    all.push_back({V.lo, V.hi, 0});
    if (map.circle()) {
      std::size_t n0 = all.size();
      for (std::size_t i = 0; i < n0; ++i)
        if (all[i].hi > 1.0) all.push_back({all[i].lo - 1.0, all[i].hi - 1.0, all[i].order});
    }
    std::sort(all.begin(), all.end(), [](const Piece& a, const Piece& b) { return a.lo < b.lo; });
    rep.enumerated = all.size();
    const double tol = 1e-13;
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = i + 1; j < all.size() && all[j].lo < all[i].hi - tol; ++j) {
        const Piece &a = all[i], &b = all[j];
        bool b_in_a = b.lo >= a.lo - tol && b.hi <= a.hi + tol;
        bool a_in_b = a.lo >= b.lo - tol && a.hi <= b.hi + tol;
        if (!(a_in_b || b_in_a) || a.order == b.order) ++rep.pairwise_violations;
      }
    if (rep.pairwise_violations) rep.nested = false;
  }
  return rep;
}

std::size_t GlobalPartition::atom_of(double x) const {
  if (circle) x = circle_reduce(x);
  auto it = std::upper_bound(piece_index.begin(), piece_index.end(), x,
                             [](double v, const std::pair<Interval, std::size_t>& e) { return v < e.first.lo; });
  if (it == piece_index.begin()) return npos;
  --it;
  if (x > it->first.lo && x < it->first.hi) return it->second;
  return npos;
}

bool GlobalPartition::covers_three_quarter_balls() const {
  for (std::size_t i = 0; i < centers.size(); ++i) {
    double lo = centers[i] - 0.75 * r, hi = centers[i] + 0.75 * r;
    if (!circle) {
      lo = std::max(lo, 0.0);
      hi = std::min(hi, 1.0);
    }
    const Arc& c = cover[i];
    double shift = circle ? std::round(centers[i] - c.mid()) : 0.0;
    if (!(c.lo + shift <= lo + 1e-12 && c.hi + shift >= hi - 1e-12)) return false;
  }
  return true;
}

GlobalPartition build_global_partition(const MapSystem& map, double r, const TimeSource& src,
                                       std::optional<std::size_t> n_max) {
  if (!(r > 0 && r < 0.25)) throw Error(ErrorKind::HypothesisFail, "partition radius must lie in (0, 1/4)");
  if (src.kind != TimeKind::Every && !(2.0 * r <= src.delta))
    throw Error(ErrorKind::HypothesisFail, "partition needs 2r <= delta");
  ZoomingContraction a = src.induced();
  for (double rt : {r, 4.0 * r})
    if (a.total(rt) > rt / 8.0)
      throw Error(ErrorKind::HypothesisFail, "sum of alpha_{ell n}(" + std::to_string(rt) + ") exceeds r/8");
  GlobalPartition gp;
  gp.r = r;
  gp.ell = src.ell;
  gp.circle = map.circle();
  double h = r / 2;
  std::size_t count = map.circle() ? static_cast<std::size_t>(std::floor((1.0 - h) / h + 1e-9)) + 1
                                   : static_cast<std::size_t>(std::floor(1.0 / h + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) gp.centers.push_back(static_cast<double>(i) * h);
  for (double q : gp.centers) gp.anchors.push_back(ball(map, q, r));
  std::size_t N = n_max ? *n_max : default_order_cap(src, r);
  gp.closure = enumerate_chain_closure(map, gp.anchors, src, N);
  gp.closure.tail_bound = a.tail(2.0 * r, N);
  std::vector<Region> delta_regions;
  for (std::size_t i = 0; i < gp.centers.size(); ++i) {
    const Interval& c = gp.closure.cores[i];
    Arc core{c.lo, c.hi, !map.circle() && c.lo <= 0.0, !map.circle() && c.hi >= 1.0};
    if (!(c.hi > c.lo)) core = Arc{gp.centers[i], gp.centers[i], false, false};
    gp.cover.push_back(core);
    delta_regions.push_back(Region::from_arc(core, map.circle()));
  }
  // atoms: classes of points with the same set of Delta_i containing them
  std::vector<double> bps;
  for (const Arc& c : gp.cover) {
    bps.push_back(map.circle() ? circle_reduce(c.lo) : c.lo);
    bps.push_back(map.circle() ? circle_reduce(c.hi) : c.hi);
  }
  bps.push_back(0.0);
  if (!map.circle()) bps.push_back(1.0);
  std::sort(bps.begin(), bps.end());
  std::vector<double> u;
  for (double b : bps)
    if (u.empty() || b - u.back() > kMergeTol) u.push_back(b);
  if (map.circle() && u.size() > 1 && 1.0 - u.back() <= kMergeTol) u.pop_back();
  auto signature = [&](double x) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < delta_regions.size(); ++i)
      if (delta_regions[i].contains(x)) s.push_back(i);
    return s;
  };
  std::map<std::vector<std::size_t>, Region> classes;
  auto add = [&](const std::vector<std::size_t>& sig, const Region& piece) {
    if (sig.empty()) return;
    auto it = classes.find(sig);
    if (it == classes.end()) classes.emplace(sig, piece);
    else it->second = it->second.unite(piece);
  };
  std::size_t m = u.size();
  for (std::size_t k = 0; k < m; ++k) {
    double lo = u[k];
    double hi = k + 1 < m ? u[k + 1] : (map.circle() ? u[0] + 1.0 : 1.0);
    if (!map.circle() && k + 1 == m) {
      add(signature(lo), Region::closed_arc(lo, lo, false));
      break;
    }
    add(signature(map.circle() ? circle_reduce(lo) : lo), Region::closed_arc(lo, lo, map.circle()));
    double mid = 0.5 * (lo + hi);
    add(signature(map.circle() ? circle_reduce(mid) : mid), Region::open_arc(lo, hi, map.circle()));
  }
  for (auto& [sig, reg] : classes) gp.atoms.push_back({reg, sig});
  for (std::size_t i = 0; i < gp.atoms.size(); ++i)
    for (const Arc& c : gp.atoms[i].region.interior().components()) {
      if (c.hi > 1.0) {
        gp.piece_index.push_back({{c.lo, 1.0}, i});
        gp.piece_index.push_back({{0.0, c.hi - 1.0}, i});
      } else {
        gp.piece_index.push_back({{c.lo, c.hi}, i});
      }
    }
  std::sort(gp.piece_index.begin(), gp.piece_index.end(),
            [](const auto& a, const auto& b) { return a.first.lo < b.first.lo; });
  return gp;
}

namespace {

std::vector<double> preimages(const MapSystem& map, double y) {
  std::vector<double> out;
  for (std::size_t b = 0; b < map.branches().size(); ++b) {
    double lo = std::min(map.raw_left(b), map.raw_right(b));
    double hi = std::max(map.raw_left(b), map.raw_right(b));
    for (int k = map.circle() ? -2 : 0; k <= (map.circle() ? 2 : 0); ++k) {
      double t = y + k;
      if (t >= lo && t <= hi) out.push_back(map.reduce(map.invert(b, t)));
    }
  }
  return out;
}

void dedupe(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  std::vector<double> u;
  for (double x : v)
    if (u.empty() || x - u.back() > kMergeTol) u.push_back(x);
  v = std::move(u);
}

}  // namespace

GlobalPartition build_invariant_partition(const MapSystem& map, const std::vector<double>& seeds, double r,
                                          std::size_t ell, std::size_t max_depth) {
  if (!(r > 0)) throw Error(ErrorKind::HypothesisFail, "partition gap bound must be positive");
  if (seeds.empty()) throw Error(ErrorKind::HypothesisFail, "need at least one seed point");
  std::vector<double> B, frontier;
  for (double s : seeds) B.push_back(map.reduce(s));
  if (!map.circle()) {
    B.push_back(0.0);
    B.push_back(1.0);
  }
  dedupe(B);
  frontier = B;
  auto widest = [&] {
    double g = 0.0;
    for (std::size_t i = 0; i + 1 < B.size(); ++i) g = std::max(g, B[i + 1] - B[i]);
    if (map.circle()) g = std::max(g, B.front() + 1.0 - B.back());
    return g;
  };
  std::size_t depth = 0;
  while (widest() > r) {
    if (++depth > max_depth) throw Error(ErrorKind::CapExceeded, "backward orbits do not refine below r");
    std::vector<double> next;
    for (double y : frontier)
      for (double x : preimages(map, y)) next.push_back(x);
    dedupe(next);
    std::vector<double> fresh;
    for (double x : next) {
      auto it = std::lower_bound(B.begin(), B.end(), x - kMergeTol);
      if (it == B.end() || *it > x + kMergeTol) fresh.push_back(x);
    }
    B.insert(B.end(), fresh.begin(), fresh.end());
    dedupe(B);
    frontier = std::move(fresh);
    if (frontier.empty()) throw Error(ErrorKind::HypothesisFail, "backward orbits of the seeds are finite");
  }
  // forward invariance
  for (double b : B) {
    double y = map.reduce(map.apply(b));
    auto it = std::lower_bound(B.begin(), B.end(), y - 1e-12);
    bool hit = it != B.end() && std::fabs(*it - y) <= 1e-12;
    if (map.circle() && !hit) hit = (y < 1e-12 && B.front() < 1e-12) || (1.0 - y < 1e-12 && B.front() < 1e-12);
    if (!hit) throw Error(ErrorKind::HypothesisFail, "boundary set is not forward invariant");
  }
  GlobalPartition gp;
  gp.r = r;
  gp.ell = ell;
  gp.circle = map.circle();
  gp.boundary = B;
  std::size_t m = B.size();
  std::size_t pieces = map.circle() ? m : m - 1;
  for (std::size_t k = 0; k < pieces; ++k) {
    double lo = B[k], hi = k + 1 < m ? B[k + 1] : B[0] + 1.0;
    PartitionAtom a{Region::open_arc(lo, hi, map.circle()), {k}};
    gp.atoms.push_back(a);
    if (hi > 1.0) {
      gp.piece_index.push_back({{lo, 1.0}, k});
      gp.piece_index.push_back({{0.0, hi - 1.0}, k});
    } else {
      gp.piece_index.push_back({{lo, hi}, k});
    }
  }
  std::sort(gp.piece_index.begin(), gp.piece_index.end(),
            [](const auto& a, const auto& b) { return a.first.lo < b.first.lo; });
  return gp;
}

}  // namespace nue
