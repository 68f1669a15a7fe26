#include "nue/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nue/errors.hpp"
#include "nue/region.hpp"

namespace nue {

MapSystem::MapSystem(std::string name, DomainKind kind, std::vector<Branch> branches,
                     std::vector<double> critical, double beta, double B)
    : name_(std::move(name)),
      kind_(kind),
      branches_(std::move(branches)),
      critical_(std::move(critical)),
      beta_(beta),
      B_(B) {
  if (branches_.empty()) throw Error(ErrorKind::ConfigError, "map '" + name_ + "' has no branches");
  std::sort(branches_.begin(), branches_.end(),
            [](const Branch& a, const Branch& b) { return a.left < b.left; });
  if (std::fabs(branches_.front().left) > kSnapTol || std::fabs(branches_.back().right - 1.0) > kSnapTol)
    throw Error(ErrorKind::ConfigError, "branches of '" + name_ + "' do not cover [0,1]");
  for (std::size_t i = 0; i + 1 < branches_.size(); ++i)
    if (std::fabs(branches_[i].right - branches_[i + 1].left) > kSnapTol)
      throw Error(ErrorKind::ConfigError, "branches of '" + name_ + "' leave a gap or overlap");
  std::size_t n = branches_.size();
  sign_.resize(n);
  img_left_.resize(n);
  img_right_.resize(n);
  glued_right_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Branch& br = branches_[i];
    if (!br.eval || !br.deriv)
      throw Error(ErrorKind::ConfigError, "branch " + std::to_string(i) + " lacks f or f'");
    img_left_[i] = br.eval(br.left);
    img_right_[i] = br.eval(br.right);
    sign_[i] = img_right_[i] >= img_left_[i] ? 1 : -1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + 1;
    if (j == n) {
      if (!circle()) continue;
      j = 0;
    }
    if (sign_[i] != sign_[j]) continue;
    double gap = img_right_[i] - img_left_[j];
    if (circle()) gap -= std::round(gap);
    if (std::fabs(gap) <= 1e-12) glued_right_[i] = 1;
  }
  std::sort(critical_.begin(), critical_.end());
}

double MapSystem::reduce(double x) const {
  if (circle()) return circle_reduce(x);
  return std::clamp(x, 0.0, 1.0);
}

double MapSystem::snap(double x) const {
  for (const Branch& b : branches_) {
    if (std::fabs(x - b.left) < kSnapTol) return b.left;
    if (std::fabs(x - b.right) < kSnapTol) return circle() && b.right == 1.0 ? 0.0 : b.right;
  }
  return x;
}

std::size_t MapSystem::branch_of(double x) const {
  double y = snap(reduce(x));
  std::size_t n = branches_.size();
  for (std::size_t i = 0; i < n; ++i)
    if (y >= branches_[i].left && y < branches_[i].right) return i;
  return n - 1;
}

double MapSystem::apply(double x) const {
  double y = snap(reduce(x));
  std::size_t b = branch_of(y);
  return reduce(branches_[b].eval(y));
}

double MapSystem::derivative(double x) const {
  double y = snap(reduce(x));
  return branches_[branch_of(y)].deriv(y);
}

double MapSystem::second_derivative(double x) const {
  double y = snap(reduce(x));
  const Branch& b = branches_[branch_of(y)];
  if (b.deriv2) return b.deriv2(y);
  double h = 1e-6;
  double lo = std::max(b.left, y - h), hi = std::min(b.right, y + h);
  return (b.deriv(hi) - b.deriv(lo)) / (hi - lo);
}

double MapSystem::crit_distance(double x) const {
  if (critical_.empty()) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (double c : critical_) best = std::min(best, dist(x, c));
  return best;
}

double MapSystem::dist(double x, double y) const {
  if (circle()) return circle_dist(x, y);
  return std::fabs(x - y);
}

double MapSystem::invert(std::size_t b, double y) const {
  const Branch& br = branches_[b];
  double lo_raw = std::min(img_left_[b], img_right_[b]);
  double hi_raw = std::max(img_left_[b], img_right_[b]);
  y = std::clamp(y, lo_raw, hi_raw);
  if (br.inverse) return std::clamp(br.inverse(y), br.left, br.right);
  double lo = br.left, hi = br.right;
  int s = sign_[b];
  for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + std::fabs(lo)); ++it) {
    double mid = 0.5 * (lo + hi);
    double v = br.eval(mid) - y;
    if (v * s < 0) lo = mid;
    else hi = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 2; ++it) {
    double d = br.deriv(x);
    if (d == 0.0 || !std::isfinite(d)) break;
    double nx = x - (br.eval(x) - y) / d;
    if (nx < br.left || nx > br.right) break;
    x = nx;
  }
  return x;
}

std::optional<double> MapSystem::local_inverse(double p0, double y) const {
  double p = snap(reduce(p0));
  std::size_t b = branch_of(p);
  double fp_raw = branches_[b].eval(p);
  double fp = circle() ? circle_reduce(fp_raw) : fp_raw;
  // y is taken on the sheet nearest fp
  if (circle()) y -= std::round(y - fp);
  double t = y + (fp_raw - fp);
  double offset = 0.0;
  std::size_t n = branches_.size();
  for (std::size_t iter = 0; iter <= n + 1; ++iter) {
    double lo_raw = std::min(img_left_[b], img_right_[b]);
    double hi_raw = std::max(img_left_[b], img_right_[b]);
    double tol = 1e-13 * (1.0 + std::fabs(t));
    if (t >= lo_raw - tol && t <= hi_raw + tol) {
      double x = invert(b, t) + offset;
      if (std::fabs(x - p) >= 1.0) return std::nullopt;
      return x;
    }
    bool right = sign_[b] > 0 ? t > hi_raw : t < lo_raw;
    if (right) {
      if (!glued_right_[b]) return std::nullopt;
      std::size_t nb = (b + 1) % n;
      if (b == n - 1) offset += 1.0;
      t = t - img_right_[b] + img_left_[nb];
      b = nb;
    } else {
      std::size_t pb = (b + n - 1) % n;
      if (!glued_right_[pb] || (b == 0 && !circle())) return std::nullopt;
      if (b == 0) offset -= 1.0;
      t = t - img_left_[b] + img_right_[pb];
      b = pb;
    }
  }
  return std::nullopt;
}

std::optional<double> MapSystem::inverse_offset(double p0, double v) const {
  double p = snap(reduce(p0));
  std::size_t b = branch_of(p);
  if (v == 0.0) return 0.0;
  auto fallback = [&]() -> std::optional<double> {
    const Branch& br = branches_[branch_of(p)];
    double fp = br.eval(p);
    double fr = circle() ? circle_reduce(fp) : fp;
    auto x = local_inverse(p, fr + v);
    if (!x) return std::nullopt;
    return *x - p;
  };
  // w in [left - c, right - c] of branch k with diff(c, w) = t
  auto solve = [&](std::size_t k, double c, double t) {
    const Branch& br = branches_[k];
    double ua = br.left - c, ub = br.right - c;
    int s = sign_[k];
    auto g = [&](double u) { return s * (br.diff(c, u) - t); };
    if (g(ua) >= 0) return ua;
    if (g(ub) <= 0) return ub;
    double d0 = br.deriv(c);
    double u = (d0 != 0.0 && std::isfinite(d0)) ? t / d0 : 0.5 * (ua + ub);
    if (!(u > ua && u < ub)) u = 0.5 * (ua + ub);
    for (int it = 0; it < 200; ++it) {
      double gu = g(u);
      if (gu == 0.0) break;
      if (gu < 0) ua = u;
      else ub = u;
      double d = s * br.deriv(c + u);
      double nu = (d > 0 && std::isfinite(d)) ? u - gu / d : 0.5 * (ua + ub);
      if (!(nu > ua && nu < ub)) nu = 0.5 * (ua + ub);
      if (std::fabs(nu - u) <= 4e-16 * std::fabs(u) || ub - ua <= 4e-16 * std::fabs(u)) {
        u = nu;
        break;
      }
      u = nu;
    }
    return u;
  };
  const std::size_t n = branches_.size();
  double cur = p, acc = 0.0;
  // glued junctions are crossed in offset form so tiny offsets keep their relative accuracy
  for (std::size_t guard = 0; guard <= n + 1; ++guard) {
    const Branch& br = branches_[b];
    if (!br.diff) return fallback();
    double fc = br.eval(cur);
    double ra = img_left_[b] - fc, rb = img_right_[b] - fc;
    double lo_v = std::min(ra, rb), hi_v = std::max(ra, rb);
    if (v >= lo_v && v <= hi_v) return acc + solve(b, cur, v);
    bool to_right = (sign_[b] > 0) == (v > hi_v);
    if (to_right) {
      if (!glued_right_[b] || (b + 1 == n && !circle())) return std::nullopt;
      v -= br.diff(cur, br.right - cur);
      acc += br.right - cur;
      b = (b + 1) % n;
      cur = branches_[b].left;
    } else {
      std::size_t pb = (b + n - 1) % n;
      if (!glued_right_[pb] || (b == 0 && !circle())) return std::nullopt;
      v -= br.diff(cur, br.left - cur);
      acc += br.left - cur;
      b = pb;
      cur = branches_[b].right;
    }
    if (std::fabs(acc) >= 1.0) return std::nullopt;
  }
  return std::nullopt;
}

double MapSystem::forward_offset(double p0, double u) const {
  double cur = snap(reduce(p0));
  std::size_t b = branch_of(cur);
  double rem = u, total = 0.0;
  auto piece = [&](std::size_t k, double c, double w) {
    const Branch& br = branches_[k];
    return br.diff ? br.diff(c, w) : br.eval(c + w) - br.eval(c);
  };
  std::size_t n = branches_.size();
  // walks across glued junctions in offset form; each piece uses its own branch formula
  for (std::size_t guard = 0; guard < 4 * n + 4; ++guard) {
    const Branch& br = branches_[b];
    double to_left = br.left - cur, to_right = br.right - cur;
    if (rem >= to_left && rem <= to_right) return total + piece(b, cur, rem);
    if (rem > to_right) {
      total += piece(b, cur, to_right);
      rem -= to_right;
      if (b + 1 == n && !circle()) return total;
      b = (b + 1) % n;
      cur = branches_[b].left;
    } else {
      total += piece(b, cur, to_left);
      rem -= to_left;
      if (b == 0 && !circle()) return total;
      b = (b + n - 1) % n;
      cur = branches_[b].right;
    }
  }
  return total;
}

OrbitRecord iterate(const MapSystem& map, double x0, std::size_t n) {
  OrbitRecord rec;
  rec.start = x0;
  rec.points.reserve(n + 1);
  rec.log_inv_deriv.reserve(n + 1);
  rec.crit_dist.reserve(n + 1);
  rec.branch_itinerary.reserve(n + 1);
  double x = map.snap(map.reduce(x0));
  for (std::size_t j = 0; j <= n; ++j) {
    std::size_t b = map.branch_of(x);
    double cd = map.crit_distance(x);
    double d = map.derivative_on(b, x);
    rec.points.push_back(x);
    rec.crit_dist.push_back(cd);
    rec.branch_itinerary.push_back(static_cast<int>(b));
    if (cd <= kCriticalTol || d == 0.0) {
      if (j < n) throw CriticalHit(j, x);
      rec.log_inv_deriv.push_back(-std::numeric_limits<double>::infinity());
      rec.truncated = true;
      break;
    }
    rec.log_inv_deriv.push_back(std::log(std::fabs(d)));
    if (j < n) x = map.snap(map.reduce(map.raw(b, x)));
  }
  return rec;
}

OrbitRecord iterate_until_critical(const MapSystem& map, double x, std::size_t n) {
  try {
    return iterate(map, x, n);
  } catch (const CriticalHit& e) {
    return iterate(map, x, e.index);
  }
}

OrbitRecord orbit_from_points(const MapSystem& map, const std::vector<double>& points) {
  OrbitRecord rec;
  rec.start = points.empty() ? 0.0 : points.front();
  for (double x : points) {
    std::size_t b = map.branch_of(x);
    double cd = map.crit_distance(x);
    double d = map.derivative_on(b, map.snap(map.reduce(x)));
    rec.points.push_back(x);
    rec.crit_dist.push_back(cd);
    rec.branch_itinerary.push_back(static_cast<int>(b));
    if (cd <= kCriticalTol || d == 0.0) {
      rec.log_inv_deriv.push_back(-std::numeric_limits<double>::infinity());
      rec.truncated = true;
      break;
    }
    rec.log_inv_deriv.push_back(std::log(std::fabs(d)));
  }
  return rec;
}

double truncated_distance_value(double d, double delta) { return d <= delta ? d : 1.0; }

double truncated_distance(const MapSystem& map, double x, double delta) {
  if (map.critical_set().empty()) return 1.0;
  return truncated_distance_value(map.crit_distance(x), delta);
}

OrbitRecord iterate_viana(const VianaMap& v, double theta, double x, std::size_t n) {
  OrbitRecord rec;
  rec.start = x;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t j = 0; j <= n; ++j) {
    rec.points.push_back(x);
    rec.crit_dist.push_back(std::fabs(x));
    rec.branch_itinerary.push_back(x < 0 ? 0 : 1);
    double a = v.d, c = two_pi * v.alpha * std::cos(two_pi * theta), e = -2.0 * x;
    double frob = a * a + c * c + e * e;
    double det = std::fabs(a * e);
    double disc = std::sqrt(std::max(0.0, frob * frob - 4.0 * det * det));
    double smin = std::sqrt(std::max(0.0, 0.5 * (frob - disc)));
    if (std::fabs(x) <= kCriticalTol) {
      if (j < n) throw CriticalHit(j, x);
      rec.log_inv_deriv.push_back(-std::numeric_limits<double>::infinity());
      rec.truncated = true;
      break;
    }
    // smin underflows for tiny |x|; det / smax is the accurate form
    double smax = std::sqrt(0.5 * (frob + disc));
    rec.log_inv_deriv.push_back(smin > 1e-8 ? std::log(smin) : std::log(det / smax));
    double nx = v.a0 + v.alpha * std::sin(two_pi * theta) - x * x;
    theta = circle_reduce(v.d * theta);
    x = nx;
  }
  return rec;
}

}  // namespace nue
