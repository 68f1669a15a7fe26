#include "nue/region.hpp"

#include <algorithm>
#include <cmath>

namespace nue {

double circle_reduce(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

double circle_dist(double x, double y) {
  double d = std::fabs(circle_reduce(x) - circle_reduce(y));
  return std::min(d, 1.0 - d);
}

bool arc_contains_open(const Arc& a, double x, bool circle) {
  if (!circle) return x > a.lo && x < a.hi;
  double off = circle_reduce(x - a.lo);
  return off > 0.0 && off < a.hi - a.lo;
}

bool arcs_linked(const Arc& u, const Arc& v, bool circle) {
  Region ru = Region::open_arc(u.lo, u.hi, circle);
  Region rv = Region::open_arc(v.lo, v.hi, circle);
  return !ru.intersect(rv).empty() && !ru.subtract(rv).empty() && !rv.subtract(ru).empty();
}

Region::Region(bool circle) : circle_(circle), pts_{0.0, 1.0}, pin_{0, 0}, gin_{0} {}

Region Region::everything(bool circle) {
  Region r(circle);
  r.pin_ = {1, 1};
  r.gin_ = {1};
  return r;
}

Region Region::from_arc(const Arc& a0, bool circle) {
  Region r(circle);
  Arc a = a0;
  if (!(a.hi > a.lo)) {
    if (a.hi == a.lo && a.lo_closed && a.hi_closed) {
      // single point
      double p = circle ? circle_reduce(a.lo) : std::clamp(a.lo, 0.0, 1.0);
      Region s(circle);
      s.pts_ = {0.0, 1.0};
      s.pin_ = {0, 0};
      s.gin_ = {0};
      if (p <= kMergeTol || p >= 1.0 - kMergeTol) {
        s.pin_[0] = 1;
        if (circle || p >= 1.0 - kMergeTol) s.pin_[1] = 1;
        if (!circle && p <= kMergeTol) s.pin_[1] = 0;
      } else {
        s.pts_ = {0.0, p, 1.0};
        s.pin_ = {0, 1, 0};
        s.gin_ = {0, 0};
      }
      return s;
    }
    return r;
  }
  if (circle) {
    if (a.hi - a.lo >= 1.0 - kMergeTol) return everything(true);
    double k = std::floor(a.lo);
    a.lo -= k;
    a.hi -= k;
    if (a.lo >= 1.0) {
      a.lo -= 1.0;
      a.hi -= 1.0;
    }
    if (a.hi > 1.0 + kMergeTol) {
      Arc left{a.lo, 1.0, a.lo_closed, true};
      Arc right{0.0, a.hi - 1.0, true, a.hi_closed};
      return from_arc(left, true).unite(from_arc(right, true));
    }
    a.hi = std::min(a.hi, 1.0);
  } else {
    a.lo = std::max(a.lo, 0.0);
    a.hi = std::min(a.hi, 1.0);
    if (!(a.hi > a.lo)) return r;
  }
  std::vector<double> p{0.0};
  std::vector<char> pin{0};
  std::vector<char> gin;
  if (a.lo > kMergeTol) {
    gin.push_back(0);
    p.push_back(a.lo);
    pin.push_back(a.lo_closed);
  } else {
    pin[0] = a.lo_closed;
  }
  gin.push_back(1);
  if (a.hi < 1.0 - kMergeTol) {
    p.push_back(a.hi);
    pin.push_back(a.hi_closed);
    gin.push_back(0);
    p.push_back(1.0);
    pin.push_back(0);
  } else {
    p.push_back(1.0);
    pin.push_back(a.hi_closed);
  }
  r.pts_ = std::move(p);
  r.pin_ = std::move(pin);
  r.gin_ = std::move(gin);
  if (circle) {
    char seam = r.pin_.front() || r.pin_.back();
    r.pin_.front() = r.pin_.back() = seam;
  }
  r.simplify();
  return r;
}

Region Region::open_arc(double lo, double hi, bool circle) {
  return from_arc(Arc{lo, hi, false, false}, circle);
}

Region Region::closed_arc(double lo, double hi, bool circle) {
  return from_arc(Arc{lo, hi, true, true}, circle);
}

double Region::reduce(double x) const {
  if (circle_) return circle_reduce(x);
  return x;
}

bool Region::gap_member(double x) const {
  auto it = std::upper_bound(pts_.begin(), pts_.end(), x);
  if (it == pts_.begin() || it == pts_.end()) return false;
  std::size_t i = static_cast<std::size_t>(it - pts_.begin()) - 1;
  return gin_[i];
}

bool Region::point_member(double p) const {
  auto it = std::lower_bound(pts_.begin(), pts_.end(), p - kMergeTol);
  if (it != pts_.end() && std::fabs(*it - p) <= kMergeTol)
    return pin_[static_cast<std::size_t>(it - pts_.begin())];
  return gap_member(p);
}

bool Region::contains(double x) const {
  double y = reduce(x);
  if (!circle_ && (y < 0.0 || y > 1.0)) return false;
  return point_member(y);
}

bool Region::empty() const {
  for (char c : gin_)
    if (c) return false;
  for (char c : pin_)
    if (c) return false;
  return true;
}

double Region::measure() const {
  double m = 0.0;
  for (std::size_t i = 0; i < gin_.size(); ++i)
    if (gin_[i]) m += pts_[i + 1] - pts_[i];
  return m;
}

void Region::simplify() {
  if (circle_) {
    char seam = pin_.front() || pin_.back();
    pin_.front() = pin_.back() = seam;
  }
  std::vector<double> p{pts_.front()};
  std::vector<char> pin{pin_.front()};
  std::vector<char> gin;
  for (std::size_t i = 1; i + 1 < pts_.size(); ++i) {
    char left = gin_[i - 1];
    char right = gin_[i];
    if (pin_[i] == left && left == right) continue;
    gin.push_back(left);
    p.push_back(pts_[i]);
    pin.push_back(pin_[i]);
  }
  gin.push_back(gin_.back());
  p.push_back(pts_.back());
  pin.push_back(pin_.back());
  pts_ = std::move(p);
  pin_ = std::move(pin);
  gin_ = std::move(gin);
}

template <class Fn>
Region Region::combine(const Region& a, const Region& b, Fn fn) {
  std::vector<double> all(a.pts_);
  all.insert(all.end(), b.pts_.begin(), b.pts_.end());
  std::sort(all.begin(), all.end());
  std::vector<double> pts;
  for (double v : all)
    if (pts.empty() || v - pts.back() > kMergeTol) pts.push_back(v);
  pts.front() = 0.0;
  pts.back() = 1.0;
  if (pts.size() < 2) pts = {0.0, 1.0};
  Region r(a.circle_);
  r.pts_ = pts;
  r.pin_.assign(pts.size(), 0);
  r.gin_.assign(pts.size() - 1, 0);
  for (std::size_t i = 0; i < pts.size(); ++i)
    r.pin_[i] = fn(a.point_member(pts[i]), b.point_member(pts[i]));
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double m = 0.5 * (pts[i] + pts[i + 1]);
    r.gin_[i] = fn(a.gap_member(m), b.gap_member(m));
  }
  r.simplify();
  return r;
}

Region Region::unite(const Region& o) const {
  return combine(*this, o, [](bool x, bool y) { return x || y; });
}

Region Region::intersect(const Region& o) const {
  return combine(*this, o, [](bool x, bool y) { return x && y; });
}

Region Region::subtract(const Region& o) const {
  return combine(*this, o, [](bool x, bool y) { return x && !y; });
}

Region Region::interior() const {
  Region r = *this;
  std::size_t m = pts_.size() - 1;
  for (std::size_t i = 0; i <= m; ++i) {
    bool left = i > 0 ? gin_[i - 1] : (circle_ ? gin_[m - 1] : true);
    bool right = i < m ? gin_[i] : (circle_ ? gin_[0] : true);
    r.pin_[i] = pin_[i] && left && right;
  }
  r.simplify();
  return r;
}

Region Region::closure() const {
  Region r = *this;
  std::size_t m = pts_.size() - 1;
  for (std::size_t i = 0; i <= m; ++i) {
    bool left = i > 0 ? gin_[i - 1] : (circle_ ? gin_[m - 1] : false);
    bool right = i < m ? gin_[i] : (circle_ ? gin_[0] : false);
    r.pin_[i] = pin_[i] || left || right;
  }
  r.simplify();
  return r;
}

bool Region::essentially_open() const {
  Region c = interior().closure();
  return subtract(c).empty();
}

std::vector<Arc> Region::components() const {
  // elements in order: point 0, gap 0, point 1, ..., point m
  std::size_t m = pts_.size() - 1;
  std::size_t n_el = 2 * m + 1;
  auto member = [&](std::size_t e) { return e % 2 == 0 ? pin_[e / 2] != 0 : gin_[e / 2] != 0; };
  std::vector<Arc> out;
  std::size_t e = 0;
  while (e < n_el) {
    if (!member(e)) {
      ++e;
      continue;
    }
    std::size_t f = e;
    while (f + 1 < n_el && member(f + 1)) ++f;
    Arc a;
    a.lo = pts_[e / 2];
    a.lo_closed = (e % 2 == 0);
    if (f % 2 == 0) {
      a.hi = pts_[f / 2];
      a.hi_closed = true;
    } else {
      a.hi = pts_[f / 2 + 1];
      a.hi_closed = false;
    }
    out.push_back(a);
    e = f + 1;
  }
  if (circle_ && out.size() >= 2 && pin_.front()) {
    const Arc& first = out.front();
    const Arc& last = out.back();
    if (first.lo == 0.0 && last.hi == 1.0) {
      Arc merged{last.lo, 1.0 + first.hi, last.lo_closed, first.hi_closed};
      out.erase(out.begin());
      out.back() = merged;
    }
  }
  return out;
}

Arc Region::component_containing(double x) const {
  for (const Arc& a : components()) {
    if (circle_) {
      double off = circle_reduce(x - a.lo);
      bool inside = (off > 0.0 && off < a.hi - a.lo) || (off == 0.0 && a.lo_closed) ||
                    (std::fabs(off - (a.hi - a.lo)) == 0.0 && a.hi_closed);
      if (a.hi - a.lo >= 1.0) inside = true;
      if (inside) return a;
    } else {
      bool inside = (x > a.lo && x < a.hi) || (x == a.lo && a.lo_closed) || (x == a.hi && a.hi_closed);
      if (inside) return a;
    }
  }
  return Arc{x, x, false, false};
}

std::vector<double> Region::boundary() const {
  Region c = closure();
  Region in = interior();
  Region b = c.subtract(in);
  std::vector<double> out;
  for (std::size_t i = 0; i < b.pts_.size(); ++i) {
    if (!b.pin_[i]) continue;
    if (b.circle_ && i + 1 == b.pts_.size()) continue;
    out.push_back(b.pts_[i]);
  }
  return out;
}

}  // namespace nue
