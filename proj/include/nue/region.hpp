#pragma once

#include <vector>

namespace nue {

constexpr double kMergeTol = 1e-12;

// Arc in lifted coordinates: lo < hi, hi - lo <= 1. On the circle lo is
// normalised into [0,1); on the interval both ends lie in [0,1].
struct Arc {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = false;
  bool hi_closed = false;

  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

// Finite union of intervals of [0,1] (or of the circle R/Z) with explicit
// endpoint membership. Stored as breakpoints 0 = p_0 < ... < p_m = 1 together
// with the membership of every breakpoint and of every open gap between them.
class Region {
 public:
  explicit Region(bool circle = false);

  static Region from_arc(const Arc& a, bool circle);
  static Region open_arc(double lo, double hi, bool circle);
  static Region closed_arc(double lo, double hi, bool circle);
  static Region everything(bool circle);

  bool circle() const { return circle_; }
  bool empty() const;
  double measure() const;
  bool contains(double x) const;

  Region unite(const Region& o) const;
  Region intersect(const Region& o) const;
  Region subtract(const Region& o) const;
  Region interior() const;
  Region closure() const;
  bool essentially_open() const;

  // Maximal connected pieces. On the circle, pieces touching the seam are
  // merged and reported with hi > 1.
  std::vector<Arc> components() const;
  // Component containing x, or an empty arc (lo == hi) when x is outside.
  Arc component_containing(double x) const;
  std::vector<double> boundary() const;

  const std::vector<double>& breakpoints() const { return pts_; }

 private:
  template <class Fn>
  static Region combine(const Region& a, const Region& b, Fn fn);
  bool point_member(double p) const;
  bool gap_member(double x) const;
  void simplify();
  double reduce(double x) const;

  bool circle_;
  std::vector<double> pts_;
  std::vector<char> pin_;
  std::vector<char> gin_;
};

// Circle/interval helpers shared by the geometry modules.
double circle_reduce(double x);
double circle_dist(double x, double y);
// True when x lies in the open arc (lo,hi) on the circle.
bool arc_contains_open(const Arc& a, double x, bool circle);
bool arcs_linked(const Arc& u, const Arc& v, bool circle);

}  // namespace nue
