#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nue {

enum class DomainKind { Circle, Interval };

constexpr double kSnapTol = 1e-13;
constexpr double kCriticalTol = 1e-15;

using RealFn = std::function<double(double)>;

// One monotone piece of a piecewise-smooth map. On the circle `eval` may
// return a lift outside [0,1); the map value is its reduction mod 1.
struct Branch {
  double left = 0.0;
  double right = 1.0;
  RealFn eval;
  RealFn deriv;
  RealFn deriv2;   // optional
  RealFn inverse;  // optional closed form on the raw image range
  // optional (p, u) -> eval(p + u) - eval(p) without cancellation
  std::function<double(double, double)> diff;
};

class MapSystem {
 public:
  MapSystem() = default;
  MapSystem(std::string name, DomainKind kind, std::vector<Branch> branches,
            std::vector<double> critical, double beta, double B);

  const std::string& name() const { return name_; }
  DomainKind domain() const { return kind_; }
  bool circle() const { return kind_ == DomainKind::Circle; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<double>& critical_set() const { return critical_; }
  double beta() const { return beta_; }
  double B() const { return B_; }

  double reduce(double x) const;
  double snap(double x) const;
  std::size_t branch_of(double x) const;
  int sign(std::size_t b) const { return sign_[b]; }
  double raw(std::size_t b, double x) const { return branches_[b].eval(x); }
  double raw_left(std::size_t b) const { return img_left_[b]; }
  double raw_right(std::size_t b) const { return img_right_[b]; }
  bool glued_right(std::size_t b) const { return glued_right_[b] != 0; }

  double apply(double x) const;
  double derivative(double x) const;
  double derivative_on(std::size_t b, double x) const { return branches_[b].deriv(x); }
  double second_derivative(double x) const;
  double crit_distance(double x) const;
  double dist(double x, double y) const;

  // x in branch b with raw(b, x) == y_raw; y_raw must lie in the raw image.
  double invert(std::size_t b, double y_raw) const;
  // Continue the inverse branch through p to the lifted target y, which is a
  // lift of a point near apply(p) on the same sheet as apply(p) in [0,1).
  // Crosses glued branch junctions; returns nullopt when the continuation
  // leaves the domain or reaches a fold/discontinuity.
  std::optional<double> local_inverse(double p, double y) const;
  // Offset form of local_inverse: u with f(p + u) = f(p) + v along the same
  // continuation. Relative accuracy is kept for tiny v when the branch
  // supplies `diff`.
  std::optional<double> inverse_offset(double p, double v) const;
  // f(p + u) - f(p) on the branch of p (extended past its ends)
  double forward_offset(double p, double u) const;

 private:
  std::string name_;
  DomainKind kind_ = DomainKind::Interval;
  std::vector<Branch> branches_;
  std::vector<double> critical_;
  double beta_ = 0.0;
  double B_ = 1.0;
  std::vector<int> sign_;
  std::vector<double> img_left_, img_right_;
  std::vector<char> glued_right_;
};

struct OrbitRecord {
  double start = 0.0;
  std::vector<double> points;         // f^j(x), j = 0..n
  std::vector<double> log_inv_deriv;  // log ||Df(f^j x)^{-1}||^{-1}
  std::vector<double> crit_dist;      // dist(f^j x, C)
  std::vector<int> branch_itinerary;
  bool truncated = false;  // last point lies on C
  std::size_t size() const { return points.size(); }
};

OrbitRecord iterate(const MapSystem& map, double x, std::size_t n);
// Like iterate, but an orbit reaching C stops there (truncated) instead of throwing.
OrbitRecord iterate_until_critical(const MapSystem& map, double x, std::size_t n);
// Derivative and critical-distance channels for given orbit points.
OrbitRecord orbit_from_points(const MapSystem& map, const std::vector<double>& points);
double truncated_distance(const MapSystem& map, double x, double delta);
double truncated_distance_value(double d, double delta);

// Skew product (theta, x) -> (d theta mod 1, a0 + alpha sin(2 pi theta) - x^2)
// used only for orbit statistics.
struct VianaMap {
  int d = 17;  // power-of-two degrees collapse theta to 0 in binary floating point
  double a0 = 1.8;
  double alpha = 0.01;
};
OrbitRecord iterate_viana(const VianaMap& v, double theta, double x, std::size_t n);

// Shipped maps.
MapSystem doubling_map();
MapSystem times3_map();
MapSystem tent_map();
MapSystem logistic_map(double a = 4.0);
MapSystem neutral_circle_map();  // g(x) = x + 2x^2 glued into a degree-two circle map
MapSystem map_by_name(const std::string& name);

// Symbolic one-sided shift.
enum class MetricKind { Standard, Polynomial };

struct SymbolicSystem {
  int alphabet_size = 2;
  MetricKind metric = MetricKind::Polynomial;
  std::size_t word_cap = 64;
};

using Word = std::vector<std::uint8_t>;

std::size_t first_difference(const Word& x, const Word& y);  // 1-based, 0 if equal
double symbolic_distance(const SymbolicSystem& sys, const Word& x, const Word& y);
double conformal_derivative(const SymbolicSystem& sys, const Word& x);
Word shift(const Word& x, std::size_t j = 1);

}  // namespace nue
