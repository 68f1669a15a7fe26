#include <algorithm>
#include <cmath>

#include "nue/dynamics.hpp"
#include "nue/errors.hpp"

namespace nue {

namespace {

Branch affine(double left, double right, double slope, double offset) {
  Branch b;
  b.left = left;
  b.right = right;
  b.eval = [=](double x) { return slope * x + offset; };
  b.deriv = [=](double) { return slope; };
  b.deriv2 = [](double) { return 0.0; };
  b.inverse = [=](double y) { return (y - offset) / slope; };
  b.diff = [=](double, double u) { return slope * u; };
  return b;
}

}  // namespace

MapSystem doubling_map() {
  return MapSystem("doubling", DomainKind::Circle,
                   {affine(0.0, 0.5, 2.0, 0.0), affine(0.5, 1.0, 2.0, -1.0)}, {}, 0.0, 2.0);
}

MapSystem times3_map() {
  return MapSystem("times3", DomainKind::Circle,
                   {affine(0.0, 1.0 / 3.0, 3.0, 0.0), affine(1.0 / 3.0, 2.0 / 3.0, 3.0, -1.0),
                    affine(2.0 / 3.0, 1.0, 3.0, -2.0)},
                   {}, 0.0, 3.0);
}

MapSystem tent_map() {
  return MapSystem("tent", DomainKind::Interval,
                   {affine(0.0, 0.5, 2.0, 0.0), affine(0.5, 1.0, -2.0, 2.0)}, {}, 0.0, 2.0);
}

MapSystem logistic_map(double a) {
  Branch l, r;
  l.left = 0.0;
  l.right = 0.5;
  r.left = 0.5;
  r.right = 1.0;
  auto f = [a](double x) { return a * x * (1.0 - x); };
  auto df = [a](double x) { return a * (1.0 - 2.0 * x); };
  auto d2f = [a](double) { return -2.0 * a; };
  l.eval = r.eval = f;
  l.diff = r.diff = [a](double x, double u) { return a * u * (1.0 - 2.0 * x - u); };
  l.deriv = r.deriv = df;
  l.deriv2 = r.deriv2 = d2f;
  // 1 - 4y/a can round slightly negative at the critical value
  l.inverse = [a](double y) {
    return 2.0 * (y / a) / (1.0 + std::sqrt(std::max(0.0, 1.0 - 4.0 * y / a)));
  };
  r.inverse = [a](double y) { return 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - 4.0 * y / a))); };
  // |f'(x)| = 2a dist(x, 1/2): the bounds hold with beta = 1, B = 2a
  return MapSystem("logistic", DomainKind::Interval, {l, r}, {0.5}, 1.0, 2.0 * a);
}

MapSystem neutral_circle_map() {
  Branch l, r;
  l.left = 0.0;
  l.right = 0.5;
  r.left = 0.5;
  r.right = 1.0;
  auto g = [](double x) { return x + 2.0 * x * x; };
  auto ginv = [](double y) { return (std::sqrt(1.0 + 8.0 * y) - 1.0) / 4.0; };
  l.eval = g;
  l.deriv = [](double x) { return 1.0 + 4.0 * x; };
  l.deriv2 = [](double) { return 4.0; };
  l.inverse = ginv;
  r.eval = [g](double x) { return 1.0 - g(1.0 - x); };
  r.deriv = [](double x) { return 1.0 + 4.0 * (1.0 - x); };
  r.deriv2 = [](double) { return -4.0; };
  r.inverse = [ginv](double y) { return 1.0 - ginv(1.0 - y); };
  // g(x+u) - g(x) = u (1 + 4x + 2u); the right branch is its reflection
  l.diff = [](double x, double u) { return u * (1.0 + 4.0 * x + 2.0 * u); };
  r.diff = [](double x, double u) { return u * (1.0 + 4.0 * (1.0 - x) - 2.0 * u); };
  return MapSystem("neutral", DomainKind::Circle, {l, r}, {}, 0.0, 3.0);
}

MapSystem map_by_name(const std::string& name) {
  if (name == "doubling") return doubling_map();
  if (name == "times3") return times3_map();
  if (name == "tent") return tent_map();
  if (name == "logistic") return logistic_map(4.0);
  if (name == "neutral") return neutral_circle_map();
  throw Error(ErrorKind::ConfigError, "unknown map preset '" + name + "'");
}

}  // namespace nue
