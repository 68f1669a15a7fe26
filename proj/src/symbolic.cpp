#include <cmath>

#include "nue/dynamics.hpp"
#include "nue/errors.hpp"

namespace nue {

std::size_t first_difference(const Word& x, const Word& y) {
  std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] != y[i]) return i + 1;
  return 0;
}

double symbolic_distance(const SymbolicSystem& sys, const Word& x, const Word& y) {
  if (x.size() != y.size() || x.size() > sys.word_cap)
    throw Error(ErrorKind::InvalidScenario, "words must have equal length within word_cap");
  std::size_t phi = first_difference(x, y);
  if (phi == 0) return 0.0;
  if (sys.metric == MetricKind::Polynomial) {
    double p = static_cast<double>(phi);
    return 1.0 / (p * p);
  }
  // exact dyadic sum, accumulated from the tail so that small terms are not lost
  double d = 0.0;
  for (std::size_t i = x.size(); i-- > phi - 1;)
    d += std::fabs(static_cast<double>(x[i]) - static_cast<double>(y[i])) * std::ldexp(1.0, -static_cast<int>(i + 1));
  return d;
}

Word shift(const Word& x, std::size_t j) {
  if (j >= x.size()) return {};
  return Word(x.begin() + static_cast<std::ptrdiff_t>(j), x.end());
}

double conformal_derivative(const SymbolicSystem& sys, const Word& x) {
  if (x.size() < 2) throw Error(ErrorKind::InvalidScenario, "conformal derivative needs words of length >= 2");
  // ratio d(sx, sy) / d(x, y) for y differing from x only at the deepest position k
  std::size_t k = x.size();
  Word y = x;
  y[k - 1] = static_cast<std::uint8_t>((y[k - 1] + 1) % sys.alphabet_size);
  double ratio = symbolic_distance(sys, shift(x), shift(y)) / symbolic_distance(sys, x, y);
  if (sys.metric == MetricKind::Standard) return ratio;
  // polynomial metric: the ratio at depth k is (k/(k-1))^2, whose limit is 1
  double kk = static_cast<double>(k);
  double expected = (kk / (kk - 1.0)) * (kk / (kk - 1.0));
  if (std::fabs(ratio - expected) > 1e-12 * expected)
    throw Error(ErrorKind::PrecisionLoss, "polynomial metric ratio does not match its closed form");
  return 1.0;
}

}  // namespace nue
