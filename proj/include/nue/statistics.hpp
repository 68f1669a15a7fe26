#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nue/bernoulli.hpp"
#include "nue/dynamics.hpp"
#include "nue/rng.hpp"

namespace nue {

struct Observable {
  std::string name;
  std::function<double(double)> fn;
  double sup = 1.0;  // bound on |fn|
};

// cos2pi, sin2pi, bump (tent of height 1 on [1/4, 3/4]), const, x,
// coboundary (psi o f - psi with psi = cos 2 pi x; needs the map)
Observable observable_by_name(const std::string& name, const MapSystem* map = nullptr);

// Fills orbit[0..n] with a pseudo-orbit drawn from some invariant measure.
using OrbitSampler = std::function<void(SplitMix64& rng, std::size_t n, std::vector<double>& orbit)>;

// Lebesgue start, perturbed iteration (see perturbed_step).
OrbitSampler lebesgue_sampler(const MapSystem& map, std::size_t burn_in = 0);
// Stationary samples of the projected Bernoulli measure.
OrbitSampler bernoulli_sampler(const BernoulliMeasure& m);

struct Fit {
  std::string kind;  // exponential | polynomial | stretched
  double slope = 0.0;
  double intercept = 0.0;
  double gamma = 1.0;  // stretched exponent
  double r2 = 0.0;
  std::size_t points = 0;
  bool ok() const { return points >= 3; }
};

// Least squares of y on x.
Fit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationSeries {
  std::string phi, psi;
  std::vector<double> values;  // Cor(phi, psi o f^n), n = 0..n_max
  std::vector<double> stderr_;
  std::size_t mc = 0;
  std::vector<Fit> fits;  // exponential, polynomial, stretched
  Fit best;
};

// Fits on n in [n_max/4, n_max], using only n with |Cor| > 2 stderr.
void fit_decay(CorrelationSeries& s);

CorrelationSeries correlation(const OrbitSampler& sampler, const Observable& phi, const Observable& psi,
                              std::size_t n_max, std::size_t mc, std::uint64_t seed);

struct CltReport {
  std::size_t n = 0, mc = 0;
  double mean = 0.0;      // of phi
  double variance = 0.0;  // of the normalized sums
  double ks = 0.0;        // to the normal with that variance; 0 when degenerate
  bool degenerate = false;
};

CltReport clt_diagnostic(const OrbitSampler& sampler, const Observable& phi, std::size_t n, std::size_t mc,
                         std::uint64_t seed);

}  // namespace nue
