#pragma once

#include <cstddef>
#include <vector>

#include "nue/rng.hpp"
#include "nue/tower.hpp"

namespace nue {

// Cylinder (Bernoulli) measure on a local tower: atoms are drawn i.i.d. with
// probabilities a_P, so nu(cylinder P_1..P_s) = a_{P_1} ... a_{P_s}.
struct BernoulliMeasure {
  const InducedMarkovMap* tower = nullptr;  // must outlive the measure
  std::vector<double> weights;              // a_P, normalized over the atoms
  double discovered_mass = 0.0;             // sum of the supplied weights
  double mean_R = 0.0;                      // sum a_P R(P), f-steps
  std::vector<double> cdf;                  // of weights
  std::vector<double> biased_cdf;           // of a_P R(P) / mean_R
  std::vector<std::vector<double>> charts;  // base pseudo-orbit of each atom
  double pin_log_jacobian = 45.0;           // pull back until |F^s'| > e^this

  std::size_t draw(SplitMix64& rng) const;
  std::size_t draw_biased(SplitMix64& rng) const;
  double tail(std::size_t n) const;  // nu{R > n}
  double cylinder_mass(const std::vector<std::size_t>& word) const;
};

// Throws WeightMass when the weights sum below 1 - 1e-3, InvalidScenario on a
// non-positive weight or a non-local tower.
BernoulliMeasure bernoulli_tower_measure(const InducedMarkovMap& tower, const std::vector<double>& weights);

// a_P proportional to z^{R(P)/ell}, normalized over the discovered atoms.
std::vector<double> exponential_weights(const InducedMarkovMap& tower, double z);

// One nu-typical point together with its F-itinerary and f-orbit.
struct TowerSample {
  std::vector<std::size_t> atoms;  // a_1, a_2, ...
  std::vector<double> returns;     // F^k(x), k = 0..atoms.size()
  std::vector<double> orbit;       // f^j(start), j = 0..n (reduced)
  std::vector<double> log_deriv;   // log |f'(orbit[j])|, j < n
  std::size_t offset = 0;          // start = f^offset(x)
};

// x ~ nu (stationary = false) or a point of the normalized projection
// (stationary = true: first atom drawn by a_P R(P), then a uniform offset
// j < R). The orbit is realized by nested pull-back, so every f^j lies on
// a true orbit up to rounding of the pull-back. At least min_atoms returns
// are drawn before the pinning tail.
TowerSample sample_tower_orbit(const BernoulliMeasure& m, SplitMix64& rng, std::size_t n, bool stationary,
                               std::size_t min_atoms = 0);

// log|F'| per F-step and R per F-step along sampled F-orbits of nu
struct TowerExponent {
  double log_jacobian_per_return = 0.0;
  double steps_per_return = 0.0;
  double per_step = 0.0;  // ratio of the two; Lyapunov exponent of the projection
  double stderr_ = 0.0;   // of per_step, from the spread over samples
  std::size_t returns = 0;
};

TowerExponent bernoulli_exponent(const BernoulliMeasure& m, std::size_t samples, std::size_t returns_per_sample,
                                 std::uint64_t seed);

// log nu{R > n} against n on [n_lo, n_hi]; rate = e^{slope}
struct TailFit {
  double rate = 0.0;
  double r2 = 0.0;
  std::size_t n_lo = 0, n_hi = 0;
};

TailFit fit_tail(const BernoulliMeasure& m, std::size_t n_lo, std::size_t n_hi, std::size_t step = 1);

}  // namespace nue
