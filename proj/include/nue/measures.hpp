#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nue/dynamics.hpp"
#include "nue/preballs.hpp"
#include "nue/region.hpp"
#include "nue/rng.hpp"
#include "nue/tower.hpp"

namespace nue {

struct DensityOptions {
  std::size_t grid = 1u << 14;  // cells over the image
  double tol = 1e-9;            // L1 change between sweeps
  std::size_t max_iter = 10000;
  std::size_t max_entries = std::size_t(1) << 27;  // atoms * (grid + 1)
};

// F-invariant probability on a local tower's image. The density is taken
// against normalized Lebesgue on the image (so it is 1 when nu is uniform),
// piecewise linear on a uniform grid.
struct TowerMeasure {
  const InducedMarkovMap* tower = nullptr;  // must outlive the measure
  std::string reference = "lebesgue";
  Interval domain;
  std::vector<double> density;    // node values, grid + 1 of them
  std::vector<double> atom_mass;  // nu(P), sums to 1 over retained atoms
  double mean_R = 0.0;            // integral of R dnu, f-steps
  double defect = 0.0;            // 1 - raw mass carried by retained atoms
  double residual = 0.0;          // L1 change of the last sweep
  std::size_t iterations = 0;
  double sup_inf_ratio = 0.0;
  double distortion_bound = 0.0;  // e^{K lambda/(lambda-1) |Delta|}, K = Lip(log w) on the grid

  double cell() const { return domain.length() / static_cast<double>(density.size() - 1); }
  double value(double x) const;  // interpolated density, 0 outside the domain
};

TowerMeasure invariant_density(const InducedMarkovMap& tower, const ReferenceMeasure& mu = {},
                               const DensityOptions& opt = {});

// Projected f-invariant measure eta = sum_P sum_{j<R(P)} f^j_*(nu|P) / gamma,
// deposited segment by segment into a histogram on [0,1].
struct ProjectedMeasure {
  std::vector<double> histogram;  // density per bin, integrates to 1
  double total_mass = 0.0;        // before normalization; equals mean_R
  double gamma = 0.0;
  double moment1 = 0.0, moment2 = 0.0;
  double invariance_residual = 0.0;  // max over cos/sin 2 pi k x, k <= 3
  double bins() const { return static_cast<double>(histogram.size()); }
};

ProjectedMeasure project(const TowerMeasure& m, std::size_t bins = 1u << 12);

// L1 distance between two densities on [0,1] given as equal-width histograms.
double histogram_l1(const std::vector<double>& a, const std::vector<double>& b);

// f(x) plus a uniform perturbation in (-2^-51, 2^-51). Plain floating orbits of
// the doubling map reach 0 after 53 steps, and a relative perturbation still
// leaves runs of zero bits after cancellations; an absolute one refills the
// bits that the map shifts out.
double perturbed_step(const MapSystem& map, double x, SplitMix64& rng);

// Birkhoff histogram of one long perturbed orbit (density per bin).
std::vector<double> birkhoff_histogram(const MapSystem& map, double x0, std::size_t n, std::size_t bins,
                                       std::uint64_t seed, std::size_t burn_in = 1000);

// Both sides of the return-count identity along one pseudo-orbit of F.
//   lhs(n) = #{0 <= j < n : f^j x in O_F^+(x)}, by scanning the f-orbit
//   rhs(n) = 1 + #{j >= 0 : R(x) + ... + R(F^j x) < n}
struct LiftabilityReport {
  std::size_t n_reached = 0;  // f-steps covered before the orbit left the atoms
  bool escaped = false;
  std::vector<std::size_t> lhs, rhs;  // indexed by n = 0..n_reached
  bool identity_holds = true;
  std::size_t first_mismatch = 0;
  double frequency = 0.0;                                // lhs(n_reached) / n_reached
  std::vector<std::pair<std::size_t, double>> on_grid;   // (n, lhs(n)/n) on a 2^k grid
};

LiftabilityReport liftability_frequency(const InducedMarkovMap& tower, double x, std::size_t n_max);

// Orbit-local scenario for the counting lemma: point i of the orbit is f^i(x).
// G[i][j] says f^i(x) lies in G_j (j >= 1), B[i] says f^i(x) lies in B, and
// g[i] is the return step used at f^i(x) when it lies in B.
struct CountingScenario {
  std::vector<std::vector<char>> G;
  std::vector<char> B;
  std::vector<std::size_t> g;
  std::size_t horizon() const { return B.size(); }
};

// Throws InvalidScenario when the G closure rule or the bound on g fails.
void validate_scenario(const CountingScenario& s, std::size_t n_max);
// #Gamma_n <= #Sigma_n for every n <= n_max
bool counting_inequality_check(const CountingScenario& s, std::size_t n_max);
CountingScenario random_scenario(SplitMix64& rng, std::size_t n_max, double density = 0.1);

// Finite-time exponents (1/n) log |(f^n)'(x)| over sampled points.
struct LyapunovEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::vector<double> values;
};

LyapunovEstimate lyapunov(const MapSystem& map, const std::function<double(SplitMix64&)>& sampler, std::size_t n,
                          std::size_t samples, std::uint64_t seed);

struct PeriodicOrbit {
  std::vector<double> points;
  std::size_t period = 0;
  double multiplier = 0.0;  // (f^period)'(q)
  double density_gap = 0.0;  // largest distance from a reference point to the orbit
  Itinerary itinerary;
};

// Repelling orbit of least period <= max_period with a point inside `region`.
// For each branch word the inverse composition is iterated from the region's
// midpoint; a limit q with f^p(q) = q, minimal period p and |(f^p)'(q)| > 1
// is accepted. Shorter periods first, then words in lexicographic order.
// Throws NotFound.
PeriodicOrbit find_periodic_repeller(const MapSystem& map, const Interval& region, std::size_t max_period,
                                     const std::vector<double>& reference = {}, std::size_t min_period = 1);

}  // namespace nue
