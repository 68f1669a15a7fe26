#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "nue/contraction.hpp"
#include "nue/dynamics.hpp"

namespace nue {

constexpr double kHyperbolicTol = 1e-12;

double default_b(double beta);

struct HyperbolicParams {
  double sigma = 0.5;
  double epsilon = 0.05;
  double b = 0.4;
  double lambda = 0.3;
  double delta = 0.1;
  double theta = 0.1;
  void validate(double beta) const;  // throws HypothesisFail
};

struct TimeFlags {
  std::vector<char> flag;  // index 0 unused
  std::vector<std::size_t> count;
  std::vector<double> frequency;
  void finalize();
  std::size_t horizon() const { return flag.empty() ? 0 : flag.size() - 1; }
};

TimeFlags detect_hyperbolic_times(const OrbitRecord& orbit, const HyperbolicParams& p);
TimeFlags detect_zooming_times(const MapSystem& map, double x, const ZoomingContraction& alpha, double delta,
                               std::size_t n_max);

struct FrequencyReport {
  double max_prefix_frequency = 0.0;
  std::vector<std::size_t> qualifying;  // n with count(n) >= theta n
  double limsup_estimate = 0.0;         // lower estimate over a geometric grid
};
FrequencyReport frequency_stats(const TimeFlags& flags, double theta);

// Running means indexed by n = 0..N (entry 0 is 0).
std::vector<double> slow_approximation_stat(const OrbitRecord& orbit, double delta);
std::vector<double> expansion_stat(const OrbitRecord& orbit);

// nullopt when no j within the orbit qualifies.
std::optional<std::size_t> first_expanding_moment(const OrbitRecord& orbit, double lambda, double r,
                                                  double epsilon);

// f^{-j}(C) for j < m, sorted; PrecisionLoss past `cap` points.
std::vector<double> critical_preimages(const MapSystem& map, std::size_t m, std::size_t cap);

struct TransportReport {
  bool holds = true;
  std::size_t prefixes_checked = 0;
  std::size_t violations = 0;
  std::size_t first_violation = 0;
  double max_ratio = 0.0;  // lhs / rhs over prefixes with lhs > 0
};
TransportReport check_transport_inequality(const MapSystem& map, const OrbitRecord& orbit, std::size_t m,
                                           double delta, double K);

struct EllCertificate {
  std::size_t ell = 1;
  double ratio = 0.0;   // e^{-lambda ell / 8}
  double series = 0.0;  // sum_{n>=1} ratio^n
  bool certified = false;
};
EllCertificate compute_ell(double lambda);

// Smallest k with sum_n alpha_{kn}(s) <= s/8 for s in {r, 4r}.
std::size_t ell_for_contraction(const ZoomingContraction& alpha, double r, std::size_t max_ell = 1000);

TimeFlags sub_collection_filter(const TimeFlags& flags, std::size_t ell);

}  // namespace nue
