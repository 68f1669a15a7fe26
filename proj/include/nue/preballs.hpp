#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "nue/contraction.hpp"
#include "nue/dynamics.hpp"
#include "nue/zooming.hpp"

namespace nue {

constexpr double kCertTol = 1e-9;
constexpr int kCertGrid = 17;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

using Itinerary = std::vector<int>;

// W with f^n(W) = target following the branches in order; BranchEscape when a
// step leaves the branch image. Circle targets are lifts; lo may be < 0.
Interval pull_back(const MapSystem& map, const Itinerary& path, Interval target);

struct PreBall {
  double base = 0.0;
  std::size_t order = 0;
  Interval interval;  // V_n(x), lifted around base
  Interval offset;    // V_n(x) - base, kept separately for tiny pre-balls
  Interval image;     // B_delta(f^n x), clipped to [0,1] on the interval
  double cert = 0.0;  // sampled max of dist_j / alpha_{n-j}(dist_n)
  int orientation = 1;
  bool sampled = true;
};

struct PreBallAttempt {
  bool ok = false;
  PreBall ball;
  std::string reason;
};

// Non-throwing form on a precomputed orbit through index >= n.
PreBallAttempt certify_preball(const MapSystem& map, const OrbitRecord& orbit, std::size_t n, double delta,
                               const ZoomingContraction& alpha);
// Throws NotAZoomingTime on failure, CriticalHit if the orbit hits C.
PreBall build_preball(const MapSystem& map, double x, std::size_t n, double delta,
                      const ZoomingContraction& alpha);

// Pull back offsets from f^n x along the orbit; levels[j][k] is an offset
// from orbit.points[j]. Empty result when a continuation fails.
std::vector<std::vector<double>> pull_back_offsets(const MapSystem& map, const OrbitRecord& orbit, std::size_t n,
                                                   const std::vector<double>& offsets);

struct ReferenceMeasure {
  std::string name = "lebesgue";
  std::function<double(const MapSystem&, double)> log_jacobian;  // empty means log|f'|
};

double distortion_estimate(const MapSystem& map, const PreBall& ball, const ReferenceMeasure& measure,
                           int grid = 33);

struct DeltaChoice {
  double delta = 0.0;
  bool found = false;
  std::vector<std::pair<double, double>> success;  // (candidate, certified fraction)
};

// Largest delta in {0.3, 0.2, 0.1, 0.05, 0.02} for which >= 90% of detected
// hyperbolic times on a uniform sample admit certified pre-balls with
// alpha_n(r) = sigma^{n/2} r.
DeltaChoice choose_delta(const MapSystem& map, const HyperbolicParams& p, std::size_t points = 1000,
                         std::size_t orbit_length = 60, std::uint64_t seed = 1);

}  // namespace nue
