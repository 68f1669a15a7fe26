#include "nue/preballs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nue/errors.hpp"
#include "nue/rng.hpp"

namespace nue {

Interval pull_back(const MapSystem& map, const Itinerary& path, Interval target) {
  if (target.hi < target.lo) std::swap(target.lo, target.hi);
  const double tol = 1e-13;
  for (std::size_t j = path.size(); j-- > 0;) {
    if (path[j] < 0 || static_cast<std::size_t>(path[j]) >= map.branches().size())
      throw Error(ErrorKind::InvalidScenario, "itinerary names a missing branch");
    std::size_t b = static_cast<std::size_t>(path[j]);
    double lo_raw = std::min(map.raw_left(b), map.raw_right(b));
    double hi_raw = std::max(map.raw_left(b), map.raw_right(b));
    double shift = 0.0;
    bool fits = target.lo >= lo_raw - tol && target.hi <= hi_raw + tol;
    if (!fits && map.circle()) {
      double k = std::floor(lo_raw - target.lo + tol);
      for (double kk : {k, k + 1.0}) {
        if (target.lo + kk >= lo_raw - tol && target.hi + kk <= hi_raw + tol) {
          shift = kk;
          fits = true;
          break;
        }
      }
    }
    if (!fits)
      throw Error(ErrorKind::BranchEscape, "target leaves the image of branch " + std::to_string(b) +
                                               " at step " + std::to_string(j));
    double a = map.invert(b, target.lo + shift);
    double c = map.invert(b, target.hi + shift);
    Interval next{std::min(a, c), std::max(a, c)};
    if (target.hi > target.lo && !(next.hi > next.lo))
      throw Error(ErrorKind::PrecisionLoss, "pulled-back endpoints collapse at step " + std::to_string(j));
    target = next;
  }
  return target;
}

std::vector<std::vector<double>> pull_back_offsets(const MapSystem& map, const OrbitRecord& orbit, std::size_t n,
                                                   const std::vector<double>& offsets) {
  if (orbit.size() <= n) throw Error(ErrorKind::InvalidScenario, "orbit shorter than the requested order");
  std::vector<std::vector<double>> levels(n + 1);
  levels[n] = offsets;
  for (std::size_t j = n; j-- > 0;) {
    levels[j].resize(offsets.size());
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      auto u = map.inverse_offset(orbit.points[j], levels[j + 1][k]);
      if (!u) return {};
      levels[j][k] = *u;
    }
  }
  return levels;
}

namespace {

// offsets of B_delta(y) from y, clipped to [0,1] on the interval
Interval target_offsets(const MapSystem& map, double y, double delta) {
  Interval t{-delta, delta};
  if (!map.circle()) {
    t.lo = std::max(t.lo, -y);
    t.hi = std::min(t.hi, 1.0 - y);
  }
  return t;
}

// a critical point (or a circle lift of one) strictly inside p + (lo, hi)
bool contains_critical(const MapSystem& map, double p, double lo, double hi) {
  for (double c : map.critical_set()) {
    double d = c - p;
    if (map.circle()) d -= std::ceil(d - lo);
    if (d > lo && d < hi) return true;
  }
  return false;
}

}  // namespace

PreBallAttempt certify_preball(const MapSystem& map, const OrbitRecord& orbit, std::size_t n, double delta,
                               const ZoomingContraction& alpha) {
  if (!(delta > 0)) throw Error(ErrorKind::HypothesisFail, "pre-ball radius must be positive");
  if (orbit.size() <= n) throw Error(ErrorKind::InvalidScenario, "orbit shorter than the requested order");
  PreBallAttempt out;
  PreBall& pb = out.ball;
  pb.base = orbit.points[0];
  pb.order = n;
  Interval off = target_offsets(map, orbit.points[n], delta);
  pb.image = {orbit.points[n] + off.lo, orbit.points[n] + off.hi};
  if (map.circle() && 2.0 * delta >= 1.0) {
    out.reason = "ball covers the circle";
    return out;
  }
  std::vector<double> t(kCertGrid);
  for (int k = 0; k < kCertGrid; ++k)
    t[k] = off.lo + off.length() * static_cast<double>(k) / static_cast<double>(kCertGrid - 1);
  t.back() = off.hi;
  auto levels = pull_back_offsets(map, orbit, n, t);
  if (levels.empty()) {
    out.reason = "inverse branch continuation leaves the domain";
    return out;
  }
  int orient = 1;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& L = levels[j];
    int dir = L.back() > L.front() ? 1 : -1;
    for (int k = 1; k < kCertGrid; ++k) {
      if (L[k] == L[k - 1])
        throw Error(ErrorKind::PrecisionLoss, "pre-ball of order " + std::to_string(n) +
                                                  " is below floating-point resolution at step " + std::to_string(j));
      if ((L[k] - L[k - 1]) * dir < 0) {
        out.reason = "pull-back is not monotone at step " + std::to_string(j);
        return out;
      }
    }
    if (contains_critical(map, orbit.points[j], std::min(L.front(), L.back()), std::max(L.front(), L.back()))) {
      out.reason = "pull-back contains a critical point at step " + std::to_string(j);
      return out;
    }
    if (j == 0) orient = dir;
  }
  double cert = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& L = levels[j];
    for (int a = 0; a < kCertGrid; ++a)
      for (int b = a + 1; b < kCertGrid; ++b) {
        double bound = alpha(n - j, t[b] - t[a]);
        double dj = std::fabs(L[b] - L[a]);
        cert = std::max(cert, bound > 0 ? dj / bound : std::numeric_limits<double>::infinity());
      }
  }
  pb.cert = cert;
  pb.orientation = orient;
  pb.offset = {std::min(levels[0].front(), levels[0].back()), std::max(levels[0].front(), levels[0].back())};
  if (n == 0) pb.offset = off;
  pb.interval = {pb.base + pb.offset.lo, pb.base + pb.offset.hi};
  if (cert > 1.0 + kCertTol) {
    out.reason = "sampled contraction certificate " + std::to_string(cert) + " exceeds 1";
    return out;
  }
  out.ok = true;
  return out;
}

PreBall build_preball(const MapSystem& map, double x, std::size_t n, double delta, const ZoomingContraction& alpha) {
  OrbitRecord orbit = iterate(map, x, n);
  PreBallAttempt a = certify_preball(map, orbit, n, delta, alpha);
  if (!a.ok) throw Error(ErrorKind::NotAZoomingTime, "order " + std::to_string(n) + ": " + a.reason);
  return a.ball;
}

double distortion_estimate(const MapSystem& map, const PreBall& ball, const ReferenceMeasure& measure, int grid) {
  if (grid < 2) throw Error(ErrorKind::InvalidScenario, "distortion grid needs >= 2 points");
  std::size_t n = ball.order;
  if (n == 0) return 0.0;
  OrbitRecord orbit = iterate(map, ball.base, n);
  Interval off = {ball.image.lo - orbit.points[n], ball.image.hi - orbit.points[n]};
  std::vector<double> t(static_cast<std::size_t>(grid));
  for (int k = 0; k < grid; ++k)
    t[k] = off.lo + off.length() * (static_cast<double>(k) + 0.5) / static_cast<double>(grid);
  auto levels = pull_back_offsets(map, orbit, n, t);
  if (levels.empty()) throw Error(ErrorKind::NotAZoomingTime, "pre-ball no longer pulls back");
  auto log_jac = [&](double z) {
    if (measure.log_jacobian) return measure.log_jacobian(map, z);
    return std::log(std::fabs(map.derivative(z)));
  };
  std::vector<double> logJ(t.size(), 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < t.size(); ++k) {
      double v = log_jac(map.reduce(orbit.points[j] + levels[j][k]));
      if (!std::isfinite(v)) throw Error(ErrorKind::UndefinedJacobian, "Jacobian vanishes inside the pre-ball");
      logJ[k] += v;
    }
  double rho = 0.0;
  for (std::size_t a = 0; a < t.size(); ++a)
    for (std::size_t b = a + 1; b < t.size(); ++b)
      rho = std::max(rho, std::fabs(logJ[b] - logJ[a]) / (t[b] - t[a]));
  return rho;
}

DeltaChoice choose_delta(const MapSystem& map, const HyperbolicParams& p, std::size_t points,
                         std::size_t orbit_length, std::uint64_t seed) {
  const double candidates[] = {0.3, 0.2, 0.1, 0.05, 0.02};
  const std::size_t per_point = 10;
  ZoomingContraction alpha = ZoomingContraction::power(std::sqrt(p.sigma));
  // detection is independent of delta; do it once
  std::vector<OrbitRecord> orbits;
  std::vector<std::vector<std::size_t>> times;
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < points; ++i) {
    double x = rng.open_uniform();
    try {
      OrbitRecord o = iterate(map, x, orbit_length);
      TimeFlags f = detect_hyperbolic_times(o, p);
      std::vector<std::size_t> hs;
      for (std::size_t n = 1; n <= f.horizon(); ++n)
        if (f.flag[n]) hs.push_back(n);
      if (hs.size() > per_point) {
        std::vector<std::size_t> pick;
        for (std::size_t k = 0; k < per_point; ++k) pick.push_back(hs[k * hs.size() / per_point]);
        hs = pick;
      }
      orbits.push_back(std::move(o));
      times.push_back(std::move(hs));
    } catch (const CriticalHit&) {
    }
  }
  DeltaChoice out;
  for (double d : candidates) {
    std::size_t total = 0, good = 0;
    for (std::size_t i = 0; i < orbits.size(); ++i)
      for (std::size_t n : times[i]) {
        try {
          bool ok = certify_preball(map, orbits[i], n, d, alpha).ok;
          ++total;
          if (ok) ++good;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::PrecisionLoss) throw;
        }
      }
    double frac = total ? static_cast<double>(good) / static_cast<double>(total) : 0.0;
    out.success.emplace_back(d, frac);
    if (!out.found && total > 0 && frac >= 0.9) {
      out.delta = d;
      out.found = true;
    }
  }
  if (!out.found) out.delta = candidates[4];
  return out;
}

}  // namespace nue
