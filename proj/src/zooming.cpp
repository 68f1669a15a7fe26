#include "nue/zooming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nue/errors.hpp"
#include "nue/preballs.hpp"

namespace nue {

// ---------------------------------------------------------------------------
// contractions

ZoomingContraction ZoomingContraction::exponential(double lambda) {
  if (!(lambda > 0)) throw Error(ErrorKind::HypothesisFail, "exponential contraction needs lambda > 0");
  ZoomingContraction a;
  a.kind_ = ContractionKind::Exponential;
  a.param_ = lambda;
  return a;
}

ZoomingContraction ZoomingContraction::power(double c) {
  if (!(c > 0 && c < 1)) throw Error(ErrorKind::HypothesisFail, "power contraction needs 0 < c < 1");
  ZoomingContraction a;
  a.kind_ = ContractionKind::Power;
  a.param_ = c;
  return a;
}

ZoomingContraction ZoomingContraction::polynomial() {
  ZoomingContraction a;
  a.kind_ = ContractionKind::Polynomial;
  a.param_ = 0.0;
  return a;
}

ZoomingContraction ZoomingContraction::tabulated(std::vector<double> factors) {
  if (factors.size() < 2) throw Error(ErrorKind::HypothesisFail, "tabulated contraction needs >= 2 factors");
  for (std::size_t i = 0; i < factors.size(); ++i)
    if (!(factors[i] > 0 && factors[i] < 1) || (i > 0 && factors[i] > factors[i - 1]))
      throw Error(ErrorKind::HypothesisFail, "tabulated factors must decrease inside (0,1)");
  ZoomingContraction a;
  a.kind_ = ContractionKind::Tabulated;
  a.table_ = std::move(factors);
  a.param_ = a.table_.back() / a.table_[a.table_.size() - 2];
  if (!(a.param_ < 1)) throw Error(ErrorKind::HypothesisFail, "tabulated factors must end with a ratio < 1");
  return a;
}

double ZoomingContraction::base(std::size_t m, double r) const {
  double dm = static_cast<double>(m);
  switch (kind_) {
    case ContractionKind::Exponential: return std::exp(-param_ * dm / 8.0) * r;
    case ContractionKind::Power: return std::pow(param_, dm) * r;
    case ContractionKind::Polynomial: {
      double q = 1.0 + dm * std::sqrt(r);
      return r / (q * q);
    }
    case ContractionKind::Tabulated: {
      if (m == 0) return r;
      if (m <= table_.size()) return table_[m - 1] * r;
      return table_.back() * std::pow(param_, static_cast<double>(m - table_.size())) * r;
    }
  }
  return r;
}

double ZoomingContraction::operator()(std::size_t n, double r) const { return base(stride_ * n, r); }

double ZoomingContraction::sum(double r, std::size_t N) const {
  double s = 0.0;
  for (std::size_t n = N; n >= 1; --n) s += (*this)(n, r);
  return s;
}

double ZoomingContraction::tail(double r, std::size_t N) const {
  double s = static_cast<double>(stride_);
  switch (kind_) {
    case ContractionKind::Exponential:
    case ContractionKind::Power:
    case ContractionKind::Tabulated: {
      // geometric from n = N+1 with ratio q (tabulated: bound by the tail ratio past the table)
      double q = kind_ == ContractionKind::Exponential ? std::exp(-param_ * s / 8.0)
                 : kind_ == ContractionKind::Power     ? std::pow(param_, s)
                                                       : 0.0;
      if (kind_ == ContractionKind::Tabulated) {
        if (stride_ * (N + 1) <= table_.size()) {
          double acc = 0.0;
          std::size_t n = N + 1;
          for (; stride_ * n <= table_.size(); ++n) acc += (*this)(n, r);
          q = std::pow(param_, s);
          return acc + (*this)(n, r) / (1.0 - q);
        }
        q = std::pow(param_, s);
      }
      return (*this)(N + 1, r) / (1.0 - q);
    }
    case ContractionKind::Polynomial: {
      // sum_{n>N} r/(1+s n sqrt r)^2 <= integral from N to infinity
      double sr = std::sqrt(r);
      if (sr == 0.0) return 0.0;
      return sr / (s * (1.0 + s * static_cast<double>(N) * sr));
    }
  }
  return 0.0;
}

double ZoomingContraction::total(double r) const {
  const std::size_t N = 4096;
  return sum(r, N) + tail(r, N);
}

ZoomingContraction ZoomingContraction::subsample(std::size_t ell) const {
  ZoomingContraction a = *this;
  a.stride_ = stride_ * std::max<std::size_t>(ell, 1);
  return a;
}

std::string ZoomingContraction::describe() const {
  std::string s;
  switch (kind_) {
    case ContractionKind::Exponential: s = "exponential(" + std::to_string(param_) + ")"; break;
    case ContractionKind::Power: s = "power(" + std::to_string(param_) + ")"; break;
    case ContractionKind::Polynomial: s = "polynomial"; break;
    case ContractionKind::Tabulated: s = "tabulated(" + std::to_string(table_.size()) + ")"; break;
  }
  if (stride_ != 1) s += "^" + std::to_string(stride_);
  return s;
}

AxiomReport check_axioms(const ZoomingContraction& a, std::size_t n_max, std::size_t grid) {
  AxiomReport rep;
  for (std::size_t g = 1; g <= grid; ++g) {
    double r = static_cast<double>(g) / static_cast<double>(grid);
    for (std::size_t n = 1; n <= n_max; ++n) {
      double an = a(n, r);
      if (!(an < r)) rep.strict_contraction = false;
      for (std::size_t m = 1; m + n <= n_max; ++m) {
        double lhs = a(n, a(m, r));
        double rhs = a(n + m, r);
        double excess = (lhs - rhs) / rhs;
        rep.worst_semigroup_excess = std::max(rep.worst_semigroup_excess, excess);
        if (excess > 1e-12) rep.semigroup = false;
      }
    }
    double ratio = a.total(r) / r;
    if (!std::isfinite(ratio)) rep.summable = false;
    rep.max_sum_ratio = std::max(rep.max_sum_ratio, ratio);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// time detection

namespace {

// Neumaier compensated accumulator
struct CompensatedSum {
  double s = 0.0, c = 0.0;
  void add(double v) {
    double t = s + v;
    if (std::fabs(s) >= std::fabs(v)) c += (s - t) + v;
    else c += (v - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

}  // namespace

void TimeFlags::finalize() {
  count.assign(flag.size(), 0);
  frequency.assign(flag.size(), 0.0);
  for (std::size_t n = 1; n < flag.size(); ++n) {
    count[n] = count[n - 1] + (flag[n] ? 1 : 0);
    frequency[n] = static_cast<double>(count[n]) / static_cast<double>(n);
  }
}

double default_b(double beta) {
  double m = beta > 0 ? std::min(1.0, 1.0 / beta) : 1.0;
  return 0.4 * m;
}

void HyperbolicParams::validate(double beta) const {
  if (!(sigma > 0 && sigma < 1)) throw Error(ErrorKind::HypothesisFail, "sigma must lie in (0,1)");
  if (!(epsilon > 0)) throw Error(ErrorKind::HypothesisFail, "epsilon must be positive");
  double bmax = 0.5 * (beta > 0 ? std::min(1.0, 1.0 / beta) : 1.0);
  if (!(b > 0 && b < bmax)) throw Error(ErrorKind::HypothesisFail, "b must lie in (0, min(1,1/beta)/2)");
}

TimeFlags detect_hyperbolic_times(const OrbitRecord& orbit, const HyperbolicParams& p) {
  TimeFlags tf;
  std::size_t N = orbit.size() == 0 ? 0 : orbit.size() - 1;
  tf.flag.assign(N + 1, 0);
  const double L = -std::log(p.sigma);
  const double bL = p.b * L;
  const double tol = kHyperbolicTol;
  CompensatedSum S;
  double max_prefix = 0.0;  // max_{m<n} S_m, starts with S_0 = 0
  double min_g = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= N; ++n) {
    std::size_t m = n - 1;
    double ld = orbit.log_inv_deriv[m];
    if (!std::isfinite(ld))
      throw Error(ErrorKind::UndefinedDerivative, "orbit hits the critical set before step " + std::to_string(n));
    double d = std::isfinite(orbit.crit_dist[m]) ? truncated_distance_value(orbit.crit_dist[m], p.epsilon) : 1.0;
    min_g = std::min(min_g, std::log(d) - bL * static_cast<double>(m));
    S.add(ld - L);
    double Sn = S.value();
    bool expand = Sn >= max_prefix - tol;
    bool recur = min_g >= -bL * static_cast<double>(n) - tol;
    tf.flag[n] = expand && recur;
    max_prefix = std::max(max_prefix, Sn);
  }
  tf.finalize();
  return tf;
}

TimeFlags detect_zooming_times(const MapSystem& map, double x, const ZoomingContraction& alpha, double delta,
                               std::size_t n_max) {
  if (n_max < 1) throw Error(ErrorKind::HypothesisFail, "n_max must be >= 1");
  OrbitRecord orbit = iterate(map, x, n_max);
  TimeFlags tf;
  tf.flag.assign(n_max + 1, 0);
  for (std::size_t n = 1; n <= n_max; ++n) tf.flag[n] = certify_preball(map, orbit, n, delta, alpha).ok;
  tf.finalize();
  return tf;
}

FrequencyReport frequency_stats(const TimeFlags& flags, double theta) {
  if (flags.flag.size() < 2) throw Error(ErrorKind::InvalidScenario, "empty flags");
  FrequencyReport rep;
  std::size_t N = flags.flag.size() - 1;
  for (std::size_t n = 1; n <= N; ++n) {
    rep.max_prefix_frequency = std::max(rep.max_prefix_frequency, flags.frequency[n]);
    if (static_cast<double>(flags.count[n]) >= theta * static_cast<double>(n) - 1e-12) rep.qualifying.push_back(n);
  }
  // lower estimate of the limsup over the tail of the geometric grid floor(1.25^k)
  std::vector<std::size_t> grid;
  for (double g = 1.0; g <= static_cast<double>(N); g *= 1.25) {
    std::size_t n = static_cast<std::size_t>(std::floor(g));
    if (grid.empty() || grid.back() != n) grid.push_back(n);
  }
  std::size_t start = grid.size() / 2;
  for (std::size_t i = start; i < grid.size(); ++i)
    rep.limsup_estimate = std::max(rep.limsup_estimate, flags.frequency[grid[i]]);
  return rep;
}

std::vector<double> slow_approximation_stat(const OrbitRecord& orbit, double delta) {
  std::size_t N = orbit.size() == 0 ? 0 : orbit.size() - 1;
  std::vector<double> s(N + 1, 0.0);
  double mean = 0.0;
  for (std::size_t n = 1; n <= N; ++n) {
    double cd = orbit.crit_dist[n - 1];
    double v = std::isfinite(cd) ? -std::log(truncated_distance_value(cd, delta)) : 0.0;
    mean += (v - mean) / static_cast<double>(n);
    s[n] = mean;
  }
  return s;
}

std::vector<double> expansion_stat(const OrbitRecord& orbit) {
  std::size_t N = orbit.size() == 0 ? 0 : orbit.size() - 1;
  std::vector<double> e(N + 1, 0.0);
  double mean = 0.0;
  for (std::size_t n = 1; n <= N; ++n) {
    double v = orbit.log_inv_deriv[n - 1];
    if (!std::isfinite(v))
      throw Error(ErrorKind::UndefinedDerivative, "orbit hits the critical set at step " + std::to_string(n - 1));
    mean += (v - mean) / static_cast<double>(n);
    e[n] = mean;
  }
  return e;
}

std::optional<std::size_t> first_expanding_moment(const OrbitRecord& orbit, double lambda, double r,
                                                  double epsilon) {
  std::vector<double> e = expansion_stat(orbit);
  std::vector<double> s = slow_approximation_stat(orbit, epsilon);
  for (std::size_t j = 1; j < e.size(); ++j)
    if (e[j] >= lambda && s[j] <= r) return j;
  return std::nullopt;
}

std::vector<double> critical_preimages(const MapSystem& map, std::size_t m, std::size_t cap) {
  std::vector<double> all;
  std::vector<double> level = map.critical_set();
  for (std::size_t j = 0; j < m; ++j) {
    all.insert(all.end(), level.begin(), level.end());
    if (j + 1 == m) break;
    std::vector<double> next;
    for (double c : level) {
      for (std::size_t b = 0; b < map.branches().size(); ++b) {
        double lo = std::min(map.raw_left(b), map.raw_right(b));
        double hi = std::max(map.raw_left(b), map.raw_right(b));
        // every lift of c inside the raw image of b
        double k0 = map.circle() ? std::ceil(lo - c - 1e-15) : 0.0;
        for (double k = k0;; k += 1.0) {
          double y = c + k;
          if (y > hi + 1e-15) break;
          if (y >= lo - 1e-15) next.push_back(map.reduce(map.invert(b, y)));
          if (!map.circle()) break;
        }
      }
      if (next.size() + all.size() > cap)
        throw Error(ErrorKind::PrecisionLoss, "critical pre-image enumeration exceeds the order cap");
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end(), [](double a, double b) { return std::fabs(a - b) < 1e-15; }),
               next.end());
    level = std::move(next);
  }
  std::sort(all.begin(), all.end());
  return all;
}

TransportReport check_transport_inequality(const MapSystem& map, const OrbitRecord& orbit, std::size_t m,
                                           double delta, double K) {
  if (m < 1) throw Error(ErrorKind::HypothesisFail, "m must be >= 1");
  if (!(delta < std::pow(K, -static_cast<double>(m))) && m > 1)
    throw Error(ErrorKind::HypothesisFail, "transport needs delta < K^{-m}");
  TransportReport rep;
  if (map.critical_set().empty()) {
    std::size_t N = (orbit.size() - 1) / m;
    rep.prefixes_checked = N;
    rep.holds = true;
    return rep;
  }
  std::vector<double> CF = critical_preimages(map, m, 1u << 20);
  double rad = delta / std::pow(K, static_cast<double>(m));
  auto dist_to = [&](double y) {
    double best = std::numeric_limits<double>::infinity();
    auto it = std::lower_bound(CF.begin(), CF.end(), y);
    if (it != CF.end()) best = std::min(best, map.dist(y, *it));
    if (it != CF.begin()) best = std::min(best, map.dist(y, *(it - 1)));
    if (map.circle()) {
      best = std::min(best, map.dist(y, CF.front()));
      best = std::min(best, map.dist(y, CF.back()));
    }
    return best;
  };
  std::size_t N = (orbit.size() - 1) / m;  // needs f^j for j < m n
  CompensatedSum lhs, rhs;
  std::size_t j_f = 0;
  for (std::size_t n = 1; n <= N; ++n) {
    double yF = orbit.points[m * (n - 1)];
    double dF = dist_to(yF);
    lhs.add(-std::log(truncated_distance_value(dF, rad)));
    for (; j_f < m * n; ++j_f) {
      double cd = orbit.crit_dist[j_f];
      rhs.add(-std::log(truncated_distance_value(cd, delta)));
    }
    double L = lhs.value(), R = 2.0 * rhs.value();
    if (L > R + 1e-9) {
      ++rep.violations;
      if (rep.first_violation == 0) rep.first_violation = n;
    }
    if (L > 0) rep.max_ratio = std::max(rep.max_ratio, R > 0 ? L / R : std::numeric_limits<double>::infinity());
  }
  rep.prefixes_checked = N;
  rep.holds = rep.violations == 0;
  return rep;
}

EllCertificate compute_ell(double lambda) {
  if (!(lambda > 0)) throw Error(ErrorKind::HypothesisFail, "compute_ell needs lambda > 0");
  double v = 16.0 * std::log(3.0) / lambda;
  double fl = std::floor(v);
  std::size_t ell = static_cast<std::size_t>(v - fl < 1e-12 ? fl : fl + 1.0);
  if (ell == 0) ell = 1;
  EllCertificate c;
  c.ell = ell;
  c.ratio = std::exp(-lambda * static_cast<double>(ell) / 8.0);
  c.series = c.ratio / (1.0 - c.ratio);
  c.certified = c.ratio <= 1.0 / 9.0 + 1e-15 && c.series <= 0.125 + 1e-15;
  return c;
}

std::size_t ell_for_contraction(const ZoomingContraction& alpha, double r, std::size_t max_ell) {
  for (std::size_t k = 1; k <= max_ell; ++k) {
    ZoomingContraction s = alpha.subsample(k);
    bool ok = true;
    for (double rt : {r, 4.0 * r})
      if (s.total(rt) > rt / 8.0) ok = false;
    if (ok) return k;
  }
  throw Error(ErrorKind::HypothesisFail, "no iterate up to max_ell makes the contraction sum <= r/8");
}

TimeFlags sub_collection_filter(const TimeFlags& flags, std::size_t ell) {
  if (ell < 1) throw Error(ErrorKind::HypothesisFail, "ell must be >= 1");
  TimeFlags out;
  std::size_t N = flags.flag.empty() ? 0 : (flags.flag.size() - 1) / ell;
  out.flag.assign(N + 1, 0);
  for (std::size_t n = 1; n <= N; ++n) out.flag[n] = flags.flag[ell * n];
  out.finalize();
  return out;
}

}  // namespace nue
