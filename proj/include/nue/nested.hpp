#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nue/contraction.hpp"
#include "nue/dynamics.hpp"
#include "nue/preballs.hpp"
#include "nue/region.hpp"
#include "nue/zooming.hpp"

namespace nue {

constexpr std::size_t npos = static_cast<std::size_t>(-1);
// overlaps below this are rounding, not linking
constexpr double kLinkTol = 1e-13;

// Which pre-images count. Orders are in steps of f^ell; `alpha` is the
// contraction of f itself.
enum class TimeKind { Every, Zooming, Hyperbolic };

struct TimeSource {
  TimeKind kind = TimeKind::Zooming;
  ZoomingContraction alpha = ZoomingContraction::power(0.5);
  double delta = 0.2;
  HyperbolicParams hyp;
  std::size_t ell = 1;

  ZoomingContraction induced() const { return alpha.subsample(ell); }
  std::string describe() const;
};

// Is time `steps` flagged for the orbit's base point (pre-ball of radius delta)?
bool time_flagged(const MapSystem& map, const OrbitRecord& orbit, std::size_t steps, const TimeSource& src);

// Open-set linking on the line (circle arcs are compared on nearby lifts).
bool is_linked(const Interval& u, const Interval& v, bool circle);

// Component of f^{-steps}(A) containing orbit.points[0], where A is an open
// interval containing f^steps of that point (not on its boundary). Offsets are
// relative to the base point. nullopt when the continuation fails, crosses C,
// or no test point of the pre-image is flagged.
struct PreImage {
  double base = 0.0;
  double qa = 0.0, qb = 0.0;  // offsets, qa < 0 < qb
  std::size_t order = 0;      // in steps of f^ell
  std::size_t anchor = 0;
  std::size_t parent = 0;     // index in the element log, or npos for anchors
  Interval abs() const { return {base + qa, base + qb}; }
  double length() const { return qb - qa; }
};

std::optional<PreImage> pull_back_set(const MapSystem& map, const OrbitRecord& orbit, std::size_t order,
                                      const Interval& A, const TimeSource& src);

struct ChainClosure {
  std::vector<Interval> anchors;
  std::vector<PreImage> elements;  // every logged chain element
  Region swept;                    // union of the elements
  std::size_t n_max = 0;
  double tail_bound = 0.0;         // sum_{k > n_max} alpha~_k(2 r)
  std::size_t candidates = 0;
  std::size_t pruned = 0;  // elements whose descendants cannot move any core boundary
  std::size_t max_chain_length = 0;
  // per anchor: (inward reach of chains from lo, inward reach of chains from hi)
  std::vector<Interval> cores;
};

// Chains start at each anchor separately and are explored best-first by how
// far inward they can still reach; an element is expanded only while its
// reach bound (its extent plus the contraction tail past its order) beats the
// current extent. The recorded elements contain every chain that determines
// the core boundaries.
ChainClosure enumerate_chain_closure(const MapSystem& map, const std::vector<Interval>& anchors,
                                     const TimeSource& src, std::size_t n_max, std::size_t cap = 200000);

// Smallest N with sum_{k>N} alpha~_k(2r) < 1e-6 r.
std::size_t default_order_cap(const TimeSource& src, double r);

struct NestedBall {
  double center = 0.0;
  double r = 0.0;
  Interval anchor;
  Arc core;
  std::size_t n_max = 0;
  double tail_bound = 0.0;
  double contraction_sum = 0.0;  // sum_n alpha~_n(r)
  ChainClosure closure;
  bool contains_half_ball() const;
};

NestedBall build_nested_ball(const MapSystem& map, double p, double r, const TimeSource& src,
                             std::optional<std::size_t> n_max = std::nullopt);

struct NestedReport {
  bool nested = true;
  std::size_t checked = 0;                // candidate pre-images examined
  std::vector<PreImage> linked;           // offenders
  std::size_t enumerated = 0;             // pre-images in the pairwise check
  std::size_t pairwise_violations = 0;    // intersecting pairs not nested or equal orders
};

// Looks for pre-images of V of order 1..n_check linked with V. With
// `pairwise_orders` > 0 also enumerates all pre-images up to that order and
// checks that intersecting ones are nested with distinct orders.
NestedReport verify_nested(const MapSystem& map, const Interval& V, std::size_t n_check, const TimeSource& src,
                           std::size_t pairwise_orders = 0, std::size_t cap = 1u << 20);

struct PartitionAtom {
  Region region;
  std::vector<std::size_t> signature;  // i with the atom inside Delta_i
  std::vector<Arc> pieces() const { return region.components(); }
};

struct GlobalPartition {
  double r = 0.0;
  std::size_t ell = 1;
  std::vector<double> centers;
  std::vector<Interval> anchors;
  std::vector<Arc> cover;  // Delta_i
  std::vector<PartitionAtom> atoms;
  ChainClosure closure;
  bool circle = false;
  std::vector<std::pair<Interval, std::size_t>> piece_index;  // open pieces sorted by lo
  std::vector<double> boundary;                               // invariant partitions only
  // index of the atom whose interior contains x, npos if none
  std::size_t atom_of(double x) const;
  bool covers_three_quarter_balls() const;
};

GlobalPartition build_global_partition(const MapSystem& map, double r, const TimeSource& src,
                                       std::optional<std::size_t> n_max = std::nullopt);

// P0 whose boundary set B is forward invariant: B collects the backward orbits
// of `seeds` (a forward-invariant set) until every gap is at most r. A
// pull-back of a gap never has a point of B inside, so it lies in one gap.
// Throws HypothesisFail if some f(b) misses B.
GlobalPartition build_invariant_partition(const MapSystem& map, const std::vector<double>& seeds, double r,
                                          std::size_t ell, std::size_t max_depth = 40);

}  // namespace nue
