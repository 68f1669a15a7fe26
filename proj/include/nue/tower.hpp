#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nue/dynamics.hpp"
#include "nue/nested.hpp"
#include "nue/preballs.hpp"

namespace nue {

enum class TowerKind { Local, Global };

// One branch of the induced map. The atom is base + (qa, qb); F is f^R on it.
struct TowerAtom {
  double base = 0.0;
  double qa = 0.0, qb = 0.0;
  std::size_t R = 0;      // f-steps, a multiple of ell
  std::size_t image = 0;  // index into InducedMarkovMap::images
  Itinerary itinerary;    // branch of f at each step of the block
  Interval interval() const { return {base + qa, base + qb}; }
  double length() const { return qb - qa; }
};

struct InducedMarkovMap {
  TowerKind kind = TowerKind::Local;
  MapSystem map;
  TimeSource src;
  std::vector<Interval> images;          // local: {Delta}; global: pieces of the P0 atoms
  std::vector<std::size_t> image_group;  // global: P0 atom of each piece
  std::vector<TowerAtom> atoms;          // sorted by left end
  std::size_t R_max = 0;
  double base_mass = 0.0;
  double unresolved_mass = 0.0;  // Lebesgue mass of the base not covered by atoms
  std::size_t boundary_rejects = 0;
  std::size_t straddle_rejects = 0;
  std::size_t seeds = 0;

  // atom whose interior contains x, npos if none
  std::size_t atom_of(double x) const;
  // F(x) for x in atom a, as a lift near the image
  double induced(std::size_t a, double x) const;
  // f^j(x) for 0 <= j <= R of atom a
  double partial(std::size_t a, double x, std::size_t j) const;
  // (F(lo), F(hi)) of atom a
  Interval image_of(std::size_t a) const;
  // the point of atom a mapped by F to y (y inside its image)
  double inverse(std::size_t a, double y) const;
  double log_jacobian(std::size_t a, double x) const;  // log |(f^R)'(x)|
  // pseudo-orbit of the atom's base point, R steps; offsets ride on it
  OrbitRecord base_orbit(std::size_t a) const;
  // inverse() for many targets along one base orbit
  std::vector<double> inverse_many(std::size_t a, const std::vector<double>& ys) const;
};

struct ReturnHit {
  std::size_t R = 0;  // f-steps
  std::size_t image = 0;
  PreImage piece;     // offsets around the start point
  Itinerary itinerary;
};

// First return of x into one of `images` at a flagged multiple of src.ell,
// whose pull-back lies inside `home` (an interval containing x). Landings on
// an image boundary are skipped. nullopt: no return within R_max steps.
std::optional<ReturnHit> first_return_time(const MapSystem& map, double x, const std::vector<Interval>& images,
                                           const Interval& home, const TimeSource& src, std::size_t R_max,
                                           std::size_t* boundary_rejects = nullptr,
                                           std::size_t* straddle_rejects = nullptr);

struct TowerOptions {
  std::size_t seeds = 1u << 12;
  double unresolved_target = 1e-4;  // relative to the base mass
  std::size_t max_gap_seeds = 200000;
};

InducedMarkovMap build_local_tower(const MapSystem& map, const Interval& delta, const TimeSource& src,
                                   std::size_t R_max, const TowerOptions& opt = {});
InducedMarkovMap build_local_tower(const MapSystem& map, const NestedBall& ball, const TimeSource& src,
                                   std::size_t R_max, const TowerOptions& opt = {});
InducedMarkovMap build_global_tower(const MapSystem& map, const GlobalPartition& p0, const TimeSource& src,
                                    std::size_t R_max, const TowerOptions& opt = {});

struct MarkovCondition {
  std::string name;
  bool pass = true;
  double residual = 0.0;
  std::string detail;
};

struct MarkovReport {
  std::vector<MarkovCondition> conditions;  // five, in order
  std::size_t distinct_images = 0;
  double d1 = 0.0, d2 = 0.0;  // largest 1- and 2-cylinder
  bool pass() const;
};

MarkovReport verify_markov(const InducedMarkovMap& tower, double tol = 1e-9);

struct TailStats {
  std::size_t samples = 0;
  std::size_t n_max = 0;                  // in blocks of ell steps
  std::vector<double> counts;             // share with R > ell n, n = 0..n_max
  std::vector<double> zoom_tail;          // share with no flagged ell j, j <= n
  std::vector<double> h_tail;             // share whose first hyperbolic time exceeds ell n
  std::vector<double> violating_points;   // R > ell n although some ell j <= ell n is flagged
  std::size_t no_return = 0;
  bool monotone() const;
};

TailStats tail_statistics(const InducedMarkovMap& tower, const std::vector<double>& samples,
                          const HyperbolicParams& hyp);

// share of samples x with R(f^{ell j} x) > 0 for j = 0..J
double invariance_domain(const InducedMarkovMap& tower, const std::vector<double>& samples, std::size_t J);

}  // namespace nue
