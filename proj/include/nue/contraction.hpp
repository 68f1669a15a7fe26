#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace nue {

enum class ContractionKind { Exponential, Power, Polynomial, Tabulated };

// Sequence alpha_n of contractions of [0, infinity). `stride` s gives the
// sub-sequence n -> alpha_{s n}, used for iterates f^s.
class ZoomingContraction {
 public:
  static ZoomingContraction exponential(double lambda);  // e^{-lambda n / 8} r
  static ZoomingContraction power(double c);             // c^n r
  static ZoomingContraction polynomial();                // r / (1 + n sqrt r)^2
  // alpha_n(r) = factors[n-1] r, continued geometrically past the table
  static ZoomingContraction tabulated(std::vector<double> factors);

  double operator()(std::size_t n, double r) const;
  double sum(double r, std::size_t N) const;   // sum_{n=1}^N alpha_n(r)
  double tail(double r, std::size_t N) const;  // closed-form bound on sum_{n>N}
  double total(double r) const;                // sum to a cap plus tail
  ZoomingContraction subsample(std::size_t ell) const;

  ContractionKind kind() const { return kind_; }
  double parameter() const { return param_; }
  std::size_t stride() const { return stride_; }
  std::string describe() const;

 private:
  double base(std::size_t m, double r) const;
  ContractionKind kind_ = ContractionKind::Power;
  double param_ = 0.5;
  std::size_t stride_ = 1;
  std::vector<double> table_;
};

struct AxiomReport {
  bool strict_contraction = true;
  bool semigroup = true;
  bool summable = true;
  double worst_semigroup_excess = 0.0;
  double max_sum_ratio = 0.0;  // sup_r sum_n alpha_n(r) / r
};

// Checks the three axioms on r in a grid of (0,1] and n, m <= n_max.
AxiomReport check_axioms(const ZoomingContraction& a, std::size_t n_max = 64, std::size_t grid = 64);

}  // namespace nue
