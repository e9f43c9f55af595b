// binom_ci.hpp - exact binomial proportion intervals and the beta numerics behind them.
#pragma once

#include <cstdint>

namespace pacconf {

/// Closed interval [lo, hi] inside [0, 1].
struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 1.0;

  static constexpr ConfidenceInterval vacuous() { return {0.0, 1.0}; }

  double width() const { return hi - lo; }
  bool contains(double p) const { return lo <= p && p <= hi; }

  friend bool operator==(const ConfidenceInterval&, const ConfidenceInterval&) = default;
};

/// s successes out of n Bernoulli trials. Constructor enforces s <= n.
class BernoulliCounts {
 public:
  BernoulliCounts(std::uint64_t successes, std::uint64_t trials);

  std::uint64_t successes() const { return successes_; }
  std::uint64_t trials() const { return trials_; }

 private:
  std::uint64_t successes_;
  std::uint64_t trials_;
};

/// Regularized incomplete beta I_x(a, b). Lentz continued fraction, switched to
/// the mirrored argument when x > (a + 1) / (a + b + 2).
/// Throws std::invalid_argument outside x in [0,1], a > 0, b > 0.
double regularized_incomplete_beta(double x, double a, double b);

/// Density of Beta(a, b) at x.
double beta_pdf(double x, double a, double b);

/// Inverse of regularized_incomplete_beta in x: bracketed bisection with Newton
/// polish, |I_x(a,b) - p| <= 1e-12. quantile(0) = 0 and quantile(1) = 1.
double beta_quantile(double p, double a, double b);

/// Clopper-Pearson interval at level alpha (two-sided, alpha/2 per tail).
/// lo = 0 when s = 0, hi = 1 when s = n, and n = 0 gives [0, 1].
ConfidenceInterval clopper_pearson(const BernoulliCounts& counts, double alpha);

/// Same interval computed by bisection on exact binomial tail sums, never
/// touching the beta kernel. O(n) per tail evaluation; intended for cross-checks.
ConfidenceInterval clopper_pearson_tail_oracle(const BernoulliCounts& counts, double alpha);

/// P_theta[S >= s] for S ~ Binomial(n, theta), summed in log space.
double binomial_upper_tail(std::uint64_t s, std::uint64_t n, double theta);

/// P_theta[S <= s] for S ~ Binomial(n, theta), summed in log space.
double binomial_lower_tail(std::uint64_t s, std::uint64_t n, double theta);

}  // namespace pacconf
