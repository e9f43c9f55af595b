// montecarlo.hpp - repeated-draw harnesses that check the high-probability
// guarantees empirically. Each harness runs its trials in an OpenMP loop or in
// the serial reference loop; trial i always uses the random stream (seed, i).
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pacconf/cascade.hpp"
#include "pacconf/execution.hpp"
#include "pacconf/safeplan.hpp"
#include "pacconf/synth.hpp"

namespace pacconf {

/// rate + 3 * sqrt(rate (1 - rate) / trials): the acceptance margin for a
/// failure fraction whose true value is at most `rate`.
double three_sigma_limit(double rate, std::size_t trials);

/// Empirical coverage of the Clopper-Pearson interval at one (theta, n, alpha).
struct CoverageCell {
  double theta = 0.0;
  std::uint64_t n = 0;
  double alpha = 0.0;
  std::size_t draws = 0;
  std::size_t covered = 0;
  double coverage() const { return static_cast<double>(covered) / static_cast<double>(draws); }
  /// 1 - alpha - 3 sigma
  double required() const;
  bool pass() const { return coverage() >= required(); }
};

CoverageCell cp_coverage_cell(double theta, std::uint64_t n, double alpha, std::size_t draws,
                              std::uint64_t seed, Execution exec = Execution::parallel);

struct CoverageValidation {
  std::size_t trials = 0;
  std::size_t failures = 0;  // draws where some bin missed its true accuracy
  double delta = 0.0;
  double mean_width = 0.0;   // averaged over bins and trials
  double failure_fraction() const { return static_cast<double>(failures) / static_cast<double>(trials); }
  double limit() const { return three_sigma_limit(delta, trials); }
  bool pass() const { return failure_fraction() <= limit(); }
};

/// Refit the coverage table on fresh draws and count draws where any bin's
/// interval misses its theta. shrink > 1 narrows every interval about its
/// mean by that factor (negative control).
CoverageValidation validate_coverage(const SyntheticCalibGenerator& gen, std::size_t n, double delta,
                                     std::size_t trials, std::uint64_t seed, double shrink = 1.0,
                                     Execution exec = Execution::parallel);

struct CascadeValidation {
  std::size_t trials = 0;
  std::size_t violations = 0;  // draws whose true relative error exceeds xi
  double xi = 0.0;
  double delta = 0.0;
  std::vector<cascade::ExitThreshold> selected;
  std::vector<double> true_relative_error;
  double violation_fraction() const { return static_cast<double>(violations) / static_cast<double>(trials); }
  double limit() const { return three_sigma_limit(delta, trials); }
  bool pass() const { return violation_fraction() <= limit(); }
};

CascadeValidation validate_cascade(const TwoBranchGenerator& gen, std::size_t n, double xi, double delta,
                                   std::size_t trials, std::uint64_t seed,
                                   Execution exec = Execution::parallel);

/// 1 - safety rate of the shielded policy over `rollouts` fresh rollouts.
double oracle_unsafe_probability(const safeplan::Simulator& sim, const safeplan::SafetyThreshold& gamma,
                                 std::size_t rollouts, std::uint64_t seed,
                                 Execution exec = Execution::parallel);

struct ThresholdOutcome {
  safeplan::SafetyThreshold threshold = safeplan::SafetyThreshold::always_backup();
  std::size_t times_selected = 0;
  double oracle_unsafe = 0.0;
};

struct SafeplanValidation {
  std::size_t trials = 0;
  std::size_t violations = 0;  // draws whose selected threshold has oracle unsafety > xi
  double xi = 0.0;
  double delta = 0.0;
  std::vector<ThresholdOutcome> outcomes;  // one per distinct selected threshold
  double violation_fraction() const { return static_cast<double>(violations) / static_cast<double>(trials); }
  double limit() const { return three_sigma_limit(delta, trials); }
  bool pass() const { return violation_fraction() <= limit(); }
};

struct SafeplanValidationOptions {
  std::size_t w_rollouts = 5000;
  std::size_t z_pool = 5000;
  double xi = 0.1;
  double delta = 0.1;
  std::size_t trials = 300;
  std::size_t oracle_rollouts = 1000000;
  std::uint64_t seed = 0;
};

/// Select a threshold on each of `trials` independent (W, Z) draws, then
/// score each distinct selection against a large-sample oracle.
SafeplanValidation validate_safeplan(const safeplan::Simulator& sim, const SafeplanValidationOptions& opts,
                                     Execution exec = Execution::parallel);

}  // namespace pacconf
