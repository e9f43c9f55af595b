// cascade.hpp - certified exit thresholds for early-exit cascaded classifiers.
//
// A cascade of M branches returns the prediction of the first branch m < M
// whose confidence clears its threshold, otherwise that of the slow branch M.
// Thresholds are picked one branch at a time, each as small as possible while
// a high-probability upper bound on (cascade error - slow error) stays <= xi.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pacconf/binom_ci.hpp"
#include "pacconf/execution.hpp"

namespace pacconf::cascade {

struct BranchOutput {
  double conf = 0.0;
  int pred = 0;
};

/// Per-example outputs of all M branches; the last branch is the slow reference.
struct CascadeRecord {
  std::vector<BranchOutput> branches;
  int true_label = 0;

  std::size_t num_branches() const { return branches.size(); }
};

/// Exit threshold for one branch, or DISABLED (never exits there).
class ExitThreshold {
 public:
  ExitThreshold() = default;  // disabled
  static ExitThreshold disabled() { return {}; }
  static ExitThreshold at(double gamma);

  bool enabled() const { return gamma_.has_value(); }
  double value() const { return *gamma_; }
  bool fires(double conf) const { return gamma_ && conf >= *gamma_; }

  friend bool operator==(const ExitThreshold&, const ExitThreshold&) = default;

 private:
  explicit ExitThreshold(double gamma) : gamma_(gamma) {}
  std::optional<double> gamma_;
};

using ThresholdVector = std::vector<ExitThreshold>;

struct ExitDecision {
  std::size_t branch = 0;  // zero-based; num_branches - 1 means the slow branch
  int pred = 0;
};

/// Bound ingredients for branch m over the calibration set:
///   fast_correct  ~ P[pred_m == y   | disagree & exit at m]
///   slow_correct  ~ P[pred_M == y   | disagree & exit at m]
///   disagree_exit ~ P[disagree & exit at m]
struct BoundTerms {
  ConfidenceInterval fast_correct;
  ConfidenceInterval slow_correct;
  ConfidenceInterval disagree_exit;
  std::uint64_t disagree_exits = 0;  // |Z_m|
  std::uint64_t calibration_size = 0;

  /// (1 - fast_correct.lo) * disagree_exit.hi - (1 - slow_correct.hi) * disagree_exit.lo
  double relative_error_bound() const;
};

/// Validates shape: at least two branches, consistent across records, confidences in [0,1].
std::size_t validate_records(std::span<const CascadeRecord> records);

ExitDecision cascade_predict(const CascadeRecord& record, std::span<const ExitThreshold> thresholds);

/// Bound terms for zero-based branch m given thresholds for branches 0..m,
/// each interval at level delta / (3 (M - 1)).
BoundTerms compute_bound_terms(std::span<const CascadeRecord> records,
                               std::span<const ExitThreshold> thresholds, std::size_t branch,
                               double delta);

/// Contribution of branch m to the constraint; exactly 0 for a disabled branch.
double branch_bound(std::span<const CascadeRecord> records, std::span<const ExitThreshold> thresholds,
                    std::size_t branch, double delta);

struct SelectOptions {
  double xi = 0.05;
  double delta = 0.1;
  /// nullopt scans every observed confidence (exact); otherwise the grid k / steps.
  std::optional<std::size_t> grid_steps;
};

/// Line-search candidates for branch m in ascending order: 0, the distinct
/// confidences of records reaching branch m, 1, then DISABLED. The constraint
/// is piecewise constant between observed confidences, so this scan is exact.
std::vector<ExitThreshold> candidate_thresholds(std::span<const CascadeRecord> records,
                                                std::span<const ExitThreshold> earlier,
                                                std::size_t branch,
                                                std::optional<std::size_t> grid_steps = std::nullopt);

/// Sequential line search over branches 1..M-1. Always succeeds: DISABLED is
/// feasible by construction.
ThresholdVector select_thresholds(std::span<const CascadeRecord> records, const SelectOptions& opts);

/// Left-hand side of the constraint, summed over branches 0..m.
double constraint_value(std::span<const CascadeRecord> records, std::span<const ExitThreshold> thresholds,
                        std::size_t last_branch, double delta);

struct CascadeEvaluation {
  double error = 0.0;
  double slow_error = 0.0;
  double relative_error = 0.0;  // error - slow_error
  double mean_cost = 0.0;
  std::vector<double> exit_fractions;
};

/// costs[m] is the cost of running branches 0..m (nondecreasing, positive).
CascadeEvaluation evaluate_cascade(std::span<const CascadeRecord> records,
                                   std::span<const ExitThreshold> thresholds,
                                   std::span<const double> costs,
                                   Execution exec = Execution::parallel);

/// Heuristic two-branch threshold 1 - (xi + slow validation error), clamped to [0,1].
ExitThreshold baseline_threshold_softmax(double xi, double slow_validation_error);

}  // namespace pacconf::cascade
