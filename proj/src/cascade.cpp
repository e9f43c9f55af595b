#include "pacconf/cascade.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pacconf::cascade {

namespace {

double branch_alpha(double delta, std::size_t num_branches) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  return delta / (3.0 * static_cast<double>(num_branches - 1));
}

// True when the record is still in the cascade when branch m is consulted.
bool reaches(const CascadeRecord& r, std::span<const ExitThreshold> thresholds, std::size_t m) {
  for (std::size_t i = 0; i < m; ++i) {
    if (thresholds[i].fires(r.branches[i].conf)) return false;
  }
  return true;
}

BoundTerms terms_from_counts(std::uint64_t z, std::uint64_t fast_ok, std::uint64_t slow_ok,
                             std::uint64_t n, double alpha) {
  BoundTerms t;
  t.fast_correct = clopper_pearson(BernoulliCounts(fast_ok, z), alpha);
  t.slow_correct = clopper_pearson(BernoulliCounts(slow_ok, z), alpha);
  t.disagree_exit = clopper_pearson(BernoulliCounts(z, n), alpha);
  t.disagree_exits = z;
  t.calibration_size = n;
  return t;
}

// One record reaching branch m, reduced to what the bound needs.
struct SweepEntry {
  double conf;
  bool disagree;
  bool fast_ok;
  bool slow_ok;
};

}  // namespace

ExitThreshold ExitThreshold::at(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("exit threshold must lie in [0, 1]");
  }
  return ExitThreshold(gamma);
}

double BoundTerms::relative_error_bound() const {
  return (1.0 - fast_correct.lo) * disagree_exit.hi - (1.0 - slow_correct.hi) * disagree_exit.lo;
}

std::size_t validate_records(std::span<const CascadeRecord> records) {
  if (records.empty()) throw std::invalid_argument("cascade records are empty");
  const std::size_t m = records.front().num_branches();
  if (m < 2) throw std::invalid_argument("a cascade needs at least two branches");
  for (const auto& r : records) {
    if (r.num_branches() != m) throw std::invalid_argument("inconsistent branch count across records");
    for (const auto& b : r.branches) {
      if (!(b.conf >= 0.0 && b.conf <= 1.0)) {
        throw std::invalid_argument("branch confidence outside [0, 1]");
      }
    }
  }
  return m;
}

ExitDecision cascade_predict(const CascadeRecord& record, std::span<const ExitThreshold> thresholds) {
  const std::size_t last = record.num_branches() - 1;
  if (thresholds.size() != last) {
    throw std::invalid_argument("expected " + std::to_string(last) + " thresholds");
  }
  for (std::size_t m = 0; m < last; ++m) {
    if (thresholds[m].fires(record.branches[m].conf)) return {m, record.branches[m].pred};
  }
  return {last, record.branches[last].pred};
}

BoundTerms compute_bound_terms(std::span<const CascadeRecord> records,
                               std::span<const ExitThreshold> thresholds, std::size_t branch,
                               double delta) {
  const std::size_t num_branches = validate_records(records);
  if (branch + 1 >= num_branches) throw std::invalid_argument("bound terms exist only for fast branches");
  if (thresholds.size() <= branch) throw std::invalid_argument("threshold prefix too short");
  const double alpha = branch_alpha(delta, num_branches);
  const std::size_t last = num_branches - 1;

  std::uint64_t z = 0, fast_ok = 0, slow_ok = 0;
  for (const auto& r : records) {
    if (!reaches(r, thresholds, branch) || !thresholds[branch].fires(r.branches[branch].conf)) continue;
    if (r.branches[branch].pred == r.branches[last].pred) continue;
    ++z;
    fast_ok += r.branches[branch].pred == r.true_label;
    slow_ok += r.branches[last].pred == r.true_label;
  }
  return terms_from_counts(z, fast_ok, slow_ok, records.size(), alpha);
}

double branch_bound(std::span<const CascadeRecord> records, std::span<const ExitThreshold> thresholds,
                    std::size_t branch, double delta) {
  if (!thresholds[branch].enabled()) return 0.0;
  return compute_bound_terms(records, thresholds, branch, delta).relative_error_bound();
}

double constraint_value(std::span<const CascadeRecord> records, std::span<const ExitThreshold> thresholds,
                        std::size_t last_branch, double delta) {
  double total = 0.0;
  for (std::size_t m = 0; m <= last_branch; ++m) total += branch_bound(records, thresholds, m, delta);
  return total;
}

std::vector<ExitThreshold> candidate_thresholds(std::span<const CascadeRecord> records,
                                                std::span<const ExitThreshold> earlier,
                                                std::size_t branch,
                                                std::optional<std::size_t> grid_steps) {
  std::vector<double> values{0.0, 1.0};
  if (grid_steps) {
    if (*grid_steps == 0) throw std::invalid_argument("grid needs at least one step");
    for (std::size_t k = 1; k < *grid_steps; ++k) {
      values.push_back(static_cast<double>(k) / static_cast<double>(*grid_steps));
    }
  } else {
    for (const auto& r : records) {
      if (reaches(r, earlier, branch)) values.push_back(r.branches[branch].conf);
    }
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<ExitThreshold> out;
  out.reserve(values.size() + 1);
  for (double v : values) out.push_back(ExitThreshold::at(v));
  out.push_back(ExitThreshold::disabled());
  return out;
}

ThresholdVector select_thresholds(std::span<const CascadeRecord> records, const SelectOptions& opts) {
  const std::size_t num_branches = validate_records(records);
  if (!(opts.xi >= 0.0)) throw std::invalid_argument("xi must be nonnegative");
  const double alpha = branch_alpha(opts.delta, num_branches);
  const std::size_t last = num_branches - 1;
  const std::uint64_t n = records.size();

  ThresholdVector chosen(last, ExitThreshold::disabled());
  double spent = 0.0;
  for (std::size_t m = 0; m < last; ++m) {
    // Records reaching branch m sorted by confidence, descending, so the
    // exit set of any threshold is a prefix and its counts are prefix sums.
    std::vector<SweepEntry> entries;
    for (const auto& r : records) {
      if (!reaches(r, chosen, m)) continue;
      const auto& fast = r.branches[m];
      const auto& slow = r.branches[last];
      entries.push_back({fast.conf, fast.pred != slow.pred, fast.pred == r.true_label,
                         slow.pred == r.true_label});
    }
    std::sort(entries.begin(), entries.end(),
              [](const SweepEntry& a, const SweepEntry& b) { return a.conf > b.conf; });
    std::vector<std::uint64_t> z(entries.size() + 1, 0), fast_ok(entries.size() + 1, 0),
        slow_ok(entries.size() + 1, 0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      z[i + 1] = z[i] + e.disagree;
      fast_ok[i + 1] = fast_ok[i] + (e.disagree && e.fast_ok);
      slow_ok[i + 1] = slow_ok[i] + (e.disagree && e.slow_ok);
    }

    // Consecutive candidates often cut the same disagreement counts.
    std::uint64_t cached_z = UINT64_MAX, cached_fast = 0, cached_slow = 0;
    double cached_bound = 0.0;
    for (const auto& candidate : candidate_thresholds(records, chosen, m, opts.grid_steps)) {
      if (!candidate.enabled()) {
        chosen[m] = candidate;  // contributes exactly 0
        break;
      }
      const double gamma = candidate.value();
      const auto cut = std::partition_point(entries.begin(), entries.end(),
                                            [gamma](const SweepEntry& e) { return e.conf >= gamma; });
      const auto k = static_cast<std::size_t>(cut - entries.begin());
      if (z[k] != cached_z || fast_ok[k] != cached_fast || slow_ok[k] != cached_slow) {
        cached_z = z[k];
        cached_fast = fast_ok[k];
        cached_slow = slow_ok[k];
        cached_bound = terms_from_counts(z[k], fast_ok[k], slow_ok[k], n, alpha).relative_error_bound();
      }
      const double bound = cached_bound;
      if (spent + bound <= opts.xi) {
        chosen[m] = candidate;
        spent += bound;
        break;
      }
    }
  }
  return chosen;
}

CascadeEvaluation evaluate_cascade(std::span<const CascadeRecord> records,
                                   std::span<const ExitThreshold> thresholds,
                                   std::span<const double> costs, Execution exec) {
  const std::size_t num_branches = validate_records(records);
  if (costs.size() != num_branches) throw std::invalid_argument("need one cost per branch");
  for (std::size_t m = 0; m < num_branches; ++m) {
    if (!(costs[m] > 0.0)) throw std::invalid_argument("branch costs must be positive");
    if (m > 0 && costs[m] < costs[m - 1]) throw std::invalid_argument("branch costs must be nondecreasing");
  }
  if (thresholds.size() != num_branches - 1) throw std::invalid_argument("threshold count mismatch");

  const std::size_t last = num_branches - 1;
  const auto count = static_cast<std::int64_t>(records.size());
  std::vector<std::int64_t> exits(num_branches, 0);
  std::int64_t* exit_counts = exits.data();
  std::int64_t errors = 0;
  std::int64_t slow_errors = 0;

  if (exec == Execution::parallel) {
#pragma omp parallel for reduction(+ : errors, slow_errors) reduction(+ : exit_counts[:num_branches])
    for (std::int64_t i = 0; i < count; ++i) {
      const auto& r = records[static_cast<std::size_t>(i)];
      const auto d = cascade_predict(r, thresholds);
      ++exit_counts[d.branch];
      errors += d.pred != r.true_label;
      slow_errors += r.branches[last].pred != r.true_label;
    }
  } else {
    for (std::int64_t i = 0; i < count; ++i) {
      const auto& r = records[static_cast<std::size_t>(i)];
      const auto d = cascade_predict(r, thresholds);
      ++exit_counts[d.branch];
      errors += d.pred != r.true_label;
      slow_errors += r.branches[last].pred != r.true_label;
    }
  }

  const double nd = static_cast<double>(count);
  CascadeEvaluation ev;
  ev.error = static_cast<double>(errors) / nd;
  ev.slow_error = static_cast<double>(slow_errors) / nd;
  ev.relative_error = static_cast<double>(errors - slow_errors) / nd;
  ev.exit_fractions.resize(num_branches);
  double cost = 0.0;
  for (std::size_t m = 0; m < num_branches; ++m) {
    ev.exit_fractions[m] = static_cast<double>(exits[m]) / nd;
    cost += static_cast<double>(exits[m]) * costs[m];
  }
  ev.mean_cost = cost / nd;
  return ev;
}

ExitThreshold baseline_threshold_softmax(double xi, double slow_validation_error) {
  return ExitThreshold::at(std::clamp(1.0 - (xi + slow_validation_error), 0.0, 1.0));
}

}  // namespace pacconf::cascade
