#include "pacconf/montecarlo.hpp"

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace pacconf {

double three_sigma_limit(double rate, std::size_t trials) {
  return rate + 3.0 * std::sqrt(rate * (1.0 - rate) / static_cast<double>(trials));
}

double CoverageCell::required() const {
  return 1.0 - alpha - 3.0 * std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(draws));
}

CoverageCell cp_coverage_cell(double theta, std::uint64_t n, double alpha, std::size_t draws,
                              std::uint64_t seed, Execution exec) {
  if (draws == 0) throw std::invalid_argument("coverage needs at least one draw");
  // Each count s maps to one interval, so tabulate s = 0..n once.
  std::vector<std::uint8_t> covers(n + 1);
  const auto table_size = static_cast<std::int64_t>(n + 1);
  const auto draw_count = static_cast<std::int64_t>(draws);
  std::int64_t covered = 0;
  auto tabulate = [&](std::int64_t s) {
    const auto ci = clopper_pearson(BernoulliCounts(static_cast<std::uint64_t>(s), n), alpha);
    covers[static_cast<std::size_t>(s)] = ci.contains(theta);
  };
  auto draw = [&](std::int64_t i) -> std::int64_t {
    Engine rng = make_engine(seed, stream::binomial_draw, static_cast<std::uint64_t>(i));
    std::binomial_distribution<std::uint64_t> binom(n, theta);
    return covers[binom(rng)];
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t s = 0; s < table_size; ++s) tabulate(s);
#pragma omp parallel for schedule(static) reduction(+ : covered)
    for (std::int64_t i = 0; i < draw_count; ++i) covered += draw(i);
  } else {
    for (std::int64_t s = 0; s < table_size; ++s) tabulate(s);
    for (std::int64_t i = 0; i < draw_count; ++i) covered += draw(i);
  }
  CoverageCell cell;
  cell.theta = theta;
  cell.n = n;
  cell.alpha = alpha;
  cell.draws = draws;
  cell.covered = static_cast<std::size_t>(covered);
  return cell;
}

CoverageValidation validate_coverage(const SyntheticCalibGenerator& gen, std::size_t n, double delta,
                                     std::size_t trials, std::uint64_t seed, double shrink,
                                     Execution exec) {
  if (trials == 0) throw std::invalid_argument("validation needs at least one trial");
  if (!(shrink >= 1.0)) throw std::invalid_argument("shrink factor must be >= 1");
  const auto& theta = gen.theta();
  std::vector<std::uint8_t> failed(trials, 0);
  std::vector<double> width(trials, 0.0);

  auto run_trial = [&](std::size_t t) {
    const auto records = gen.sample(n, seed, t);
    const auto table = fit_coverage_predictor(records, gen.scheme(), delta);
    double w = 0.0;
    bool miss = false;
    for (std::size_t k = 0; k < table.bins().size(); ++k) {
      const auto& bin = table.bins()[k];
      ConfidenceInterval ci = bin.interval;
      if (shrink > 1.0) {
        ci.lo = bin.mean - (bin.mean - ci.lo) / shrink;
        ci.hi = bin.mean + (ci.hi - bin.mean) / shrink;
      }
      w += ci.width();
      miss = miss || !ci.contains(theta[k]);
    }
    failed[t] = miss;
    width[t] = w / static_cast<double>(table.bins().size());
  };

  const auto count = static_cast<std::int64_t>(trials);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t t = 0; t < count; ++t) run_trial(static_cast<std::size_t>(t));
  } else {
    for (std::int64_t t = 0; t < count; ++t) run_trial(static_cast<std::size_t>(t));
  }

  CoverageValidation out;
  out.trials = trials;
  out.delta = delta;
  double total_width = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    out.failures += failed[t];
    total_width += width[t];
  }
  out.mean_width = total_width / static_cast<double>(trials);
  return out;
}

CascadeValidation validate_cascade(const TwoBranchGenerator& gen, std::size_t n, double xi, double delta,
                                   std::size_t trials, std::uint64_t seed, Execution exec) {
  if (trials == 0) throw std::invalid_argument("validation needs at least one trial");
  gen.validate();
  CascadeValidation out;
  out.trials = trials;
  out.xi = xi;
  out.delta = delta;
  out.selected.assign(trials, cascade::ExitThreshold::disabled());
  out.true_relative_error.assign(trials, 0.0);

  cascade::SelectOptions opts;
  opts.xi = xi;
  opts.delta = delta;
  auto run_trial = [&](std::size_t t) {
    const auto records = gen.sample(n, seed, t);
    const auto chosen = cascade::select_thresholds(records, opts);
    out.selected[t] = chosen.front();
    out.true_relative_error[t] = gen.true_relative_error(chosen.front());
  };

  const auto count = static_cast<std::int64_t>(trials);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t t = 0; t < count; ++t) run_trial(static_cast<std::size_t>(t));
  } else {
    for (std::int64_t t = 0; t < count; ++t) run_trial(static_cast<std::size_t>(t));
  }
  for (double e : out.true_relative_error) out.violations += e > xi;
  return out;
}

double oracle_unsafe_probability(const safeplan::Simulator& sim, const safeplan::SafetyThreshold& gamma,
                                 std::size_t rollouts, std::uint64_t seed, Execution exec) {
  const auto ev = safeplan::evaluate_shield(sim, gamma, rollouts, derive_seed(seed, stream::shield_oracle), exec);
  return 1.0 - ev.safety_rate();
}

SafeplanValidation validate_safeplan(const safeplan::Simulator& sim, const SafeplanValidationOptions& opts,
                                     Execution exec) {
  if (opts.trials == 0) throw std::invalid_argument("validation needs at least one trial");
  std::vector<safeplan::SafetyThreshold> picked(opts.trials, safeplan::SafetyThreshold::always_backup());

  auto run_trial = [&](std::size_t t) {
    const auto data = safeplan::collect_calibration_data(sim, opts.w_rollouts, opts.z_pool,
                                                         derive_seed(opts.seed, stream::calibration_draw, t),
                                                         Execution::serial);
    picked[t] = safeplan::select_safety_threshold(data.unsafe, data.scores, opts.xi, opts.delta);
  };
  const auto count = static_cast<std::int64_t>(opts.trials);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t t = 0; t < count; ++t) run_trial(static_cast<std::size_t>(t));
  } else {
    for (std::int64_t t = 0; t < count; ++t) run_trial(static_cast<std::size_t>(t));
  }

  // Selections land on a finite set of per-state scores, so the oracle runs
  // once per distinct threshold. ALWAYS_BACKUP sorts first via the key -1.
  std::map<double, ThresholdOutcome> by_value;
  for (const auto& p : picked) {
    const double key = p.is_always_backup() ? -1.0 : p.value();
    auto [it, inserted] = by_value.try_emplace(key);
    if (inserted) it->second.threshold = p;
    ++it->second.times_selected;
  }

  SafeplanValidation out;
  out.trials = opts.trials;
  out.xi = opts.xi;
  out.delta = opts.delta;
  for (auto& [key, outcome] : by_value) {
    outcome.oracle_unsafe = oracle_unsafe_probability(sim, outcome.threshold, opts.oracle_rollouts, opts.seed, exec);
    if (outcome.oracle_unsafe > opts.xi) out.violations += outcome.times_selected;
    out.outcomes.push_back(outcome);
  }
  return out;
}

}  // namespace pacconf
