// pacconf - command-line front end for the coverage predictor, cascade
// threshold selection, shield threshold selection and their Monte-Carlo checks.
//
// Exit codes: 0 success / validation passed, 1 validation failed, 2 bad
// arguments or malformed input.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pacconf/binom_ci.hpp"
#include "pacconf/calibrate.hpp"
#include "pacconf/cascade.hpp"
#include "pacconf/io.hpp"
#include "pacconf/metrics.hpp"
#include "pacconf/montecarlo.hpp"
#include "pacconf/safeplan.hpp"
#include "pacconf/synth.hpp"

namespace {

using namespace pacconf;
using io::format_real;

constexpr int kFail = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string short_real(double v) { return fmt("%.6g", v); }

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

// Empty path or "-" means stdout.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

// Validation reports always go to stdout; --out gets a copy.
void report(const std::string& path, const std::string& text) {
  std::cout << text << std::flush;
  if (!path.empty() && path != "-") emit(path, text);
}

class Report {
 public:
  Report& kv(const std::string& key, const std::string& value) {
    buf_ << key << ' ' << value << '\n';
    return *this;
  }
  Report& kv(const std::string& key, double value) { return kv(key, short_real(value)); }
  Report& kv(const std::string& key, std::size_t value) { return kv(key, std::to_string(value)); }
  std::string str() const { return buf_.str(); }

 private:
  std::ostringstream buf_;
};

std::string pass_fail(bool ok) { return ok ? "PASS" : "FAIL"; }

std::vector<PredictionRecord> load_predictions(const std::string& path) {
  auto in = open_in(path);
  auto records = io::read_prediction_log(in, path);
  if (records.empty()) throw std::runtime_error(path + ": no records");
  return records;
}

std::vector<cascade::CascadeRecord> load_cascade(const std::string& path) {
  auto in = open_in(path);
  auto records = io::read_cascade_log(in, path);
  if (records.empty()) throw std::runtime_error(path + ": no records");
  return records;
}

safeplan::Simulator load_grid(const std::string& path) {
  auto in = open_in(path);
  return safeplan::Simulator(safeplan::GridConfig::parse(in));
}

std::vector<safeplan::Rollout> load_rollouts(const std::string& path) {
  auto in = open_in(path);
  return io::read_rollout_log(in, path);
}

safeplan::Baseline parse_baseline(const std::string& name) {
  if (name == "naive") return safeplan::Baseline::naive;
  if (name == "xi-naive") return safeplan::Baseline::xi_naive;
  throw UsageError("unknown baseline '" + name + "' (expected naive or xi-naive)");
}

// A list of length 1 is broadcast to every bin.
std::vector<double> per_bin(const std::vector<double>& given, std::size_t bins, double fallback_each,
                            const char* what) {
  if (given.empty()) return std::vector<double>(bins, fallback_each);
  if (given.size() == 1) return std::vector<double>(bins, given.front());
  if (given.size() != bins) {
    throw UsageError(std::string(what) + " needs 1 or " + std::to_string(bins) + " values");
  }
  return given;
}

struct GeneratorArgs {
  std::vector<double> theta;
  std::vector<double> weights;
  int classes = 10;
};

SyntheticCalibGenerator make_calib_generator(std::size_t bins, const GeneratorArgs& g) {
  if (bins == 0) throw UsageError("--bins must be positive");
  auto scheme = equal_width_bins(bins);
  std::vector<double> theta = g.theta;
  if (theta.empty()) {
    for (std::size_t k = 0; k < bins; ++k) theta.push_back(0.5 * (scheme.lower_edge(k) + scheme.upper_edge(k)));
  }
  theta = per_bin(theta, bins, 0.0, "--theta");
  auto weights = per_bin(g.weights, bins, 1.0 / static_cast<double>(bins), "--weights");
  return SyntheticCalibGenerator(std::move(scheme), std::move(theta), std::move(weights), g.classes);
}

void add_generator_options(CLI::App* cmd, GeneratorArgs& g) {
  cmd->add_option("--theta", g.theta, "True per-bin accuracy (one value or one per bin; default bin midpoints)")
      ->delimiter(',');
  cmd->add_option("--weights", g.weights, "Bin masses (one value or one per bin; default uniform)")
      ->delimiter(',');
  cmd->add_option("--classes", g.classes, "Number of labels")->capture_default_str();
}

void add_two_branch_options(CLI::App* cmd, TwoBranchGenerator& g) {
  cmd->add_option("--slow-accuracy", g.slow_accuracy, "Slow branch accuracy")->capture_default_str();
  cmd->add_option("--fast-at-zero", g.fast_at_zero, "Fast branch accuracy at confidence 0")->capture_default_str();
  cmd->add_option("--fast-at-one", g.fast_at_one, "Fast branch accuracy at confidence 1")->capture_default_str();
  cmd->add_option("--classes", g.num_classes, "Number of labels")->capture_default_str();
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }
std::string opt_count(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string(); }

std::string reliability_csv(const std::vector<ReliabilityBin>& rows) {
  std::string out = "bin,lower,upper,count,mean_conf,conf_lo,conf_hi,accuracy\n";
  for (const auto& r : rows) {
    out += std::to_string(r.index + 1) + ',' + format_real(r.lower_edge) + ',' + format_real(r.upper_edge) + ',' +
           std::to_string(r.count) + ',' + opt_real(r.mean_conf) + ',' +
           (r.conf_range ? format_real(r.conf_range->lo) : std::string()) + ',' +
           (r.conf_range ? format_real(r.conf_range->hi) : std::string()) + ',' + opt_real(r.accuracy) + '\n';
  }
  return out;
}

std::string curve_csv(const std::vector<CurvePoint>& rows) {
  std::string out = "threshold,count,accuracy,count_lower,accuracy_lower,count_upper,accuracy_upper\n";
  for (const auto& r : rows) {
    out += format_real(r.threshold) + ',' + std::to_string(r.count) + ',' + format_real(r.accuracy) + ',' +
           opt_count(r.count_lower) + ',' + opt_real(r.accuracy_lower) + ',' + opt_count(r.count_upper) + ',' +
           opt_real(r.accuracy_upper) + '\n';
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified confidence intervals, cascade exits and shield thresholds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pacconf 1.0");

  std::function<int()> run;
  auto bind = [&run](CLI::App* cmd, std::function<int()> body) {
    cmd->callback([&run, body = std::move(body)] { run = body; });
  };

  // cp-interval
  {
    auto* cmd = app.add_subcommand("cp-interval", "Clopper-Pearson interval for s successes in n trials");
    static std::uint64_t s = 0, n = 0;
    static double alpha = 0.05;
    cmd->add_option("s", s, "Successes")->required();
    cmd->add_option("n", n, "Trials")->required();
    cmd->add_option("alpha", alpha, "Miscoverage level in (0,1)")->required();
    bind(cmd, [] {
      if (s > n) throw UsageError("s must not exceed n");
      if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
      const auto ci = clopper_pearson(BernoulliCounts(s, n), alpha);
      std::cout << fmt("%.15g", ci.lo) << ' ' << fmt("%.15g", ci.hi) << '\n';
      return 0;
    });
  }

  // calibrate
  {
    auto* cmd = app.add_subcommand("calibrate", "Fit a per-bin coverage table from a prediction log");
    static std::string in, out;
    static std::size_t bins = 20;
    static double delta = 0.01;
    cmd->add_option("--in", in, "Prediction log (top_conf pred label)")->required();
    cmd->add_option("--bins", bins, "Number of equal-width bins K")->capture_default_str();
    cmd->add_option("--delta", delta, "Failure probability for the whole table")->capture_default_str();
    cmd->add_option("--out", out, "Coverage table path (default stdout)");
    bind(cmd, [] {
      if (bins == 0) throw UsageError("--bins must be positive");
      const auto records = load_predictions(in);
      const auto table = fit_coverage_predictor(records, equal_width_bins(bins), delta);
      std::ostringstream text;
      table.write(text);
      emit(out, text.str());
      return 0;
    });
  }

  // eval
  {
    auto* cmd = app.add_subcommand("eval", "Calibration metrics for a prediction log, optionally through a table");
    static std::string in, table_path, out, reliability, curve;
    static std::size_t ece_bins = 20;
    static double curve_step = 0.05;
    cmd->add_option("--in", in, "Prediction log")->required();
    cmd->add_option("--table", table_path, "Coverage table from calibrate");
    cmd->add_option("--ece-bins", ece_bins, "Bins J for ECE and reliability data")->capture_default_str();
    cmd->add_option("--curve-step", curve_step, "Threshold spacing of the accuracy-confidence curve")
        ->capture_default_str();
    cmd->add_option("--out", out, "Summary path (default stdout)");
    cmd->add_option("--reliability", reliability, "Reliability CSV path");
    cmd->add_option("--curve", curve, "Accuracy-confidence CSV path");
    bind(cmd, [] {
      if (ece_bins == 0) throw UsageError("--ece-bins must be positive");
      if (!(curve_step > 0.0 && curve_step <= 1.0)) throw UsageError("--curve-step must lie in (0, 1]");
      const auto records = load_predictions(in);
      std::vector<EvaluatedPrediction> raw;
      raw.reserve(records.size());
      for (const auto& r : records) raw.push_back({r.top_conf, std::nullopt, r.correct()});

      Report rep;
      rep.kv("records", records.size()).kv("ece_bins", ece_bins).kv("ece_raw", format_real(ece(raw, ece_bins)));
      std::vector<EvaluatedPrediction> evaluated = raw;
      if (!table_path.empty()) {
        auto tin = open_in(table_path);
        const auto table = CoverageTable::read(tin);
        evaluated.clear();
        for (const auto& r : records) {
          evaluated.push_back({table.predict_mean(r.top_conf), table.predict_interval(r.top_conf), r.correct()});
        }
        const auto range = induced_ece(evaluated, ece_bins);
        rep.kv("ece", format_real(ece(evaluated, ece_bins)))
            .kv("induced_ece_lo", format_real(range.lo))
            .kv("induced_ece_hi", format_real(range.hi));
      }
      emit(out, rep.str());
      if (!reliability.empty()) emit(reliability, reliability_csv(reliability_data(evaluated, ece_bins)));
      if (!curve.empty()) {
        std::vector<double> thresholds;
        const auto steps = static_cast<std::size_t>(1.0 / curve_step + 0.5);
        for (std::size_t i = 0; i <= steps; ++i) {
          thresholds.push_back(std::min(1.0, static_cast<double>(i) * curve_step));
        }
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
        emit(curve, curve_csv(accuracy_confidence_curve(evaluated, thresholds)));
      }
      return 0;
    });
  }

  // synth-calib
  {
    auto* cmd = app.add_subcommand("synth-calib", "Sample a prediction log with known per-bin accuracy");
    static GeneratorArgs gen;
    static std::size_t bins = 10, n = 1000;
    static std::uint64_t seed = 0;
    static std::string out;
    cmd->add_option("--bins", bins, "Number of equal-width bins K")->capture_default_str();
    cmd->add_option("--n", n, "Records to draw")->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", out, "Prediction log path (default stdout)");
    add_generator_options(cmd, gen);
    bind(cmd, [] {
      const auto g = make_calib_generator(bins, gen);
      std::ostringstream text;
      io::write_prediction_log(text, g.sample(n, seed));
      emit(out, text.str());
      return 0;
    });
  }

  // validate-coverage
  {
    auto* cmd = app.add_subcommand("validate-coverage", "Monte-Carlo check that every bin interval covers");
    static GeneratorArgs gen;
    static std::size_t bins = 10, n = 2000, trials = 1000;
    static double delta = 0.1, shrink = 1.0;
    static std::uint64_t seed = 0;
    static std::string out;
    cmd->add_option("--bins", bins, "Number of equal-width bins K")->capture_default_str();
    cmd->add_option("--n", n, "Calibration records per trial")->capture_default_str();
    cmd->add_option("--trials", trials, "Independent calibration draws")->capture_default_str();
    cmd->add_option("--delta", delta, "Failure probability")->capture_default_str();
    cmd->add_option("--shrink", shrink, "Narrow each interval about its mean by this factor")->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", out, "Also write the report here");
    add_generator_options(cmd, gen);
    bind(cmd, [] {
      const auto g = make_calib_generator(bins, gen);
      const auto v = validate_coverage(g, n, delta, trials, seed, shrink);
      Report rep;
      rep.kv("command", "validate-coverage")
          .kv("bins", bins)
          .kv("n", n)
          .kv("trials", trials)
          .kv("delta", delta)
          .kv("shrink", shrink)
          .kv("failures", v.failures)
          .kv("failure_fraction", v.failure_fraction())
          .kv("limit", v.limit())
          .kv("criterion", "failure_fraction <= delta + 3*sqrt(delta*(1-delta)/trials)")
          .kv("mean_width", v.mean_width)
          .kv("result", pass_fail(v.pass()));
      report(out, rep.str());
      return v.pass() ? 0 : kFail;
    });
  }

  // synth-cascade
  {
    auto* cmd = app.add_subcommand("synth-cascade", "Sample a two-branch cascade log with known error rates");
    static TwoBranchGenerator gen;
    static std::size_t n = 5000;
    static std::uint64_t seed = 0;
    static std::string out;
    cmd->add_option("--n", n, "Records to draw")->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", out, "Cascade log path (default stdout)");
    add_two_branch_options(cmd, gen);
    bind(cmd, [] {
      gen.validate();
      std::ostringstream text;
      io::write_cascade_log(text, gen.sample(n, seed));
      emit(out, text.str());
      return 0;
    });
  }

  // cascade-select
  {
    auto* cmd = app.add_subcommand("cascade-select", "Pick exit thresholds with a relative-error guarantee");
    static std::string in, out, baseline;
    static double xi = 0.05, delta = 0.1;
    static std::optional<std::size_t> grid_steps;
    cmd->add_option("--in", in, "Cascade log (label conf_1 pred_1 ... conf_M pred_M)")->required();
    cmd->add_option("--xi", xi, "Allowed increase in error over the slow branch")->capture_default_str();
    cmd->add_option("--delta", delta, "Failure probability")->capture_default_str();
    cmd->add_option("--grid-steps", grid_steps, "Scan the grid k/steps instead of every observed confidence");
    cmd->add_option("--baseline", baseline, "Emit a heuristic instead: softmax (two branches only)");
    cmd->add_option("--out", out, "Threshold file (default stdout)");
    bind(cmd, [] {
      const auto records = load_cascade(in);
      cascade::ThresholdVector chosen;
      if (baseline.empty()) {
        cascade::SelectOptions opts;
        opts.xi = xi;
        opts.delta = delta;
        opts.grid_steps = grid_steps;
        chosen = cascade::select_thresholds(records, opts);
      } else if (baseline == "softmax") {
        if (cascade::validate_records(records) != 2) throw UsageError("softmax baseline needs two branches");
        std::size_t wrong = 0;
        for (const auto& r : records) wrong += r.branches.back().pred != r.true_label;
        const double err = static_cast<double>(wrong) / static_cast<double>(records.size());
        chosen = {cascade::baseline_threshold_softmax(xi, err)};
      } else {
        throw UsageError("unknown baseline '" + baseline + "'");
      }
      std::ostringstream text;
      io::write_thresholds(text, chosen);
      emit(out, text.str());
      return 0;
    });
  }

  // cascade-eval
  {
    auto* cmd = app.add_subcommand("cascade-eval", "Error and cost of a cascade under given thresholds");
    static std::string in, thresholds_path, costs_path, out;
    cmd->add_option("--in", in, "Cascade log")->required();
    cmd->add_option("--thresholds", thresholds_path, "Threshold file from cascade-select")->required();
    cmd->add_option("--costs", costs_path, "Cost file, lines 'cost_<m> = v' (default cost_m = m)");
    cmd->add_option("--out", out, "Summary path (default stdout)");
    bind(cmd, [] {
      const auto records = load_cascade(in);
      auto tin = open_in(thresholds_path);
      const auto thresholds = io::read_thresholds(tin, thresholds_path);
      const std::size_t m = cascade::validate_records(records);
      std::vector<double> costs;
      if (costs_path.empty()) {
        for (std::size_t i = 1; i <= m; ++i) costs.push_back(static_cast<double>(i));
      } else {
        auto cin = open_in(costs_path);
        costs = io::read_costs(cin, costs_path);
      }
      const auto ev = cascade::evaluate_cascade(records, thresholds, costs);
      Report rep;
      rep.kv("records", records.size())
          .kv("error", format_real(ev.error))
          .kv("slow_error", format_real(ev.slow_error))
          .kv("relative_error", format_real(ev.relative_error))
          .kv("mean_cost", format_real(ev.mean_cost));
      for (std::size_t i = 0; i < ev.exit_fractions.size(); ++i) {
        rep.kv("exit_fraction_" + std::to_string(i + 1), format_real(ev.exit_fractions[i]));
      }
      emit(out, rep.str());
      return 0;
    });
  }

  // validate-cascade
  {
    auto* cmd = app.add_subcommand("validate-cascade", "Monte-Carlo check of the relative-error guarantee");
    static TwoBranchGenerator gen;
    static std::size_t n = 5000, trials = 500;
    static double xi = 0.05, delta = 0.1;
    static std::uint64_t seed = 0;
    static std::string out;
    cmd->add_option("--n", n, "Calibration records per trial")->capture_default_str();
    cmd->add_option("--trials", trials, "Independent calibration draws")->capture_default_str();
    cmd->add_option("--xi", xi, "Allowed relative error")->capture_default_str();
    cmd->add_option("--delta", delta, "Failure probability")->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", out, "Also write the report here");
    add_two_branch_options(cmd, gen);
    bind(cmd, [] {
      const auto v = validate_cascade(gen, n, xi, delta, trials, seed);
      double lo = 2.0, hi = -1.0, sum = 0.0, worst = -1.0;
      std::size_t disabled = 0;
      for (std::size_t t = 0; t < v.trials; ++t) {
        worst = std::max(worst, v.true_relative_error[t]);
        const auto& g = v.selected[t];
        if (!g.enabled()) {
          ++disabled;
          continue;
        }
        lo = std::min(lo, g.value());
        hi = std::max(hi, g.value());
        sum += g.value();
      }
      Report rep;
      rep.kv("command", "validate-cascade")
          .kv("n", n)
          .kv("trials", trials)
          .kv("xi", xi)
          .kv("delta", delta)
          .kv("violations", v.violations)
          .kv("violation_fraction", v.violation_fraction())
          .kv("limit", v.limit())
          .kv("criterion", "violation_fraction <= delta + 3*sqrt(delta*(1-delta)/trials)")
          .kv("max_true_relative_error", worst)
          .kv("disabled", disabled);
      if (disabled < v.trials) {
        rep.kv("gamma_min", lo).kv("gamma_max", hi).kv("gamma_mean", sum / static_cast<double>(v.trials - disabled));
      }
      rep.kv("result", pass_fail(v.pass()));
      report(out, rep.str());
      return v.pass() ? 0 : kFail;
    });
  }

  // safeplan-collect
  {
    auto* cmd = app.add_subcommand("safeplan-collect", "Record nominal rollouts for shield calibration");
    static std::string grid, out, z_out;
    static std::size_t n = 5000, pool = 5000;
    static std::uint64_t seed = 0;
    cmd->add_option("--grid", grid, "Grid config")->required();
    cmd->add_option("--n", n, "Rollouts for the unsafe-rate sample W")->capture_default_str();
    cmd->add_option("--pool", pool, "Rollouts whose unsafe members form the score sample Z")->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", out, "Rollout log for W")->required();
    cmd->add_option("--z-out", z_out, "Rollout log for the Z pool")->required();
    bind(cmd, [] {
      const auto sim = load_grid(grid);
      const auto data = safeplan::collect_calibration_data(sim, n, pool, seed);
      std::ostringstream w_text, z_text;
      io::write_rollout_log(w_text, data.w_rollouts);
      io::write_rollout_log(z_text, data.z_rollouts);
      emit(out, w_text.str());
      emit(z_out, z_text.str());
      return 0;
    });
  }

  // safeplan-select
  {
    auto* cmd = app.add_subcommand("safeplan-select", "Pick a shield threshold with an unsafety guarantee");
    static std::string w_path, z_path, out, baseline;
    static double xi = 0.1, delta = 0.1;
    cmd->add_option("--w", w_path, "Rollout log for W")->required();
    cmd->add_option("--z", z_path, "Rollout log for the Z pool")->required();
    cmd->add_option("--xi", xi, "Allowed probability of an unsafe rollout")->capture_default_str();
    cmd->add_option("--delta", delta, "Failure probability")->capture_default_str();
    cmd->add_option("--baseline", baseline, "Emit a heuristic instead: naive or xi-naive");
    cmd->add_option("--out", out, "Threshold file (default stdout)");
    bind(cmd, [] {
      std::optional<safeplan::SafetyThreshold> gamma;
      if (!baseline.empty()) {
        gamma = safeplan::baseline_threshold(parse_baseline(baseline), xi);
      } else {
        std::vector<std::uint8_t> unsafe;
        for (const auto& r : load_rollouts(w_path)) unsafe.push_back(!r.safe);
        if (unsafe.empty()) throw std::runtime_error(w_path + ": no rollouts");
        std::vector<double> scores;
        for (const auto& r : load_rollouts(z_path)) {
          if (r.first_unsafe_score) scores.push_back(*r.first_unsafe_score);
        }
        gamma = safeplan::select_safety_threshold(unsafe, scores, xi, delta);
      }
      emit(out, gamma->to_string() + '\n');
      return 0;
    });
  }

  // safeplan-eval
  {
    auto* cmd = app.add_subcommand("safeplan-eval", "Safety and success rates of a shielded policy");
    static std::string grid, threshold, threshold_file, out;
    static std::size_t trials = 10000;
    static std::uint64_t seed = 0;
    static bool nominal = false;
    cmd->add_option("--grid", grid, "Grid config")->required();
    auto* t1 = cmd->add_option("--threshold", threshold, "Threshold value or ALWAYS_BACKUP");
    auto* t2 = cmd->add_option("--threshold-file", threshold_file, "Threshold file from safeplan-select");
    auto* t3 = cmd->add_flag("--nominal", nominal, "Run the nominal policy without a shield");
    t1->excludes(t2)->excludes(t3);
    t2->excludes(t3);
    cmd->add_option("--trials", trials, "Rollouts")->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", out, "Summary path (default stdout)");
    bind(cmd, [] {
      const auto sim = load_grid(grid);
      std::optional<safeplan::SafetyThreshold> shield;
      std::string label = "nominal";
      if (!threshold.empty()) {
        shield = safeplan::SafetyThreshold::parse(threshold);
      } else if (!threshold_file.empty()) {
        auto tin = open_in(threshold_file);
        std::string word;
        if (!(tin >> word)) throw std::runtime_error(threshold_file + ": empty threshold file");
        shield = safeplan::SafetyThreshold::parse(word);
      } else if (!nominal) {
        throw UsageError("give --threshold, --threshold-file or --nominal");
      }
      if (shield) label = shield->to_string();
      if (trials == 0) throw UsageError("--trials must be positive");
      const auto ev = safeplan::evaluate_shield(sim, shield, trials, seed);
      Report rep;
      rep.kv("threshold", label)
          .kv("trials", trials)
          .kv("safety_rate", format_real(ev.safety_rate()))
          .kv("unsafe_rate", format_real(1.0 - ev.safety_rate()))
          .kv("success_rate", format_real(ev.success_rate()));
      emit(out, rep.str());
      return 0;
    });
  }

  // validate-safeplan
  {
    auto* cmd = app.add_subcommand("validate-safeplan", "Monte-Carlo check of the unsafety guarantee");
    static std::string grid, out, baseline;
    static SafeplanValidationOptions opts;
    cmd->add_option("--grid", grid, "Grid config")->required();
    cmd->add_option("--n", opts.w_rollouts, "Rollouts in W per trial")->capture_default_str();
    cmd->add_option("--pool", opts.z_pool, "Rollouts in the Z pool per trial")->capture_default_str();
    cmd->add_option("--trials", opts.trials, "Independent (W, Z) draws")->capture_default_str();
    cmd->add_option("--xi", opts.xi, "Allowed probability of an unsafe rollout")->capture_default_str();
    cmd->add_option("--delta", opts.delta, "Failure probability")->capture_default_str();
    cmd->add_option("--oracle-rollouts", opts.oracle_rollouts, "Rollouts per oracle estimate")
        ->capture_default_str();
    cmd->add_option("--seed", opts.seed, "Random seed")->capture_default_str();
    cmd->add_option("--baseline", baseline, "Also score a heuristic threshold: naive or xi-naive");
    cmd->add_option("--out", out, "Also write the report here");
    bind(cmd, [] {
      const auto sim = load_grid(grid);
      const auto v = validate_safeplan(sim, opts);
      Report rep;
      rep.kv("command", "validate-safeplan")
          .kv("n", opts.w_rollouts)
          .kv("pool", opts.z_pool)
          .kv("trials", opts.trials)
          .kv("xi", opts.xi)
          .kv("delta", opts.delta)
          .kv("oracle_rollouts", opts.oracle_rollouts)
          .kv("violations", v.violations)
          .kv("violation_fraction", v.violation_fraction())
          .kv("limit", v.limit())
          .kv("criterion", "violation_fraction <= delta + 3*sqrt(delta*(1-delta)/trials)");
      for (const auto& o : v.outcomes) {
        rep.kv("selected", o.threshold.to_string() + " times " + std::to_string(o.times_selected) +
                               " oracle_unsafe " + short_real(o.oracle_unsafe));
      }
      if (!baseline.empty()) {
        const auto b = safeplan::baseline_threshold(parse_baseline(baseline), opts.xi);
        const double p = oracle_unsafe_probability(sim, b, opts.oracle_rollouts, opts.seed);
        rep.kv("baseline", baseline + " " + b.to_string() + " oracle_unsafe " + short_real(p) +
                               (p > opts.xi ? " violates" : " satisfies"));
      }
      rep.kv("result", pass_fail(v.pass()));
      report(out, rep.str());
      return v.pass() ? 0 : kFail;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    return run ? run() : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
