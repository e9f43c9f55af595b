// acceptance - one line per release criterion, exits nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "pacconf/binom_ci.hpp"
#include "pacconf/calibrate.hpp"
#include "pacconf/cascade.hpp"
#include "pacconf/metrics.hpp"
#include "pacconf/montecarlo.hpp"
#include "pacconf/rng.hpp"
#include "pacconf/safeplan.hpp"
#include "pacconf/synth.hpp"

using namespace pacconf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = o.pass && secs <= budget_s;
  if (!ok) ++failures;
  std::printf("[%s] %-28s %s (%.1fs, budget %.0fs)\n", ok ? "PASS" : "FAIL", name, o.detail.c_str(), secs,
              budget_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

safeplan::Simulator load_grid(const std::string& name) {
  std::ifstream in(std::string(PACCONF_DATA) + "/" + name);
  if (!in) throw std::runtime_error("cannot open " + name);
  return safeplan::Simulator(safeplan::GridConfig::parse(in));
}

double gamma_key(const cascade::ExitThreshold& t) {
  return t.enabled() ? t.value() : std::numeric_limits<double>::infinity();
}

Outcome cp_equivalence() {
  double worst = 0.0;
  for (double alpha : {0.1, 0.05, 0.01}) {
    for (std::uint64_t n = 0; n <= 50; ++n) {
      for (std::uint64_t s = 0; s <= n; ++s) {
        const auto a = clopper_pearson(BernoulliCounts(s, n), alpha);
        const auto b = clopper_pearson_tail_oracle(BernoulliCounts(s, n), alpha);
        worst = std::max({worst, std::abs(a.lo - b.lo), std::abs(a.hi - b.hi)});
      }
    }
  }
  return {worst <= 1e-8, fmt("max |diff| %.3g (tol 1e-8)", worst)};
}

Outcome cp_coverage() {
  std::size_t cells = 0, bad = 0;
  double worst_gap = std::numeric_limits<double>::infinity();
  for (int t = 1; t <= 19; ++t) {
    for (std::uint64_t n : {10u, 100u, 1000u}) {
      for (double alpha : {0.1, 0.01}) {
        const double theta = 0.05 * t;
        const auto cell = cp_coverage_cell(theta, n, alpha, 10000, 2024 + cells);
        ++cells;
        if (!cell.pass()) ++bad;
        worst_gap = std::min(worst_gap, cell.coverage() - cell.required());
      }
    }
  }
  return {bad == 0, fmt("%zu/%zu cells below 1-alpha-3sigma, min margin %.4f", bad, cells, worst_gap)};
}

Outcome table_is_pac() {
  const auto gen = SyntheticCalibGenerator::calibrated(10);
  const auto v = validate_coverage(gen, 2000, 0.1, 1000, 1);
  const auto control = validate_coverage(gen, 2000, 0.1, 1000, 1, 4.0);
  return {v.pass() && !control.pass(),
          fmt("failure %.4f <= %.4f; shrink-4 control %.4f (%s)", v.failure_fraction(), v.limit(),
              control.failure_fraction(), control.pass() ? "passed, bad" : "fails as required")};
}

Outcome cascade_bound() {
  TwoBranchGenerator gen;
  const auto v = validate_cascade(gen, 5000, 0.05, 0.1, 500, 2);
  const auto data = gen.sample(5000, 77);
  std::vector<double> gammas;
  bool monotone = true;
  for (double xi : {0.01, 0.02, 0.04, 0.08}) {
    const auto t = cascade::select_thresholds(data, {xi, 0.1, std::nullopt});
    gammas.push_back(gamma_key(t.front()));
    if (gammas.size() > 1 && gammas.back() > gammas[gammas.size() - 2]) monotone = false;
  }
  return {v.pass() && monotone,
          fmt("violations %.4f <= %.4f; gamma over xi {.01,.02,.04,.08} = %.4f %.4f %.4f %.4f", v.violation_fraction(),
              v.limit(), gammas[0], gammas[1], gammas[2], gammas[3])};
}

Outcome cascade_optimality() {
  Engine rng = make_engine(3, 300, 0);
  const std::vector<double> costs{0.45, 1.0};
  int optimal = 0;
  for (int i = 0; i < 20; ++i) {
    TwoBranchGenerator gen;
    gen.slow_accuracy = 0.7 + 0.25 * uniform01(rng);
    gen.fast_at_zero = 0.3 * uniform01(rng);
    gen.fast_at_one = 0.8 + 0.2 * uniform01(rng);
    const double xi = 0.01 + 0.09 * uniform01(rng);
    const auto data = gen.sample(2000, 400 + i);
    const auto selected = cascade::select_thresholds(data, {xi, 0.1, std::nullopt});
    const double picked = cascade::evaluate_cascade(data, selected, costs).mean_cost;
    double best = std::numeric_limits<double>::infinity();
    const cascade::ThresholdVector none(1, cascade::ExitThreshold::disabled());
    for (const auto& c : cascade::candidate_thresholds(data, none, 0)) {
      const cascade::ThresholdVector trial{c};
      if (cascade::constraint_value(data, trial, 0, 0.1) > xi) continue;
      best = std::min(best, cascade::evaluate_cascade(data, trial, costs).mean_cost);
    }
    if (picked <= best + 1e-12) ++optimal;
  }
  return {optimal == 20, fmt("%d/20 instances at the minimal feasible mean cost", optimal)};
}

Outcome shield_bound() {
  const auto sim = load_grid("gridworld.grid");
  SafeplanValidationOptions opts;
  opts.seed = 4;
  const auto v = validate_safeplan(sim, opts);
  const auto noisy = load_grid("gridworld_noisy.grid");
  const double naive =
      oracle_unsafe_probability(noisy, safeplan::baseline_threshold(safeplan::Baseline::naive, 0.1), 1000000, 5);
  return {v.pass() && naive > 0.1,
          fmt("violations %.4f <= %.4f over %zu distinct selections; naive 0.5 on noisy grid unsafe %.4f > 0.1",
              v.violation_fraction(), v.limit(), v.outcomes.size(), naive)};
}

Outcome metrics_sandwich() {
  Engine rng = make_engine(6, 600, 0);
  int held = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 1 + rng() % 20;
    const std::size_t j = 1 + rng() % 30;
    const double bend = 0.5 + 2.0 * uniform01(rng);
    std::vector<PredictionRecord> calib, test;
    for (int i = 0; i < 1000; ++i) {
      const double c = uniform01(rng);
      calib.push_back({c, 0, uniform01(rng) < std::pow(c, bend) ? 0 : 1});
      const double d = uniform01(rng);
      test.push_back({d, 0, uniform01(rng) < std::pow(d, bend) ? 0 : 1});
    }
    const auto table = fit_coverage_predictor(calib, equal_width_bins(k), 0.05);
    std::vector<EvaluatedPrediction> p;
    for (const auto& r : test) p.push_back({table.predict_mean(r.top_conf), table.predict_interval(r.top_conf), r.correct()});
    const auto range = induced_ece(p, j);
    const double e = ece(p, j);
    if (range.lo <= e + 1e-12 && e <= range.hi + 1e-12) ++held;
  }
  // zero width: each value sits at a bin centre
  std::vector<EvaluatedPrediction> flat;
  for (int i = 0; i < 500; ++i) {
    const double c = (static_cast<double>(rng() % 25) + 0.5) / 25.0;
    flat.push_back({c, ConfidenceInterval{c, c}, uniform01(rng) < c});
  }
  const auto r = induced_ece(flat, 25);
  const double e = ece(flat, 25);
  const double gap = std::max(std::abs(r.lo - e), std::abs(r.hi - e));
  return {held == 100 && gap <= 1e-12, fmt("%d/100 tables sandwiched; zero-width gap %.3g", held, gap)};
}

// --- determinism ----------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("pacconf_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cli = PACCONF_CLI;
  const std::string data = PACCONF_DATA;
  auto p = [&](const std::string& run, const std::string& name) { return (dir / run / name).string(); };

  // Each command writes its artifacts under <run>/; {R} is replaced by that path.
  const std::vector<std::string> commands{
      "cp-interval 17 40 0.01",
      "synth-calib --bins 10 --n 3000 --seed 11 --out {R}/calib.log",
      "calibrate --in {R}/calib.log --bins 10 --delta 0.05 --out {R}/table.txt",
      "eval --in {R}/calib.log --table {R}/table.txt --reliability {R}/rel.csv --curve {R}/curve.csv --out "
      "{R}/eval.txt",
      "validate-coverage --bins 10 --n 500 --trials 50 --seed 3 --out {R}/cov.txt",
      "synth-cascade --n 3000 --seed 12 --out {R}/casc.log",
      "cascade-select --in {R}/casc.log --xi 0.05 --delta 0.1 --out {R}/thr.txt",
      "cascade-eval --in {R}/casc.log --thresholds {R}/thr.txt --costs " + data + "/costs.txt --out {R}/ceval.txt",
      "validate-cascade --n 1000 --trials 20 --seed 4 --out {R}/vc.txt",
      "safeplan-collect --grid " + data + "/gridworld.grid --n 2000 --pool 2000 --seed 5 --out {R}/w.log --z-out "
      "{R}/z.log",
      "safeplan-select --w {R}/w.log --z {R}/z.log --out {R}/gamma.txt",
      "safeplan-eval --grid " + data + "/gridworld.grid --threshold-file {R}/gamma.txt --trials 2000 --seed 6 --out "
      "{R}/seval.txt",
      "validate-safeplan --grid " + data +
          "/gridworld.grid --n 1000 --pool 1000 --trials 5 --oracle-rollouts 20000 --seed 7 --out {R}/vs.txt",
  };

  std::size_t mismatched = 0, errors = 0, files = 0;
  std::string first_bad;
  std::vector<std::string> stdout_text[2];
  for (int run = 0; run < 2; ++run) {
    const std::string tag = "run" + std::to_string(run);
    fs::create_directories(dir / tag);
    for (std::size_t i = 0; i < commands.size(); ++i) {
      std::string args = commands[i];
      for (std::size_t at; (at = args.find("{R}")) != std::string::npos;) args.replace(at, 3, (dir / tag).string());
      const std::string out = p(tag, "stdout_" + std::to_string(i));
      const int status = std::system((cli + " " + args + " > " + out + " 2>&1").c_str());
      // validate-* exit 1 on a failed check; that is still a valid, comparable run
      const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
      if (code != 0 && code != 1) {
        ++errors;
        if (first_bad.empty()) first_bad = commands[i].substr(0, commands[i].find(' '));
      }
    }
  }
  for (const auto& entry : fs::directory_iterator(dir / "run0")) {
    const auto name = entry.path().filename();
    ++files;
    if (!fs::exists(dir / "run1" / name) || slurp(entry.path()) != slurp(dir / "run1" / name)) {
      ++mismatched;
      if (first_bad.empty()) first_bad = name.string();
    }
  }
  fs::remove_all(dir);
  return {mismatched == 0 && errors == 0 && files > commands.size(),
          fmt("%zu commands, %zu outputs compared, %zu differ, %zu errored%s%s", commands.size(), files, mismatched,
              errors, first_bad.empty() ? "" : "; first: ", first_bad.c_str())};
}

}  // namespace

int main() {
  criterion("cp oracle equivalence", 10, cp_equivalence);
  criterion("cp coverage grid", 300, cp_coverage);
  criterion("coverage table is PAC", 120, table_is_pac);
  criterion("cascade bound holds", 300, cascade_bound);
  criterion("cascade cost optimality", 60, cascade_optimality);
  criterion("shield bound holds", 600, shield_bound);
  criterion("ece sandwich", 30, metrics_sandwich);
  criterion("seeded determinism", 600, determinism);
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
