#include "pacconf/safeplan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pacconf::safeplan {

namespace {

constexpr Action kActions[] = {Action::north, Action::east, Action::south, Action::west};

int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Cell step(Cell c, Action a) {
  switch (a) {
    case Action::north: return {c.row - 1, c.col};
    case Action::east: return {c.row, c.col + 1};
    case Action::south: return {c.row + 1, c.col};
    case Action::west: return {c.row, c.col - 1};
  }
  return c;
}

GridConfig GridConfig::parse(std::istream& in) {
  GridConfig cfg;
  std::string line;
  int line_no = 0;
  bool in_map = false;
  bool have_goal = false;
  std::vector<std::string> rows;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error("grid config line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (in_map) {
      if (t.empty()) continue;
      rows.push_back(t);
      continue;
    }
    if (t.empty() || t[0] == '#') continue;
    if (t == "map") {
      in_map = true;
      continue;
    }
    std::istringstream kv(t);
    std::string key;
    kv >> key;
    bool ok = true;
    if (key == "horizon") {
      ok = static_cast<bool>(kv >> cfg.horizon);
    } else if (key == "epsilon") {
      ok = static_cast<bool>(kv >> cfg.epsilon);
    } else if (key == "sigma") {
      ok = static_cast<bool>(kv >> cfg.sigma);
    } else if (key == "seed") {
      ok = static_cast<bool>(kv >> cfg.seed);
    } else {
      fail("unknown key '" + key + "'");
    }
    if (!ok) fail("bad value for '" + key + "'");
  }
  if (rows.empty()) throw std::runtime_error("grid config has no map");
  cfg.height = static_cast<int>(rows.size());
  cfg.width = static_cast<int>(rows.front().size());
  cfg.obstacle.assign(static_cast<std::size_t>(cfg.width * cfg.height), 0);
  for (int r = 0; r < cfg.height; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != cfg.width) {
      throw std::runtime_error("grid map rows must all have the same width");
    }
    for (int c = 0; c < cfg.width; ++c) {
      switch (row[static_cast<std::size_t>(c)]) {
        case '.': break;
        case '#': cfg.obstacle[static_cast<std::size_t>(r * cfg.width + c)] = 1; break;
        case 'S': cfg.starts.push_back({r, c}); break;
        case 'G':
          if (have_goal) throw std::runtime_error("grid map has more than one goal");
          cfg.goal = {r, c};
          have_goal = true;
          break;
        default:
          throw std::runtime_error(std::string("grid map has unknown cell '") +
                                   row[static_cast<std::size_t>(c)] + "'");
      }
    }
  }
  if (!have_goal) throw std::runtime_error("grid map has no goal");
  return cfg;
}

void GridConfig::write(std::ostream& out) const {
  std::ostringstream buf;
  buf.precision(17);
  buf << "horizon " << horizon << "\nepsilon " << epsilon << "\nsigma " << sigma << "\nseed " << seed
      << "\nmap\n";
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const Cell cell{r, c};
      char ch = is_obstacle(cell) ? '#' : '.';
      if (cell == goal) ch = 'G';
      if (std::find(starts.begin(), starts.end(), cell) != starts.end()) ch = 'S';
      buf << ch;
    }
    buf << '\n';
  }
  out << buf.str();
}

SafetyThreshold SafetyThreshold::at(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("safety threshold must be a finite value >= 0");
  }
  return SafetyThreshold(gamma);
}

std::string SafetyThreshold::to_string() const {
  if (is_always_backup()) return "ALWAYS_BACKUP";
  std::ostringstream buf;
  buf.precision(17);
  buf << *gamma_;
  return buf.str();
}

SafetyThreshold SafetyThreshold::parse(const std::string& text) {
  const std::string t = trim(text);
  if (t == "ALWAYS_BACKUP") return always_backup();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse safety threshold '" + t + "'");
  }
  if (used != t.size()) throw std::invalid_argument("cannot parse safety threshold '" + t + "'");
  return at(v);
}

Simulator::Simulator(GridConfig config) : config_(std::move(config)) {
  const auto& c = config_;
  if (c.width <= 0 || c.height <= 0) throw std::invalid_argument("grid must be nonempty");
  if (c.obstacle.size() != static_cast<std::size_t>(c.width * c.height)) {
    throw std::invalid_argument("obstacle mask has the wrong size");
  }
  if (!c.is_safe(c.goal)) throw std::invalid_argument("goal must be a free cell");
  if (c.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (!(c.sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
  if (c.starts.empty()) throw std::invalid_argument("grid needs at least one start cell");

  const std::size_t cells = c.obstacle.size();
  recoverable_.assign(cells, 0);
  score_.assign(cells, 0.0);
  for (int r = 0; r < c.height; ++r) {
    for (int col = 0; col < c.width; ++col) {
      const Cell cell{r, col};
      bool rec = false;
      if (c.is_safe(cell)) {
        if (cell == c.goal) {
          rec = true;
        } else if (c.epsilon > 0.0) {
          rec = std::all_of(std::begin(kActions), std::end(kActions),
                            [&](Action a) { return c.is_safe(step(cell, a)); });
        } else {
          rec = c.is_safe(step(cell, greedy_action(cell)));
        }
      }
      const std::size_t i = flat(cell);
      recoverable_[i] = rec;
      const double base = rec ? 0.1 : 0.9;
      const double noise = c.sigma * hashed_normal(derive_seed(c.seed, stream::state_score, i));
      score_[i] = std::clamp(base + noise, 0.0, 1.0);
    }
  }
  for (const auto& s : c.starts) {
    if (!c.inside(s) || !recoverable_[flat(s)]) {
      throw std::invalid_argument("start cell (" + std::to_string(s.row) + "," + std::to_string(s.col) +
                                  ") is not recoverable");
    }
  }
}

bool Simulator::is_recoverable(Cell c) const {
  if (!config_.inside(c)) throw std::invalid_argument("state outside the grid");
  return recoverable_[flat(c)] != 0;
}

double Simulator::score(Cell c) const {
  if (!config_.inside(c)) throw std::invalid_argument("state outside the grid");
  return score_[flat(c)];
}

Action Simulator::greedy_action(Cell c) const {
  const int d = manhattan(c, config_.goal);
  for (Action a : kActions) {
    if (manhattan(step(c, a), config_.goal) < d) return a;
  }
  return Action::north;
}

Rollout Simulator::rollout(const std::optional<SafetyThreshold>& shield, Engine& rng) const {
  const auto& c = config_;
  Cell x = c.starts[rng() % c.starts.size()];
  Rollout out;
  for (int t = 0;; ++t) {
    out.steps = t;
    if (x == c.goal) {
      out.success = true;
      return out;
    }
    if (t == c.horizon) return out;
    if (shield && shield->fires(score_[flat(x)])) return out;
    Action a;
    if (c.epsilon > 0.0 && uniform01(rng) < c.epsilon) {
      a = kActions[rng() % 4];
    } else {
      a = greedy_action(x);
    }
    const Cell next = step(x, a);
    if (!c.is_safe(next)) {
      out.safe = false;
      out.first_unsafe_score = score_[flat(x)];
      out.steps = t + 1;
      return out;
    }
    x = next;
  }
}

namespace {

std::vector<Rollout> run_rollouts(const Simulator& sim, const std::optional<SafetyThreshold>& shield,
                                  std::size_t count, std::uint64_t seed, std::uint64_t stream_id,
                                  Execution exec) {
  std::vector<Rollout> out(count);
  const auto n = static_cast<std::int64_t>(count);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      Engine rng = make_engine(seed, stream_id, static_cast<std::uint64_t>(i));
      out[static_cast<std::size_t>(i)] = sim.rollout(shield, rng);
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      Engine rng = make_engine(seed, stream_id, static_cast<std::uint64_t>(i));
      out[static_cast<std::size_t>(i)] = sim.rollout(shield, rng);
    }
  }
  return out;
}

}  // namespace

CalibrationData collect_calibration_data(const Simulator& sim, std::size_t n, std::size_t n_pool,
                                         std::uint64_t seed, Execution exec) {
  CalibrationData data;
  data.w_rollouts = run_rollouts(sim, std::nullopt, n, seed, stream::shield_w_pool, exec);
  data.z_rollouts = run_rollouts(sim, std::nullopt, n_pool, seed, stream::shield_z_pool, exec);
  data.unsafe.reserve(n);
  for (const auto& r : data.w_rollouts) data.unsafe.push_back(r.safe ? 0 : 1);
  for (const auto& r : data.z_rollouts) {
    if (r.first_unsafe_score) data.scores.push_back(*r.first_unsafe_score);
  }
  return data;
}

namespace {

ConfidenceInterval unsafe_rate_interval(std::span<const std::uint8_t> unsafe, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  std::uint64_t s = 0;
  for (auto u : unsafe) s += u != 0;
  return clopper_pearson(BernoulliCounts(s, unsafe.size()), delta / 2.0);
}

double bound_from_counts(const ConfidenceInterval& unsafe_rate, std::uint64_t fired, std::uint64_t pool,
                         double delta) {
  const auto fire_rate = clopper_pearson(BernoulliCounts(fired, pool), delta / 2.0);
  return unsafe_rate.hi * (1.0 - fire_rate.lo);
}

}  // namespace

double unsafety_bound(std::span<const std::uint8_t> unsafe, std::span<const double> scores,
                      const SafetyThreshold& gamma, double delta) {
  const auto r = unsafe_rate_interval(unsafe, delta);
  if (gamma.is_always_backup()) return 0.0;
  std::uint64_t fired = 0;
  for (double s : scores) fired += gamma.fires(s);
  return bound_from_counts(r, fired, scores.size(), delta);
}

std::vector<SafetyThreshold> candidate_thresholds(std::span<const double> scores) {
  std::vector<double> values(scores.begin(), scores.end());
  values.push_back(0.0);
  values.push_back(1.0);
  std::sort(values.begin(), values.end(), std::greater<>());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<SafetyThreshold> out;
  out.reserve(values.size() + 1);
  for (double v : values) out.push_back(SafetyThreshold::at(v));
  out.push_back(SafetyThreshold::always_backup());
  return out;
}

SafetyThreshold select_safety_threshold(std::span<const std::uint8_t> unsafe,
                                        std::span<const double> scores, double xi, double delta) {
  if (!(xi >= 0.0)) throw std::invalid_argument("xi must be nonnegative");
  const auto r = unsafe_rate_interval(unsafe, delta);
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (const auto& candidate : candidate_thresholds(scores)) {
    if (candidate.is_always_backup()) return candidate;
    const double gamma = candidate.value();
    const auto cut = std::partition_point(sorted.begin(), sorted.end(), [gamma](double s) { return s >= gamma; });
    const auto fired = static_cast<std::uint64_t>(cut - sorted.begin());
    if (bound_from_counts(r, fired, sorted.size(), delta) <= xi) return candidate;
  }
  return SafetyThreshold::always_backup();
}

ShieldEvaluation evaluate_shield(const Simulator& sim, std::optional<SafetyThreshold> shield,
                                 std::size_t trials, std::uint64_t seed, Execution exec) {
  if (trials == 0) throw std::invalid_argument("evaluation needs at least one trial");
  const auto n = static_cast<std::int64_t>(trials);
  std::int64_t safe = 0;
  std::int64_t success = 0;
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static) reduction(+ : safe, success)
    for (std::int64_t i = 0; i < n; ++i) {
      Engine rng = make_engine(seed, stream::shield_eval, static_cast<std::uint64_t>(i));
      const auto r = sim.rollout(shield, rng);
      safe += r.safe;
      success += r.success;
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      Engine rng = make_engine(seed, stream::shield_eval, static_cast<std::uint64_t>(i));
      const auto r = sim.rollout(shield, rng);
      safe += r.safe;
      success += r.success;
    }
  }
  ShieldEvaluation ev;
  ev.trials = trials;
  ev.safe = static_cast<std::size_t>(safe);
  ev.success = static_cast<std::size_t>(success);
  return ev;
}

SafetyThreshold baseline_threshold(Baseline mode, double xi) {
  switch (mode) {
    case Baseline::naive: return SafetyThreshold::at(0.5);
    case Baseline::xi_naive: return SafetyThreshold::at(xi);
  }
  return SafetyThreshold::at(0.5);
}

}  // namespace pacconf::safeplan
