// safeplan.hpp - shield thresholds with a certified bound on rollout unsafety,
// plus the gridworld simulator that supplies rollouts and recoverability labels.
//
// The shield runs the nominal policy until the recoverability score f(o) of the
// current state reaches gamma, then stops for good. Selection picks the largest
// gamma whose bound rbar * (1 - clow) on P[unsafe rollout] is at most xi, where
// [rlow, rbar] bounds the nominal unsafe-rollout rate and [clow, cbar] bounds
// how often the shield fires on the state that led to an unsafe transition.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pacconf/binom_ci.hpp"
#include "pacconf/execution.hpp"
#include "pacconf/rng.hpp"

namespace pacconf::safeplan {

struct Cell {
  int row = 0;
  int col = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct GridConfig {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> obstacle;  // row-major, width * height
  Cell goal;
  std::vector<Cell> starts;            // x0 is uniform over these
  int horizon = 100;
  double epsilon = 0.0;                // probability of a uniformly random move
  double sigma = 0.0;                  // score noise scale
  std::uint64_t seed = 0;              // fixes the per-state score noise

  bool inside(Cell c) const { return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width; }
  bool is_obstacle(Cell c) const { return obstacle[static_cast<std::size_t>(c.row * width + c.col)] != 0; }
  /// Inside the grid and not an obstacle.
  bool is_safe(Cell c) const { return inside(c) && !is_obstacle(c); }

  /// Text form: "key value" lines (horizon, epsilon, sigma, seed), then a line
  /// "map" followed by rows of '.', '#', 'G', 'S'. '#' lines before "map" are comments.
  static GridConfig parse(std::istream& in);
  void write(std::ostream& out) const;
};

/// Shield threshold, or ALWAYS_BACKUP (stop before the first move).
/// Values above 1 are allowed and never fire, which disables the shield.
class SafetyThreshold {
 public:
  static SafetyThreshold always_backup() { return SafetyThreshold(); }
  static SafetyThreshold at(double gamma);

  bool is_always_backup() const { return !gamma_.has_value(); }
  double value() const { return *gamma_; }
  bool fires(double score) const { return !gamma_ || score >= *gamma_; }

  std::string to_string() const;
  static SafetyThreshold parse(const std::string& text);

  friend bool operator==(const SafetyThreshold&, const SafetyThreshold&) = default;

 private:
  SafetyThreshold() = default;
  explicit SafetyThreshold(double gamma) : gamma_(gamma) {}
  std::optional<double> gamma_;
};

enum class Action { north, east, south, west };

struct Rollout {
  bool safe = true;
  bool success = false;
  /// Score of the state the unsafe move was taken from; set iff !safe.
  std::optional<double> first_unsafe_score;
  int steps = 0;
};

/// A validated grid with cached recoverability labels and per-state scores.
class Simulator {
 public:
  /// Throws std::invalid_argument if the goal is blocked, there are no starts,
  /// a start is not recoverable, or parameters are out of range.
  explicit Simulator(GridConfig config);

  const GridConfig& config() const { return config_; }

  /// True iff every move the nominal policy takes with nonzero probability
  /// lands on a safe cell. The goal is recoverable; obstacles are not.
  bool is_recoverable(Cell c) const;
  /// f(o) = clamp(base + sigma * z, 0, 1), base 0.9 for unrecoverable and 0.1
  /// for recoverable states, z a standard normal fixed by (seed, state).
  double score(Cell c) const;
  /// Greedy move: first action in N, E, S, W order that reduces the Manhattan
  /// distance to the goal. Only meaningful away from the goal.
  Action greedy_action(Cell c) const;

  /// One rollout from a uniformly drawn start. nullopt runs the nominal
  /// policy with no shield. Randomness is consumed only by start selection
  /// and epsilon moves, so shielded and nominal runs on the same engine share
  /// a trajectory up to the point the shield fires.
  Rollout rollout(const std::optional<SafetyThreshold>& shield, Engine& rng) const;

 private:
  std::size_t flat(Cell c) const { return static_cast<std::size_t>(c.row * config_.width + c.col); }

  GridConfig config_;
  std::vector<std::uint8_t> recoverable_;
  std::vector<double> score_;
};

Cell step(Cell c, Action a);

struct CalibrationData {
  std::vector<std::uint8_t> unsafe;  // W: 1 if the nominal rollout was unsafe
  std::vector<double> scores;        // Z: first-unsafe scores from a disjoint pool
  std::vector<Rollout> w_rollouts;
  std::vector<Rollout> z_rollouts;
};

/// W from n nominal rollouts on one random stream, Z from the unsafe members
/// of n_pool nominal rollouts on another.
CalibrationData collect_calibration_data(const Simulator& sim, std::size_t n, std::size_t n_pool,
                                         std::uint64_t seed, Execution exec = Execution::parallel);

/// Bound rbar * (1 - clow) for a candidate threshold; 0 for ALWAYS_BACKUP.
double unsafety_bound(std::span<const std::uint8_t> unsafe, std::span<const double> scores,
                      const SafetyThreshold& gamma, double delta);

/// Descending scan over 1, the distinct scores in Z, 0, then ALWAYS_BACKUP.
std::vector<SafetyThreshold> candidate_thresholds(std::span<const double> scores);

SafetyThreshold select_safety_threshold(std::span<const std::uint8_t> unsafe,
                                        std::span<const double> scores, double xi, double delta);

struct ShieldEvaluation {
  std::size_t trials = 0;
  std::size_t safe = 0;
  std::size_t success = 0;
  double safety_rate() const { return static_cast<double>(safe) / static_cast<double>(trials); }
  double success_rate() const { return static_cast<double>(success) / static_cast<double>(trials); }
};

ShieldEvaluation evaluate_shield(const Simulator& sim, std::optional<SafetyThreshold> shield,
                                 std::size_t trials, std::uint64_t seed,
                                 Execution exec = Execution::parallel);

enum class Baseline { naive, xi_naive };

SafetyThreshold baseline_threshold(Baseline mode, double xi);

}  // namespace pacconf::safeplan
