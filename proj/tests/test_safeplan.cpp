#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacconf/safeplan.hpp"

using namespace pacconf;
using namespace pacconf::safeplan;

namespace {

GridConfig grid(const std::string& text) {
  std::istringstream in(text);
  return GridConfig::parse(in);
}

const char* const kRoom =
    "horizon 60\nepsilon 0.1\nsigma 0.3\nseed 1\nmap\n"
    "...............\n"
    "...............\n"
    "..S.#.....S....\n"
    "...............\n"
    ".......G.......\n"
    "...............\n"
    "..S.......S....\n"
    "...............\n";

Simulator room(double sigma) {
  auto cfg = grid(kRoom);
  cfg.sigma = sigma;
  return Simulator(cfg);
}

// Exhaustive descending scan recomputing every bound from scratch.
SafetyThreshold brute_force_select(const std::vector<std::uint8_t>& w, const std::vector<double>& z,
                                   double xi, double delta) {
  for (const auto& c : candidate_thresholds(z)) {
    if (unsafety_bound(w, z, c, delta) <= xi) return c;
  }
  return SafetyThreshold::always_backup();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = grid(kRoom);
  CHECK(cfg.width == 15);
  CHECK(cfg.height == 8);
  CHECK(cfg.horizon == 60);
  CHECK(cfg.epsilon == 0.1);
  CHECK(cfg.goal == Cell{4, 7});
  CHECK(cfg.starts.size() == 4);
  CHECK(cfg.is_obstacle({2, 4}));
  CHECK_FALSE(cfg.is_safe({-1, 0}));
  CHECK_FALSE(cfg.is_safe({0, 15}));

  std::ostringstream out;
  cfg.write(out);
  const auto back = grid(out.str());
  CHECK(back.obstacle == cfg.obstacle);
  CHECK(back.goal == cfg.goal);
  CHECK(back.starts == cfg.starts);
  CHECK(back.sigma == cfg.sigma);

  CHECK_THROWS(grid("bogus 3\nmap\nG\n"));
  CHECK_THROWS(grid("horizon x\nmap\nG\n"));
  CHECK_THROWS(grid("map\n...\n"));
  CHECK_THROWS(grid("map\nGG\n"));
  CHECK_THROWS(grid("map\nG..\n..\n"));
  CHECK_THROWS(grid("map\nG?\n"));
  CHECK_THROWS(grid("horizon 3\n"));
}

TEST_CASE("simulator validation") {
  CHECK_THROWS_AS(Simulator(grid("map\nG..\n")), std::invalid_argument);          // no start
  CHECK_THROWS_AS(Simulator(grid("epsilon 0.2\nmap\nSG\n")), std::invalid_argument);  // start on the edge
  CHECK_THROWS_AS(Simulator(grid("epsilon 1.5\nmap\n...\n.S.\n.G.\n")), std::invalid_argument);
  CHECK_THROWS_AS(Simulator(grid("horizon 0\nmap\nSG\n")), std::invalid_argument);
  CHECK_NOTHROW(Simulator(grid("map\nSG\n")));
}

TEST_CASE("recoverability") {
  const auto sim = room(0.3);
  CHECK(sim.is_recoverable({3, 3}));                // all neighbours free
  CHECK_FALSE(sim.is_recoverable({0, 3}));          // a random move can leave the grid
  CHECK_FALSE(sim.is_recoverable({2, 3}));          // next to the obstacle
  CHECK_FALSE(sim.is_recoverable({2, 4}));          // the obstacle itself
  CHECK(sim.is_recoverable({4, 7}));                // goal
  CHECK_THROWS_AS(sim.is_recoverable({8, 0}), std::invalid_argument);

  // with epsilon = 0 only the greedy successor matters
  const Simulator det(grid("epsilon 0\nmap\nS.#G\n"));
  CHECK(det.is_recoverable({0, 0}));
  CHECK_FALSE(det.is_recoverable({0, 1}));  // greedy move east runs into '#'
}

TEST_CASE("scores follow recoverability") {
  const auto exact = room(0.0);
  const auto noisy = room(0.3);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 15; ++c) {
      const Cell x{r, c};
      CHECK(exact.score(x) == (exact.is_recoverable(x) ? 0.1 : 0.9));
      CHECK(noisy.score(x) >= 0.0);
      CHECK(noisy.score(x) <= 1.0);
    }
  }
  CHECK(room(0.3).score({1, 1}) == noisy.score({1, 1}));
}

TEST_CASE("greedy action order") {
  const auto sim = room(0.0);
  CHECK(sim.greedy_action({0, 0}) == Action::east);   // south also helps; east comes first
  CHECK(sim.greedy_action({7, 7}) == Action::north);
  CHECK(sim.greedy_action({4, 10}) == Action::west);
  CHECK(sim.greedy_action({2, 7}) == Action::south);
}

TEST_CASE("hand-traced corridor") {
  // S at (0,0); greedy moves east into (0,1), whose next greedy move hits '#'.
  const Simulator sim(grid("epsilon 0\nsigma 0\nmap\nS.#G\n"));
  Engine rng(1);
  const auto nominal = sim.rollout(std::nullopt, rng);
  CHECK_FALSE(nominal.safe);
  CHECK_FALSE(nominal.success);
  CHECK(nominal.steps == 2);
  REQUIRE(nominal.first_unsafe_score);
  CHECK(*nominal.first_unsafe_score == 0.9);

  const auto shielded = sim.rollout(SafetyThreshold::at(0.5), rng);
  CHECK(shielded.safe);
  CHECK_FALSE(shielded.success);
  CHECK(shielded.steps == 1);
  CHECK_FALSE(shielded.first_unsafe_score);

  const Simulator open(grid("epsilon 0\nsigma 0\nmap\nS..G\n"));
  const auto clear = open.rollout(SafetyThreshold::at(0.5), rng);
  CHECK(clear.safe);
  CHECK(clear.success);
  CHECK(clear.steps == 3);
}

TEST_CASE("rollout conventions") {
  const auto sim = room(0.3);
  Engine rng(2);
  const auto backup = sim.rollout(SafetyThreshold::always_backup(), rng);
  CHECK(backup.safe);
  CHECK_FALSE(backup.success);
  CHECK(backup.steps == 0);

  auto cfg = grid("map\n...\n.G.\n...\n");
  cfg.starts = {cfg.goal};
  const Simulator home(cfg);
  const auto r = home.rollout(SafetyThreshold::always_backup(), rng);
  CHECK(r.safe);
  CHECK(r.success);

  // horizon truncation counts as safe
  const Simulator slow(grid("horizon 1\nepsilon 0\nmap\nS..G\n"));
  const auto cut = slow.rollout(std::nullopt, rng);
  CHECK(cut.safe);
  CHECK_FALSE(cut.success);
  CHECK(cut.steps == 1);
}

TEST_CASE("calibration data") {
  const Simulator open(grid("epsilon 0\nmap\n.......\n.S...S.\n...G...\n.S...S.\n.......\n"));
  const auto clean = collect_calibration_data(open, 500, 300, 1);
  CHECK(clean.unsafe.size() == 500);
  for (auto u : clean.unsafe) CHECK(u == 0);
  CHECK(clean.scores.empty());

  const auto sim = room(0.3);
  const auto data = collect_calibration_data(sim, 2000, 1500, 7);
  std::size_t unsafe_pool = 0;
  for (const auto& r : data.z_rollouts) unsafe_pool += !r.safe;
  CHECK(data.scores.size() == unsafe_pool);
  CHECK(unsafe_pool > 0);
  for (std::size_t i = 0; i < data.unsafe.size(); ++i) CHECK(data.unsafe[i] == !data.w_rollouts[i].safe);
  for (const auto& r : data.z_rollouts) CHECK(r.safe != r.first_unsafe_score.has_value());

  const auto serial = collect_calibration_data(sim, 2000, 1500, 7, Execution::serial);
  CHECK(serial.unsafe == data.unsafe);
  CHECK(serial.scores == data.scores);
}

TEST_CASE("thresholds") {
  CHECK(SafetyThreshold::always_backup().fires(0.0));
  CHECK(SafetyThreshold::at(0.5).fires(0.5));
  CHECK_FALSE(SafetyThreshold::at(0.5).fires(0.49));
  CHECK_FALSE(SafetyThreshold::at(1.5).fires(1.0));
  CHECK_THROWS_AS(SafetyThreshold::at(-0.1), std::invalid_argument);
  for (double g : {0.0, 0.123456789012345678, 1.0, 2.5}) {
    const auto t = SafetyThreshold::at(g);
    CHECK(SafetyThreshold::parse(t.to_string()) == t);
  }
  CHECK(SafetyThreshold::parse("ALWAYS_BACKUP").is_always_backup());
  CHECK_THROWS_AS(SafetyThreshold::parse("0.5x"), std::invalid_argument);
  CHECK_THROWS_AS(SafetyThreshold::parse(""), std::invalid_argument);
}

TEST_CASE("candidate order") {
  const std::vector<double> z{0.3, 0.7, 0.3, 1.0};
  const auto c = candidate_thresholds(z);
  REQUIRE(c.size() == 5);
  CHECK(c[0] == SafetyThreshold::at(1.0));
  CHECK(c[1] == SafetyThreshold::at(0.7));
  CHECK(c[2] == SafetyThreshold::at(0.3));
  CHECK(c[3] == SafetyThreshold::at(0.0));
  CHECK(c[4].is_always_backup());
}

TEST_CASE("all-safe calibration set selects the largest threshold") {
  const std::vector<std::uint8_t> w(1000, 0);
  const std::vector<double> z;
  // each interval is at level delta/2, so the upper tail is delta/4
  CHECK(unsafety_bound(w, z, SafetyThreshold::at(1.0), 0.05) ==
        doctest::Approx(1.0 - std::pow(0.0125, 1.0 / 1000.0)).epsilon(1e-12));
  CHECK(select_safety_threshold(w, z, 0.01, 0.05) == SafetyThreshold::at(1.0));
}

TEST_CASE("zero budget forces the backup") {
  std::vector<std::uint8_t> w(1000, 0);
  w[17] = 1;
  const std::vector<double> z{0.2, 0.95, 0.99};
  CHECK(select_safety_threshold(w, z, 0.0, 0.1).is_always_backup());
  CHECK(unsafety_bound(w, z, SafetyThreshold::always_backup(), 0.1) == 0.0);
}

TEST_CASE("selection matches an exhaustive scan") {
  std::vector<std::uint8_t> w(1000, 0);
  for (int i = 0; i < 100; ++i) w[static_cast<std::size_t>(i * 10)] = 1;
  std::vector<double> z;
  for (int i = 0; i < 100; ++i) z.push_back(i < 50 ? 0.005 * i : 0.5 + 0.005 * (i - 50));
  for (double xi : {0.0, 0.01, 0.02, 0.05, 0.08, 0.1, 0.12, 0.2}) {
    CAPTURE(xi);
    const auto got = select_safety_threshold(w, z, xi, 0.1);
    CHECK(got == brute_force_select(w, z, xi, 0.1));
    CHECK(unsafety_bound(w, z, got, 0.1) <= xi);
  }
}

TEST_CASE("larger budgets never lower the threshold") {
  const auto sim = room(0.6);
  const auto data = collect_calibration_data(sim, 3000, 3000, 11);
  double prev = -2.0;
  for (double xi : {0.0, 0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 1.0}) {
    const auto g = select_safety_threshold(data.unsafe, data.scores, xi, 0.1);
    const double v = g.is_always_backup() ? -1.0 : g.value();
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("shield evaluation") {
  const auto sim = room(0.3);
  const auto backup = evaluate_shield(sim, SafetyThreshold::always_backup(), 500, 3);
  CHECK(backup.safety_rate() == 1.0);
  CHECK(backup.success_rate() == 0.0);

  // a threshold above every score never fires: identical to the nominal policy
  const auto nominal = evaluate_shield(sim, std::nullopt, 5000, 3);
  const auto off = evaluate_shield(sim, SafetyThreshold::at(1.5), 5000, 3);
  CHECK(off.safe == nominal.safe);
  CHECK(off.success == nominal.success);
  CHECK(nominal.safety_rate() < 1.0);

  const auto a = evaluate_shield(sim, SafetyThreshold::at(0.6), 4000, 9, Execution::serial);
  const auto b = evaluate_shield(sim, SafetyThreshold::at(0.6), 4000, 9, Execution::parallel);
  CHECK(a.safe == b.safe);
  CHECK(a.success == b.success);
  CHECK_THROWS_AS(evaluate_shield(sim, std::nullopt, 0, 1), std::invalid_argument);
}

TEST_CASE("a perfect classifier makes the shield sound") {
  const auto sim = room(0.0);
  for (double g : {0.1000001, 0.5, 0.9}) {
    CAPTURE(g);
    CHECK(evaluate_shield(sim, SafetyThreshold::at(g), 5000, 4).safety_rate() == 1.0);
  }
}

TEST_CASE("bound is an upper bound on the estimated unsafety") {
  const auto sim = room(0.3);
  const auto data = collect_calibration_data(sim, 5000, 5000, 21);
  const std::size_t trials = 40000;
  for (const auto& g : {SafetyThreshold::at(1.0), SafetyThreshold::at(0.8), SafetyThreshold::at(0.6),
                        SafetyThreshold::at(0.4), SafetyThreshold::at(0.0)}) {
    CAPTURE(g.to_string());
    const double p = 1.0 - evaluate_shield(sim, g, trials, 22).safety_rate();
    const double mc = 3.0 * std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(trials));
    CHECK(unsafety_bound(data.unsafe, data.scores, g, 0.1) >= p - mc);
  }
}

TEST_CASE("baselines") {
  CHECK(baseline_threshold(Baseline::naive, 0.1) == SafetyThreshold::at(0.5));
  CHECK(baseline_threshold(Baseline::xi_naive, 0.1) == SafetyThreshold::at(0.1));
  CHECK(baseline_threshold(Baseline::xi_naive, 0.0) == SafetyThreshold::at(0.0));
}
