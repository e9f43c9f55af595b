// bench_kernels - wall time of each OpenMP kernel against its serial reference.
// Usage: bench_kernels [scale]   (scale multiplies every workload, default 1)
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <string>

#include <omp.h>

#include "pacconf/cascade.hpp"
#include "pacconf/montecarlo.hpp"
#include "pacconf/safeplan.hpp"
#include "pacconf/synth.hpp"

using namespace pacconf;

namespace {

// best of three
double time_it(const std::function<double()>& body, double& result) {
  double best = 1e300;
  for (int rep = 0; rep < 3; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    result = body();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void compare(const char* name, const std::function<double(Execution)>& kernel) {
  double serial_value = 0.0, parallel_value = 0.0;
  const double ts = time_it([&] { return kernel(Execution::serial); }, serial_value);
  const double tp = time_it([&] { return kernel(Execution::parallel); }, parallel_value);
  std::printf("%-22s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  %s\n", name, ts, tp, ts / tp,
              serial_value == parallel_value ? "same result" : "RESULTS DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  const double scale = argc > 1 ? std::atof(argv[1]) : 1.0;
  auto n = [&](double base) { return static_cast<std::size_t>(base * scale); };
  std::printf("threads %d\n", omp_get_max_threads());

  compare("cp coverage cell", [&](Execution e) {
    return cp_coverage_cell(0.35, 1000, 0.05, n(200000), 1, e).coverage();
  });

  const auto calib = SyntheticCalibGenerator::calibrated(10);
  compare("coverage validation", [&](Execution e) {
    return validate_coverage(calib, 2000, 0.1, n(1000), 2, 1.0, e).failure_fraction();
  });

  TwoBranchGenerator gen;
  const auto records = gen.sample(n(2000000), 3);
  const auto thresholds = cascade::select_thresholds(records, {0.05, 0.1, std::nullopt});
  const std::vector<double> costs{0.45, 1.0};
  compare("cascade evaluation", [&](Execution e) {
    return cascade::evaluate_cascade(records, thresholds, costs, e).mean_cost;
  });

  std::ifstream grid(std::string(PACCONF_DATA) + "/gridworld.grid");
  const safeplan::Simulator sim(safeplan::GridConfig::parse(grid));
  const auto gamma = safeplan::SafetyThreshold::at(0.5);
  compare("shield evaluation", [&](Execution e) {
    return safeplan::evaluate_shield(sim, gamma, n(500000), 4, e).safety_rate();
  });
  compare("nominal rollouts", [&](Execution e) {
    const auto d = safeplan::collect_calibration_data(sim, n(200000), n(200000), 5, e);
    return static_cast<double>(d.scores.size());
  });
  return 0;
}
