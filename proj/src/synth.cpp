#include "pacconf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pacconf {

namespace {

int wrong_label(int truth, int num_classes, Engine& rng) {
  const auto offset = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(num_classes - 1));
  return (truth + offset) % num_classes;
}

}  // namespace

SyntheticCalibGenerator::SyntheticCalibGenerator(BinningScheme scheme, std::vector<double> theta,
                                                 std::vector<double> weights, int num_classes)
    : scheme_(std::move(scheme)),
      theta_(std::move(theta)),
      weights_(std::move(weights)),
      num_classes_(num_classes) {
  const std::size_t k = scheme_.size();
  if (theta_.size() != k || weights_.size() != k) {
    throw std::invalid_argument("generator needs one theta and one weight per bin");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (!(theta_[i] >= 0.0 && theta_[i] <= 1.0)) throw std::invalid_argument("theta must lie in [0, 1]");
    if (!(weights_[i] >= 0.0)) throw std::invalid_argument("bin weights must be nonnegative");
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("bin weights must sum to 1");
  if (num_classes_ < 2) throw std::invalid_argument("need at least two classes");
  cumulative_.resize(k);
  std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
}

SyntheticCalibGenerator SyntheticCalibGenerator::calibrated(std::size_t bins) {
  BinningScheme scheme = equal_width_bins(bins);
  std::vector<double> theta(bins);
  for (std::size_t k = 0; k < bins; ++k) theta[k] = 0.5 * (scheme.lower_edge(k) + scheme.upper_edge(k));
  return SyntheticCalibGenerator(std::move(scheme), std::move(theta),
                                 std::vector<double>(bins, 1.0 / static_cast<double>(bins)));
}

PredictionRecord SyntheticCalibGenerator::draw(Engine& rng) const {
  const double u = uniform01(rng);
  auto k = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) -
                                    cumulative_.begin());
  k = std::min(k, cumulative_.size() - 1);
  while (weights_[k] == 0.0 && k > 0) --k;  // rounding at the top of the cumulative sum

  const double lo = scheme_.lower_edge(k);
  const double hi = scheme_.upper_edge(k);
  PredictionRecord r;
  r.top_conf = hi - uniform01(rng) * (hi - lo);  // (lo, hi], as B_k
  if (k > 0 && r.top_conf <= lo) r.top_conf = hi;
  r.true_label = static_cast<int>(rng() % static_cast<std::uint64_t>(num_classes_));
  const bool correct = uniform01(rng) < theta_[k];
  r.pred_label = correct ? r.true_label : wrong_label(r.true_label, num_classes_, rng);
  return r;
}

std::vector<PredictionRecord> SyntheticCalibGenerator::sample(std::size_t n, std::uint64_t seed,
                                                              std::uint64_t index) const {
  Engine rng = make_engine(seed, stream::calibration_draw, index);
  std::vector<PredictionRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(rng));
  return out;
}

void TwoBranchGenerator::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(slow_accuracy) || !unit(fast_at_zero) || !unit(fast_at_one)) {
    throw std::invalid_argument("generator accuracies must lie in [0, 1]");
  }
  if (num_classes < 2) throw std::invalid_argument("need at least two classes");
}

cascade::CascadeRecord TwoBranchGenerator::draw(Engine& rng) const {
  const auto classes = static_cast<std::uint64_t>(num_classes);
  cascade::CascadeRecord r;
  r.true_label = static_cast<int>(rng() % classes);
  const double fast_conf = uniform01(rng);
  const double q = fast_at_zero + (fast_at_one - fast_at_zero) * fast_conf;
  const bool fast_ok = uniform01(rng) < q;
  const double slow_conf = uniform01(rng);
  const bool slow_ok = uniform01(rng) < slow_accuracy;
  const int fast_pred = fast_ok ? r.true_label : wrong_label(r.true_label, num_classes, rng);
  const int slow_pred = slow_ok ? r.true_label : wrong_label(r.true_label, num_classes, rng);
  r.branches = {{fast_conf, fast_pred}, {slow_conf, slow_pred}};
  return r;
}

std::vector<cascade::CascadeRecord> TwoBranchGenerator::sample(std::size_t n, std::uint64_t seed,
                                                               std::uint64_t index) const {
  validate();
  Engine rng = make_engine(seed, stream::cascade_draw, index);
  std::vector<cascade::CascadeRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(rng));
  return out;
}

double TwoBranchGenerator::true_relative_error(const cascade::ExitThreshold& gamma) const {
  if (!gamma.enabled()) return 0.0;
  const double g = gamma.value();
  const double span = 1.0 - g;
  const double slope = fast_at_one - fast_at_zero;
  return span * (slow_accuracy - fast_at_zero) - slope * (1.0 - g * g) / 2.0;
}

}  // namespace pacconf
