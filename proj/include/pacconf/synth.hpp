// synth.hpp - synthetic data with analytically known ground truth.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pacconf/calibrate.hpp"
#include "pacconf/cascade.hpp"
#include "pacconf/rng.hpp"

namespace pacconf {

/// Prediction stream whose true per-bin accuracy is theta[k]: pick bin k with
/// probability weights[k], draw the confidence uniformly inside B_k, then mark
/// the prediction correct with probability theta[k].
class SyntheticCalibGenerator {
 public:
  SyntheticCalibGenerator(BinningScheme scheme, std::vector<double> theta, std::vector<double> weights,
                          int num_classes = 10);

  /// Equal-width bins, theta at bin midpoints, equal weights.
  static SyntheticCalibGenerator calibrated(std::size_t bins);

  const BinningScheme& scheme() const { return scheme_; }
  const std::vector<double>& theta() const { return theta_; }
  const std::vector<double>& weights() const { return weights_; }

  PredictionRecord draw(Engine& rng) const;
  /// n records from the stream (seed, index); deterministic.
  std::vector<PredictionRecord> sample(std::size_t n, std::uint64_t seed, std::uint64_t index = 0) const;

 private:
  BinningScheme scheme_;
  std::vector<double> theta_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  int num_classes_;
};

/// Two-branch cascade data. The fast branch confidence is uniform on [0,1] and
/// the fast branch is correct with probability fast_at_zero + (fast_at_one -
/// fast_at_zero) * conf; the slow branch is correct with probability
/// slow_accuracy independently. Wrong answers are uniform over other labels.
struct TwoBranchGenerator {
  double slow_accuracy = 0.8;
  double fast_at_zero = 0.0;
  double fast_at_one = 1.0;
  int num_classes = 10;

  void validate() const;
  cascade::CascadeRecord draw(Engine& rng) const;
  std::vector<cascade::CascadeRecord> sample(std::size_t n, std::uint64_t seed, std::uint64_t index = 0) const;

  /// Exact P[cascade wrong] - P[slow wrong] for a first-branch threshold:
  /// the integral over [gamma, 1] of slow_accuracy - q(c).
  double true_relative_error(const cascade::ExitThreshold& gamma) const;
};

}  // namespace pacconf
