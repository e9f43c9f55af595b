// metrics.hpp - calibration error, induced calibration-error ranges, reliability data.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pacconf/binom_ci.hpp"

namespace pacconf {

/// A prediction as seen by the evaluator. conf_point is the raw top-label
/// confidence or, for an interval-valued predictor, the bin mean; when an
/// interval is attached it must contain conf_point.
struct EvaluatedPrediction {
  double conf_point = 0.0;
  std::optional<ConfidenceInterval> interval;
  bool correct = false;
};

struct ReliabilityBin {
  std::size_t index = 0;
  double lower_edge = 0.0;
  double upper_edge = 0.0;
  std::size_t count = 0;
  std::optional<double> mean_conf;                 // absent for empty bins
  std::optional<ConfidenceInterval> conf_range;    // [min lower, max upper] for interval input
  std::optional<double> accuracy;                  // absent for empty bins
};

struct CurvePoint {
  double threshold = 0.0;
  std::size_t count = 0;
  double accuracy = 0.0;  // P[correct | conf_point >= t]
  std::optional<std::size_t> count_lower;
  std::optional<double> accuracy_lower;  // conditioning on interval lower >= t
  std::optional<std::size_t> count_upper;
  std::optional<double> accuracy_upper;  // conditioning on interval upper >= t
};

/// Expected calibration error over J equal-width bins of conf_point.
/// Throws std::invalid_argument for empty input or J == 0.
double ece(std::span<const EvaluatedPrediction> preds, std::size_t num_bins);

/// [inf, sup] of the ECE over all per-bin confidences inside each bin's
/// range [min lower, max upper]. Throws if any prediction lacks an interval.
ConfidenceInterval induced_ece(std::span<const EvaluatedPrediction> preds, std::size_t num_bins);

std::vector<ReliabilityBin> reliability_data(std::span<const EvaluatedPrediction> preds,
                                             std::size_t num_bins);

/// Rows with an empty conditioning set are omitted. Thresholds must be sorted ascending.
std::vector<CurvePoint> accuracy_confidence_curve(std::span<const EvaluatedPrediction> preds,
                                                  std::span<const double> thresholds);

}  // namespace pacconf
