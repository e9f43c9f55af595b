#include "pacconf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pacconf/calibrate.hpp"

namespace pacconf {

namespace {

struct BinAccumulator {
  std::size_t count = 0;
  std::size_t correct = 0;
  double conf_sum = 0.0;
  double range_lo = 1.0;
  double range_hi = 0.0;
  bool has_range = false;

  double accuracy() const { return static_cast<double>(correct) / static_cast<double>(count); }
  double mean_conf() const { return conf_sum / static_cast<double>(count); }
};

std::vector<BinAccumulator> accumulate(std::span<const EvaluatedPrediction> preds,
                                       std::size_t num_bins) {
  const BinningScheme scheme = equal_width_bins(num_bins);
  std::vector<BinAccumulator> bins(num_bins);
  for (const auto& p : preds) {
    auto& b = bins[scheme.bin_index(p.conf_point)];
    ++b.count;
    if (p.correct) ++b.correct;
    b.conf_sum += p.conf_point;
    if (p.interval) {
      b.range_lo = std::min(b.range_lo, p.interval->lo);
      b.range_hi = std::max(b.range_hi, p.interval->hi);
      b.has_range = true;
    }
  }
  return bins;
}

}  // namespace

double ece(std::span<const EvaluatedPrediction> preds, std::size_t num_bins) {
  if (preds.empty()) throw std::invalid_argument("ece of an empty prediction set");
  const auto bins = accumulate(preds, num_bins);
  const double total = static_cast<double>(preds.size());
  double err = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    err += static_cast<double>(b.count) / total * std::fabs(b.mean_conf() - b.accuracy());
  }
  return err;
}

ConfidenceInterval induced_ece(std::span<const EvaluatedPrediction> preds, std::size_t num_bins) {
  if (preds.empty()) throw std::invalid_argument("induced ece of an empty prediction set");
  for (const auto& p : preds) {
    if (!p.interval) throw std::invalid_argument("induced ece requires an interval on every prediction");
  }
  const auto bins = accumulate(preds, num_bins);
  const double total = static_cast<double>(preds.size());
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    const double w = static_cast<double>(b.count) / total;
    const double acc = b.accuracy();
    double nearest = 0.0;
    if (acc < b.range_lo) {
      nearest = b.range_lo - acc;
    } else if (acc > b.range_hi) {
      nearest = acc - b.range_hi;
    }
    const double farthest = std::max(std::fabs(acc - b.range_lo), std::fabs(b.range_hi - acc));
    lo += w * nearest;
    hi += w * farthest;
  }
  return {std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
}

std::vector<ReliabilityBin> reliability_data(std::span<const EvaluatedPrediction> preds,
                                             std::size_t num_bins) {
  const BinningScheme scheme = equal_width_bins(num_bins);
  const auto bins = accumulate(preds, num_bins);
  std::vector<ReliabilityBin> rows;
  rows.reserve(num_bins);
  for (std::size_t j = 0; j < num_bins; ++j) {
    const auto& b = bins[j];
    ReliabilityBin row;
    row.index = j;
    row.lower_edge = scheme.lower_edge(j);
    row.upper_edge = scheme.upper_edge(j);
    row.count = b.count;
    if (b.count > 0) {
      row.mean_conf = b.mean_conf();
      row.accuracy = b.accuracy();
      if (b.has_range) row.conf_range = ConfidenceInterval{b.range_lo, b.range_hi};
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<CurvePoint> accuracy_confidence_curve(std::span<const EvaluatedPrediction> preds,
                                                  std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw std::invalid_argument("curve thresholds must be sorted ascending");
  }
  const bool with_intervals =
      !preds.empty() && std::all_of(preds.begin(), preds.end(),
                                    [](const EvaluatedPrediction& p) { return p.interval.has_value(); });
  std::vector<CurvePoint> rows;
  for (double t : thresholds) {
    std::size_t n = 0, ok = 0, n_lo = 0, ok_lo = 0, n_hi = 0, ok_hi = 0;
    for (const auto& p : preds) {
      if (p.conf_point >= t) {
        ++n;
        ok += p.correct;
      }
      if (with_intervals) {
        if (p.interval->lo >= t) {
          ++n_lo;
          ok_lo += p.correct;
        }
        if (p.interval->hi >= t) {
          ++n_hi;
          ok_hi += p.correct;
        }
      }
    }
    if (n == 0) continue;
    CurvePoint row;
    row.threshold = t;
    row.count = n;
    row.accuracy = static_cast<double>(ok) / static_cast<double>(n);
    if (with_intervals) {
      if (n_lo > 0) {
        row.count_lower = n_lo;
        row.accuracy_lower = static_cast<double>(ok_lo) / static_cast<double>(n_lo);
      }
      if (n_hi > 0) {
        row.count_upper = n_hi;
        row.accuracy_upper = static_cast<double>(ok_hi) / static_cast<double>(n_hi);
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pacconf
