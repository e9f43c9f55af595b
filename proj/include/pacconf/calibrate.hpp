// calibrate.hpp - histogram-binning confidence coverage predictor.
//
// A CoverageTable holds one Clopper-Pearson interval per confidence bin, each
// built at level delta/K so that, by a union bound, every bin's interval
// contains that bin's true accuracy simultaneously with probability >= 1 - delta.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pacconf/binom_ci.hpp"

namespace pacconf {

/// One labelled classifier output, reduced to its top-label confidence.
struct PredictionRecord {
  double top_conf = 0.0;
  int pred_label = 0;
  int true_label = 0;

  bool correct() const { return pred_label == true_label; }
};

/// Bins B_0 = [0, e_0], B_k = (e_{k-1}, e_k]. Indices are zero-based.
class BinningScheme {
 public:
  /// Throws std::invalid_argument unless edges are strictly increasing, start
  /// at or above 0 and end at exactly 1.
  explicit BinningScheme(std::vector<double> edges);

  std::size_t size() const { return edges_.size(); }
  const std::vector<double>& edges() const { return edges_; }
  double lower_edge(std::size_t k) const { return k == 0 ? 0.0 : edges_[k - 1]; }
  double upper_edge(std::size_t k) const { return edges_[k]; }

  /// Bin containing conf; values on an edge go to the lower bin.
  std::size_t bin_index(double conf) const;

  friend bool operator==(const BinningScheme&, const BinningScheme&) = default;

 private:
  std::vector<double> edges_;
};

/// K bins of width 1/K.
BinningScheme equal_width_bins(std::size_t k);

struct BinStats {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  ConfidenceInterval interval;
  double mean = 0.5;  // s/n, or 0.5 for an empty bin
};

class CoverageTable {
 public:
  CoverageTable(BinningScheme scheme, std::vector<BinStats> bins, double delta);

  const BinningScheme& scheme() const { return scheme_; }
  const std::vector<BinStats>& bins() const { return bins_; }
  double delta() const { return delta_; }
  std::uint64_t total_trials() const;

  /// Interval of the bin containing conf.
  const ConfidenceInterval& predict_interval(double conf) const;
  /// Empirical accuracy of the bin containing conf.
  double predict_mean(double conf) const;

  /// Header line "coverage_table K <K> delta <d> edges <e...>" followed by one
  /// "n s lo hi mean" line per bin, 17 significant digits.
  void write(std::ostream& out) const;
  static CoverageTable read(std::istream& in);

 private:
  BinningScheme scheme_;
  std::vector<BinStats> bins_;
  double delta_;
};

/// Fit per-bin Clopper-Pearson intervals at level delta / K.
CoverageTable fit_coverage_predictor(std::span<const PredictionRecord> records,
                                     const BinningScheme& scheme, double delta);

/// Single-bin predictor: one interval at level delta over 0/1 outcomes.
ConfidenceInterval fit_c0(std::span<const std::uint8_t> successes, double delta);

/// Plain histogram binning: per-bin accuracy, 0.5 for empty bins.
std::vector<double> fit_histogram_binning(std::span<const PredictionRecord> records,
                                          const BinningScheme& scheme);

}  // namespace pacconf
