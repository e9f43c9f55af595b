#include "pacconf/calibrate.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pacconf {

namespace {

void require_conf(double conf) {
  if (!(conf >= 0.0 && conf <= 1.0)) {
    throw std::invalid_argument("confidence must lie in [0, 1], got " + std::to_string(conf));
  }
}

void require_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
}

BinStats make_bin(std::uint64_t trials, std::uint64_t successes, double alpha) {
  BinStats bin;
  bin.trials = trials;
  bin.successes = successes;
  bin.interval = clopper_pearson(BernoulliCounts(successes, trials), alpha);
  bin.mean = trials == 0 ? 0.5 : static_cast<double>(successes) / static_cast<double>(trials);
  return bin;
}

}  // namespace

BinningScheme::BinningScheme(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.empty()) throw std::invalid_argument("binning scheme needs at least one bin");
  if (edges_.back() != 1.0) throw std::invalid_argument("last bin edge must equal 1");
  if (!(edges_.front() >= 0.0)) throw std::invalid_argument("bin edges must be >= 0");
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (!(edges_[k] > edges_[k - 1])) {
      throw std::invalid_argument("bin edges must be strictly increasing");
    }
  }
}

std::size_t BinningScheme::bin_index(double conf) const {
  require_conf(conf);
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), conf);
  return static_cast<std::size_t>(it - edges_.begin());
}

BinningScheme equal_width_bins(std::size_t k) {
  if (k == 0) throw std::invalid_argument("number of bins must be positive");
  std::vector<double> edges(k);
  for (std::size_t i = 0; i < k; ++i) {
    edges[i] = static_cast<double>(i + 1) / static_cast<double>(k);
  }
  edges.back() = 1.0;
  return BinningScheme(std::move(edges));
}

CoverageTable::CoverageTable(BinningScheme scheme, std::vector<BinStats> bins, double delta)
    : scheme_(std::move(scheme)), bins_(std::move(bins)), delta_(delta) {
  require_delta(delta_);
  if (bins_.size() != scheme_.size()) {
    throw std::invalid_argument("coverage table needs one entry per bin");
  }
  for (const auto& bin : bins_) {
    if (bin.successes > bin.trials || !(0.0 <= bin.interval.lo && bin.interval.lo <= bin.interval.hi &&
                                        bin.interval.hi <= 1.0)) {
      throw std::invalid_argument("malformed coverage table bin");
    }
  }
}

std::uint64_t CoverageTable::total_trials() const {
  std::uint64_t total = 0;
  for (const auto& bin : bins_) total += bin.trials;
  return total;
}

const ConfidenceInterval& CoverageTable::predict_interval(double conf) const {
  return bins_[scheme_.bin_index(conf)].interval;
}

double CoverageTable::predict_mean(double conf) const {
  return bins_[scheme_.bin_index(conf)].mean;
}

void CoverageTable::write(std::ostream& out) const {
  std::ostringstream buf;
  buf.precision(17);
  buf << "coverage_table K " << scheme_.size() << " delta " << delta_ << " edges";
  for (double e : scheme_.edges()) buf << ' ' << e;
  buf << '\n';
  for (const auto& bin : bins_) {
    buf << bin.trials << ' ' << bin.successes << ' ' << bin.interval.lo << ' ' << bin.interval.hi
        << ' ' << bin.mean << '\n';
  }
  out << buf.str();
}

CoverageTable CoverageTable::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("coverage table: missing header");
  std::istringstream header(line);
  std::string tag, k_key, delta_key, edges_key;
  std::size_t k = 0;
  double delta = 0.0;
  header >> tag >> k_key >> k >> delta_key >> delta >> edges_key;
  if (!header || tag != "coverage_table" || k_key != "K" || delta_key != "delta" ||
      edges_key != "edges" || k == 0) {
    throw std::runtime_error("coverage table: malformed header");
  }
  std::vector<double> edges(k);
  for (auto& e : edges) {
    if (!(header >> e)) throw std::runtime_error("coverage table: header lists too few edges");
  }
  std::vector<BinStats> bins(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("coverage table: missing bin line " + std::to_string(i + 2));
    }
    std::istringstream row(line);
    auto& b = bins[i];
    if (!(row >> b.trials >> b.successes >> b.interval.lo >> b.interval.hi >> b.mean)) {
      throw std::runtime_error("coverage table: malformed bin line " + std::to_string(i + 2));
    }
  }
  return CoverageTable(BinningScheme(std::move(edges)), std::move(bins), delta);
}

CoverageTable fit_coverage_predictor(std::span<const PredictionRecord> records,
                                     const BinningScheme& scheme, double delta) {
  require_delta(delta);
  std::vector<std::uint64_t> trials(scheme.size(), 0);
  std::vector<std::uint64_t> successes(scheme.size(), 0);
  for (const auto& r : records) {
    const std::size_t k = scheme.bin_index(r.top_conf);
    ++trials[k];
    if (r.correct()) ++successes[k];
  }
  const double alpha = delta / static_cast<double>(scheme.size());
  std::vector<BinStats> bins;
  bins.reserve(scheme.size());
  for (std::size_t k = 0; k < scheme.size(); ++k) {
    bins.push_back(make_bin(trials[k], successes[k], alpha));
  }
  return CoverageTable(scheme, std::move(bins), delta);
}

ConfidenceInterval fit_c0(std::span<const std::uint8_t> successes, double delta) {
  require_delta(delta);
  std::uint64_t s = 0;
  for (auto b : successes) {
    if (b > 1) throw std::invalid_argument("success indicators must be 0 or 1");
    s += b;
  }
  return clopper_pearson(BernoulliCounts(s, successes.size()), delta);
}

std::vector<double> fit_histogram_binning(std::span<const PredictionRecord> records,
                                          const BinningScheme& scheme) {
  std::vector<std::uint64_t> trials(scheme.size(), 0);
  std::vector<std::uint64_t> successes(scheme.size(), 0);
  for (const auto& r : records) {
    const std::size_t k = scheme.bin_index(r.top_conf);
    ++trials[k];
    if (r.correct()) ++successes[k];
  }
  std::vector<double> means(scheme.size(), 0.5);
  for (std::size_t k = 0; k < scheme.size(); ++k) {
    if (trials[k] > 0) {
      means[k] = static_cast<double>(successes[k]) / static_cast<double>(trials[k]);
    }
  }
  return means;
}

}  // namespace pacconf
