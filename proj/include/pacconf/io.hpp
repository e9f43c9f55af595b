// io.hpp - line-oriented text formats shared by the command-line tool.
//
// Blank lines and lines starting with '#' are ignored on input; fields are
// separated by whitespace or commas. Reals are written with 17 significant
// digits so files round-trip exactly.
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacconf/calibrate.hpp"
#include "pacconf/cascade.hpp"
#include "pacconf/safeplan.hpp"

namespace pacconf::io {

/// Malformed input; the message carries the source name and line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string format_real(double v);

/// "top_conf pred label"
std::vector<PredictionRecord> read_prediction_log(std::istream& in, const std::string& source = "input");
void write_prediction_log(std::ostream& out, const std::vector<PredictionRecord>& records);

/// "label conf_1 pred_1 ... conf_M pred_M"
std::vector<cascade::CascadeRecord> read_cascade_log(std::istream& in, const std::string& source = "input");
void write_cascade_log(std::ostream& out, const std::vector<cascade::CascadeRecord>& records);

/// One line per fast branch: a value in [0,1] or DISABLED.
cascade::ThresholdVector read_thresholds(std::istream& in, const std::string& source = "input");
void write_thresholds(std::ostream& out, const cascade::ThresholdVector& thresholds);

/// "cost_<m> = <value>" for m = 1..M (the '=' is optional).
std::vector<double> read_costs(std::istream& in, const std::string& source = "input");

/// "safe success score" with flags 0/1 and score a real or "null".
std::vector<safeplan::Rollout> read_rollout_log(std::istream& in, const std::string& source = "input");
void write_rollout_log(std::ostream& out, const std::vector<safeplan::Rollout>& rollouts);

}  // namespace pacconf::io
