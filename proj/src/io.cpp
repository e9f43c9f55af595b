#include "pacconf/io.hpp"

#include <charconv>
#include <string>
#include <utility>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>

namespace pacconf::io {

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string> fields;
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<Line> read_lines(std::istream& in) {
  std::vector<Line> lines;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    auto fields = split_fields(text);
    if (fields.empty() || fields.front().front() == '#') continue;
    lines.push_back({number, std::move(fields)});
  }
  return lines;
}

double parse_real(const std::string& s, const std::string& source, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(source, line, "bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& source, std::size_t line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(source, line, "bad integer '" + s + "'");
  return v;
}

bool parse_flag(const std::string& s, const std::string& source, std::size_t line) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ParseError(source, line, "expected flag 0 or 1, got '" + s + "'");
}

double parse_unit(const std::string& s, const std::string& source, std::size_t line) {
  const double v = parse_real(s, source, line);
  if (!(v >= 0.0 && v <= 1.0)) throw ParseError(source, line, "confidence " + s + " outside [0, 1]");
  return v;
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<PredictionRecord> read_prediction_log(std::istream& in, const std::string& source) {
  std::vector<PredictionRecord> out;
  for (const auto& line : read_lines(in)) {
    if (line.fields.size() != 3) {
      throw ParseError(source, line.number, "expected 3 fields (top_conf pred label)");
    }
    PredictionRecord r;
    r.top_conf = parse_unit(line.fields[0], source, line.number);
    r.pred_label = parse_int(line.fields[1], source, line.number);
    r.true_label = parse_int(line.fields[2], source, line.number);
    out.push_back(r);
  }
  return out;
}

void write_prediction_log(std::ostream& out, const std::vector<PredictionRecord>& records) {
  std::string buf;
  for (const auto& r : records) {
    buf += format_real(r.top_conf);
    buf += ' ';
    buf += std::to_string(r.pred_label);
    buf += ' ';
    buf += std::to_string(r.true_label);
    buf += '\n';
  }
  out << buf;
}

std::vector<cascade::CascadeRecord> read_cascade_log(std::istream& in, const std::string& source) {
  std::vector<cascade::CascadeRecord> out;
  std::size_t width = 0;
  for (const auto& line : read_lines(in)) {
    const auto& f = line.fields;
    if (f.size() < 5 || f.size() % 2 == 0) {
      throw ParseError(source, line.number, "expected label followed by at least two (conf, pred) pairs");
    }
    if (width == 0) width = f.size();
    if (f.size() != width) throw ParseError(source, line.number, "branch count differs from earlier lines");
    cascade::CascadeRecord r;
    r.true_label = parse_int(f[0], source, line.number);
    for (std::size_t i = 1; i < f.size(); i += 2) {
      r.branches.push_back({parse_unit(f[i], source, line.number), parse_int(f[i + 1], source, line.number)});
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_cascade_log(std::ostream& out, const std::vector<cascade::CascadeRecord>& records) {
  std::string buf;
  for (const auto& r : records) {
    buf += std::to_string(r.true_label);
    for (const auto& b : r.branches) {
      buf += ' ';
      buf += format_real(b.conf);
      buf += ' ';
      buf += std::to_string(b.pred);
    }
    buf += '\n';
  }
  out << buf;
}

cascade::ThresholdVector read_thresholds(std::istream& in, const std::string& source) {
  cascade::ThresholdVector out;
  for (const auto& line : read_lines(in)) {
    if (line.fields.size() != 1) throw ParseError(source, line.number, "expected one threshold per line");
    const auto& f = line.fields.front();
    if (f == "DISABLED") {
      out.push_back(cascade::ExitThreshold::disabled());
    } else {
      out.push_back(cascade::ExitThreshold::at(parse_unit(f, source, line.number)));
    }
  }
  return out;
}

void write_thresholds(std::ostream& out, const cascade::ThresholdVector& thresholds) {
  std::string buf;
  for (const auto& t : thresholds) {
    buf += t.enabled() ? format_real(t.value()) : std::string("DISABLED");
    buf += '\n';
  }
  out << buf;
}

std::vector<double> read_costs(std::istream& in, const std::string& source) {
  std::map<int, double> by_branch;
  std::size_t last_line = 0;
  for (const auto& line : read_lines(in)) {
    last_line = line.number;
    std::vector<std::string> f;
    for (const auto& field : line.fields) {
      if (field != "=") f.push_back(field);
    }
    if (f.size() == 1 && f[0].find('=') != std::string::npos) {
      const auto eq = f[0].find('=');
      f = {f[0].substr(0, eq), f[0].substr(eq + 1)};
    }
    if (f.size() != 2 || f[0].rfind("cost_", 0) != 0) {
      throw ParseError(source, line.number, "expected 'cost_<m> = <value>'");
    }
    const int m = parse_int(f[0].substr(5), source, line.number);
    if (m < 1) throw ParseError(source, line.number, "branch numbers start at 1");
    if (!by_branch.emplace(m, parse_real(f[1], source, line.number)).second) {
      throw ParseError(source, line.number, "duplicate cost for branch " + std::to_string(m));
    }
  }
  std::vector<double> costs;
  for (const auto& [m, cost] : by_branch) {
    if (m != static_cast<int>(costs.size()) + 1) {
      throw ParseError(source, last_line, "missing cost for branch " + std::to_string(costs.size() + 1));
    }
    costs.push_back(cost);
  }
  return costs;
}

std::vector<safeplan::Rollout> read_rollout_log(std::istream& in, const std::string& source) {
  std::vector<safeplan::Rollout> out;
  for (const auto& line : read_lines(in)) {
    const auto& f = line.fields;
    if (f.size() != 3) throw ParseError(source, line.number, "expected 3 fields (safe success score)");
    safeplan::Rollout r;
    r.safe = parse_flag(f[0], source, line.number);
    r.success = parse_flag(f[1], source, line.number);
    if (f[2] != "null") r.first_unsafe_score = parse_unit(f[2], source, line.number);
    if (r.safe == r.first_unsafe_score.has_value()) {
      throw ParseError(source, line.number, "score must be present exactly when the rollout is unsafe");
    }
    out.push_back(r);
  }
  return out;
}

void write_rollout_log(std::ostream& out, const std::vector<safeplan::Rollout>& rollouts) {
  std::string buf;
  for (const auto& r : rollouts) {
    buf += r.safe ? "1 " : "0 ";
    buf += r.success ? "1 " : "0 ";
    buf += r.first_unsafe_score ? format_real(*r.first_unsafe_score) : std::string("null");
    buf += '\n';
  }
  out << buf;
}

}  // namespace pacconf::io
