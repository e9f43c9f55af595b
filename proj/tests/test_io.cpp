#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "pacconf/io.hpp"

using namespace pacconf;

namespace {

template <class F>
std::size_t error_line(F&& f) {
  try {
    f();
  } catch (const io::ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("prediction log") {
  std::istringstream in("# conf pred label\n0.9 3 3\n\n0.25,1,2\n1 0 0\n");
  const auto r = io::read_prediction_log(in);
  REQUIRE(r.size() == 3);
  CHECK(r[0].top_conf == 0.9);
  CHECK(r[0].correct());
  CHECK(r[1].top_conf == 0.25);
  CHECK_FALSE(r[1].correct());
  CHECK(r[2].top_conf == 1.0);

  std::ostringstream out;
  io::write_prediction_log(out, r);
  std::istringstream again(out.str());
  const auto back = io::read_prediction_log(again);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].top_conf == r[i].top_conf);
    CHECK(back[i].pred_label == r[i].pred_label);
    CHECK(back[i].true_label == r[i].true_label);
  }
}

TEST_CASE("prediction log errors carry line numbers") {
  CHECK(error_line([] {
          std::istringstream in("0.5 1 1\n0.5 1\n");
          io::read_prediction_log(in);
        }) == 2);
  CHECK(error_line([] {
          std::istringstream in("# header\n\n0.5 1 1\n1.2 1 1\n");
          io::read_prediction_log(in);
        }) == 4);
  CHECK(error_line([] {
          std::istringstream in("abc 1 1\n");
          io::read_prediction_log(in);
        }) == 1);
  CHECK(error_line([] {
          std::istringstream in("0.5 1.5 1\n");
          io::read_prediction_log(in);
        }) == 1);
  try {
    std::istringstream in("0.5 1 1\n0.5 x 1\n");
    io::read_prediction_log(in, "preds.txt");
    FAIL("expected a parse error");
  } catch (const io::ParseError& e) {
    CHECK(std::string(e.what()).find("preds.txt:2") == 0);
  }
}

TEST_CASE("full precision round trip") {
  const double v = 0.1 + 0.2;
  CHECK(std::stod(io::format_real(v)) == v);
  CHECK(io::format_real(0.5) == "0.5");
}

TEST_CASE("cascade log") {
  std::istringstream in("2 0.4 1 0.9 2\n0 0.95 0 0.5 1\n");
  const auto r = io::read_cascade_log(in);
  REQUIRE(r.size() == 2);
  CHECK(r[0].true_label == 2);
  CHECK(r[0].branches.size() == 2);
  CHECK(r[0].branches[1].conf == 0.9);
  CHECK(r[1].branches[0].pred == 0);

  std::ostringstream out;
  io::write_cascade_log(out, r);
  CHECK(out.str() == "2 0.40000000000000002 1 0.90000000000000002 2\n0 0.94999999999999996 0 0.5 1\n");

  CHECK(error_line([] {
          std::istringstream bad("1 0.5 1 0.5 1\n1 0.5 1 0.5 1 0.2 3\n");
          io::read_cascade_log(bad);
        }) == 2);
  CHECK(error_line([] {
          std::istringstream bad("1 0.5 1\n");
          io::read_cascade_log(bad);
        }) == 1);
}

TEST_CASE("thresholds and costs") {
  std::istringstream in("0.25\nDISABLED\n1\n");
  const auto t = io::read_thresholds(in);
  REQUIRE(t.size() == 3);
  CHECK(t[0] == cascade::ExitThreshold::at(0.25));
  CHECK_FALSE(t[1].enabled());
  std::ostringstream out;
  io::write_thresholds(out, t);
  CHECK(out.str() == "0.25\nDISABLED\n1\n");
  CHECK(error_line([] {
          std::istringstream bad("0.2\nsometimes\n");
          io::read_thresholds(bad);
        }) == 2);

  std::istringstream costs("# abstract costs\ncost_2 = 1.0\ncost_1=0.4\ncost_3 = 2\n");
  CHECK(io::read_costs(costs) == std::vector<double>{0.4, 1.0, 2.0});
  CHECK(error_line([] {
          std::istringstream bad("cost_1 = 1\ncost_1 = 2\n");
          io::read_costs(bad);
        }) == 2);
  CHECK(error_line([] {
          std::istringstream bad("cost_1 = 1\ncost_3 = 2\n");
          io::read_costs(bad);
        }) == 2);
  CHECK(error_line([] {
          std::istringstream bad("speed = 1\n");
          io::read_costs(bad);
        }) == 1);
}

TEST_CASE("rollout log") {
  std::istringstream in("1 1 null\n0 0 0.875\n1 0 null\n");
  const auto r = io::read_rollout_log(in);
  REQUIRE(r.size() == 3);
  CHECK(r[0].success);
  CHECK_FALSE(r[1].safe);
  CHECK(*r[1].first_unsafe_score == 0.875);
  std::ostringstream out;
  io::write_rollout_log(out, r);
  CHECK(out.str() == "1 1 null\n0 0 0.875\n1 0 null\n");
  CHECK(error_line([] {
          std::istringstream bad("1 1 null\n0 0 null\n");
          io::read_rollout_log(bad);
        }) == 2);
  CHECK(error_line([] {
          std::istringstream bad("1 1 0.3\n");
          io::read_rollout_log(bad);
        }) == 1);
  CHECK(error_line([] {
          std::istringstream bad("yes 1 null\n");
          io::read_rollout_log(bad);
        }) == 1);
}
