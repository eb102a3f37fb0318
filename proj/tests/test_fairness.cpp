#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "crowdsense/errors.hpp"
#include "crowdsense/fairness.hpp"
#include "crowdsense/rng.hpp"

using namespace crowdsense;

TEST_CASE("running average tracks cumulative means") {
  const std::vector<double> xs = {1.0, 0.0, 1.0, 0.0};
  const std::vector<double> avg = running_average(xs);
  REQUIRE(avg.size() == 4);
  CHECK(avg[0] == doctest::Approx(1.0));
  CHECK(avg[1] == doctest::Approx(0.5));
  CHECK(avg[2] == doctest::Approx(2.0 / 3.0));
  CHECK(avg[3] == doctest::Approx(0.5));
}

TEST_CASE("per-agent averages recover a common bernoulli rate") {
  RngStream data_rng(81);
  const std::size_t agents = 20;
  const std::size_t ticks = 3000;
  std::vector<std::vector<double>> series(agents, std::vector<double>(ticks));
  for (auto& s : series) {
    for (auto& v : s) v = data_rng.next_unit() < 0.3 ? 1.0 : 0.0;
  }
  RngStream boot(82);
  const PredictabilityVector pv = per_agent_averages(series, 200, 200, boot);
  REQUIRE(pv.r_bar.size() == agents);
  for (std::size_t a = 0; a < agents; ++a) {
    CHECK(std::abs(pv.r_bar[a] - 0.3) < 0.05);
    CHECK(pv.ci_halfwidth[a] > 0.0);
    CHECK(std::abs(pv.r_bar[a] - 0.3) < std::max(0.03, 4.0 * pv.ci_halfwidth[a]));
  }
}

TEST_CASE("burn-in longer than the series is rejected") {
  RngStream boot(83);
  std::vector<std::vector<double>> series = {{1.0, 0.0, 1.0}};
  CHECK_THROWS_AS((void)per_agent_averages(series, 3, 50, boot), ValidationError);
}

TEST_CASE("fairness gap against a reference in all three norms") {
  const std::vector<double> r_bar = {0.8, 0.6};
  CHECK(fairness_gap(r_bar, 0.7, Norm::one) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(fairness_gap(r_bar, 0.7, Norm::two) == doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));
  CHECK(fairness_gap(r_bar, 0.7, Norm::max) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("identical agents have zero gap and pass epsilon-fairness") {
  const std::vector<double> r_bar(12, 0.42);
  const FairnessVerdict verdict = epsilon_fairness(r_bar, 0.42, 0.01, Norm::max);
  CHECK(verdict.gap == 0.0);
  CHECK(verdict.fair);
}

TEST_CASE("epsilon boundary counts as fair") {
  const std::vector<double> r_bar = {0.75, 0.25};
  const FairnessVerdict verdict = epsilon_fairness(r_bar, 0.5, 0.25, Norm::max);
  CHECK(verdict.gap == 0.25);
  CHECK(verdict.fair);
  const FairnessVerdict tight = epsilon_fairness(r_bar, 0.5, 0.2499, Norm::max);
  CHECK_FALSE(tight.fair);
  CHECK_THROWS_AS((void)epsilon_fairness(r_bar, 0.5, -0.1, Norm::max), ValidationError);
}

TEST_CASE("predictability report pools runs and measures their spread") {
  PredictabilityVector run1;
  run1.r_bar = {0.30, 0.50};
  run1.ci_halfwidth = {0.01, 0.01};
  PredictabilityVector run2;
  run2.r_bar = {0.34, 0.48};
  run2.ci_halfwidth = {0.01, 0.01};
  const PredictabilityReport report = predictability_report({run1, run2});
  CHECK(report.pooled.r_bar[0] == doctest::Approx(0.32));
  CHECK(report.pooled.r_bar[1] == doctest::Approx(0.49));
  CHECK(report.pooled.ci_halfwidth[0] == doctest::Approx(0.02));
  CHECK(report.pooled.ci_halfwidth[1] == doctest::Approx(0.01));
  CHECK(report.max_spread == doctest::Approx(0.04));
}

TEST_CASE("predictability report rejects mismatched agent counts") {
  PredictabilityVector run1;
  run1.r_bar = {0.3};
  run1.ci_halfwidth = {0.0};
  PredictabilityVector run2;
  run2.r_bar = {0.3, 0.4};
  run2.ci_halfwidth = {0.0, 0.0};
  CHECK_THROWS_AS((void)predictability_report({run1, run2}), ValidationError);
  CHECK_THROWS_AS((void)predictability_report({}), ValidationError);
}

TEST_CASE("segment fairness separates regimes on either side of a boundary") {
  RngStream data_rng(84);
  const std::size_t agents = 8;
  const std::size_t ticks = 2000;
  std::vector<std::vector<double>> series(agents, std::vector<double>(ticks));
  for (auto& s : series) {
    for (std::size_t t = 0; t < ticks; ++t) {
      const double p = t < 1000 ? 0.2 : 0.8;
      s[t] = data_rng.next_unit() < p ? 1.0 : 0.0;
    }
  }
  const std::vector<std::size_t> boundaries = {0, 1000};
  RngStream boot(85);
  const auto reports = segment_fairness(series, boundaries, 100, 200, boot);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].start == 0);
  CHECK(reports[0].length == 1000);
  CHECK(reports[1].start == 1000);
  CHECK_FALSE(reports[0].short_segment);
  for (std::size_t a = 0; a < agents; ++a) {
    CHECK(std::abs(reports[0].averages.r_bar[a] - 0.2) < 0.06);
    CHECK(std::abs(reports[1].averages.r_bar[a] - 0.8) < 0.06);
  }
}

TEST_CASE("short segments are flagged and skip burn-in") {
  std::vector<std::vector<double>> series = {{1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0}};
  const std::vector<std::size_t> boundaries = {0, 3};
  RngStream boot(86);
  const auto reports = segment_fairness(series, boundaries, 10, 50, boot);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].short_segment);
  CHECK(reports[0].averages.r_bar[0] == doctest::Approx(1.0));
  CHECK(reports[1].short_segment);
  CHECK(reports[1].averages.r_bar[0] == doctest::Approx(0.0));
}

TEST_CASE("segment boundaries must start at zero, increase, and stay inside") {
  std::vector<std::vector<double>> series = {{1.0, 0.0, 1.0, 0.0}};
  RngStream boot(87);
  const std::vector<std::size_t> not_zero = {1, 2};
  CHECK_THROWS_AS((void)segment_fairness(series, not_zero, 0, 10, boot), ValidationError);
  const std::vector<std::size_t> not_increasing = {0, 2, 2};
  CHECK_THROWS_AS((void)segment_fairness(series, not_increasing, 0, 10, boot), ValidationError);
  const std::vector<std::size_t> outside = {0, 9};
  CHECK_THROWS_AS((void)segment_fairness(series, outside, 0, 10, boot), ValidationError);
}

TEST_CASE("fairness csv round-trips rows and the verdict") {
  std::vector<FairnessCsvRow> rows = {{0, 0.31, 0.005, 0}, {1, 0.29, 0.004, 0}};
  FairnessVerdict verdict{0.02, 0.05, true, Norm::max, 0.3};
  std::ostringstream out;
  write_fairness_csv(out, rows, verdict);
  std::istringstream in(out.str());
  const auto [back_rows, back_verdict] = read_fairness_csv(in);
  REQUIRE(back_rows.size() == 2);
  CHECK(back_rows[0].agent_id == 0);
  CHECK(back_rows[0].r_bar == 0.31);
  CHECK(back_rows[1].ci_halfwidth == 0.004);
  REQUIRE(back_verdict.has_value());
  CHECK(back_verdict->fair);
  CHECK(back_verdict->gap == 0.02);
  CHECK(back_verdict->epsilon == 0.05);
}

TEST_CASE("fairness csv without a summary reads back no verdict") {
  std::vector<FairnessCsvRow> rows = {{0, 0.5, 0.0, 0}};
  std::ostringstream out;
  write_fairness_csv(out, rows, std::nullopt);
  std::istringstream in(out.str());
  const auto [back_rows, back_verdict] = read_fairness_csv(in);
  CHECK(back_rows.size() == 1);
  CHECK_FALSE(back_verdict.has_value());
}
