#include "crowdsense/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "crowdsense/csv.hpp"
#include "crowdsense/errors.hpp"

namespace crowdsense {

std::vector<double> running_average(std::span<const double> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sum += xs[k];
    out.push_back(sum / static_cast<double>(k + 1));
  }
  return out;
}

namespace {

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Bootstrap SE of the series mean using batch means.
double batch_bootstrap_se(std::span<const double> xs, std::size_t resamples, RngStream& rng) {
  const std::size_t batches = std::min<std::size_t>(50, xs.size());
  if (batches < 2) return 0.0;
  const std::size_t batch_len = xs.size() / batches;
  std::vector<double> batch_means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    batch_means[b] = mean_of(xs.subspan(b * batch_len, batch_len));
  }
  std::vector<double> replicate(batches);
  std::vector<double> means;
  means.reserve(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    for (auto& v : replicate) v = batch_means[rng.next_below(batches)];
    means.push_back(mean_of(replicate));
  }
  const double grand = mean_of(means);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  return std::sqrt(ss / static_cast<double>(means.size() - 1));
}

}  // namespace

PredictabilityVector per_agent_averages(const std::vector<std::vector<double>>& series, std::size_t burn_in,
                                        std::size_t bootstrap_resamples, RngStream& rng) {
  if (series.empty()) throw ValidationError("per_agent_averages: need at least one agent");
  if (bootstrap_resamples < 2) throw ValidationError("per_agent_averages: need at least 2 bootstrap resamples");
  PredictabilityVector out;
  out.r_bar.reserve(series.size());
  out.ci_halfwidth.reserve(series.size());
  for (const auto& agent_series : series) {
    if (agent_series.size() <= burn_in) {
      throw ValidationError("per_agent_averages: series shorter than the burn-in");
    }
    const std::span<const double> tail(agent_series.data() + burn_in, agent_series.size() - burn_in);
    out.r_bar.push_back(mean_of(tail));
    out.ci_halfwidth.push_back(batch_bootstrap_se(tail, bootstrap_resamples, rng));
  }
  return out;
}

PredictabilityReport predictability_report(const std::vector<PredictabilityVector>& per_run) {
  if (per_run.empty()) throw ValidationError("predictability_report: need at least one run");
  const std::size_t agents = per_run.front().r_bar.size();
  for (const auto& run : per_run) {
    if (run.r_bar.size() != agents) {
      throw ValidationError("predictability_report: runs disagree on the agent count");
    }
  }
  PredictabilityReport report;
  report.pooled.r_bar.assign(agents, 0.0);
  report.pooled.ci_halfwidth.assign(agents, 0.0);
  report.max_spread = 0.0;
  for (std::size_t i = 0; i < agents; ++i) {
    double lo = per_run.front().r_bar[i];
    double hi = lo;
    double sum = 0.0;
    for (const auto& run : per_run) {
      const double v = run.r_bar[i];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    report.pooled.r_bar[i] = sum / static_cast<double>(per_run.size());
    report.pooled.ci_halfwidth[i] = (hi - lo) / 2.0;
    report.max_spread = std::max(report.max_spread, hi - lo);
  }
  return report;
}

double fairness_gap(std::span<const double> r_bar, double r, Norm norm) {
  if (r_bar.empty()) throw ValidationError("fairness_gap: need at least one agent");
  switch (norm) {
    case Norm::one: {
      double sum = 0.0;
      for (double v : r_bar) sum += std::abs(v - r);
      return sum;
    }
    case Norm::two: {
      double ss = 0.0;
      for (double v : r_bar) ss += (v - r) * (v - r);
      return std::sqrt(ss);
    }
    case Norm::max: {
      double worst = 0.0;
      for (double v : r_bar) worst = std::max(worst, std::abs(v - r));
      return worst;
    }
  }
  throw ValidationError("fairness_gap: unknown norm");
}

FairnessVerdict epsilon_fairness(std::span<const double> r_bar, double r, double epsilon, Norm norm) {
  if (!(epsilon >= 0.0)) throw ValidationError("epsilon_fairness: epsilon must be nonnegative");
  const double gap = fairness_gap(r_bar, r, norm);
  return FairnessVerdict{gap, epsilon, gap <= epsilon, norm, r};
}

std::vector<SegmentFairnessReport> segment_fairness(const std::vector<std::vector<double>>& series,
                                                    std::span<const std::size_t> boundaries, std::size_t burn_in,
                                                    std::size_t bootstrap_resamples, RngStream& rng) {
  if (series.empty()) throw ValidationError("segment_fairness: need at least one agent");
  if (boundaries.empty() || boundaries[0] != 0) {
    throw ValidationError("segment_fairness: boundaries must start at 0");
  }
  const std::size_t total = series.front().size();
  for (const auto& s : series) {
    if (s.size() != total) throw ValidationError("segment_fairness: agents disagree on the series length");
  }
  for (std::size_t b = 1; b < boundaries.size(); ++b) {
    if (boundaries[b] <= boundaries[b - 1] || boundaries[b] >= total) {
      throw ValidationError("segment_fairness: boundaries must increase strictly and stay inside the series");
    }
  }

  std::vector<SegmentFairnessReport> reports;
  reports.reserve(boundaries.size());
  for (std::size_t seg = 0; seg < boundaries.size(); ++seg) {
    const std::size_t start = boundaries[seg];
    const std::size_t stop = seg + 1 < boundaries.size() ? boundaries[seg + 1] : total;
    const std::size_t length = stop - start;
    SegmentFairnessReport report;
    report.segment_index = seg;
    report.start = start;
    report.length = length;
    report.short_segment = length <= burn_in + 1;
    const std::size_t effective_burn_in = report.short_segment ? 0 : burn_in;
    std::vector<std::vector<double>> cut(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
      cut[i].assign(series[i].begin() + static_cast<std::ptrdiff_t>(start),
                    series[i].begin() + static_cast<std::ptrdiff_t>(stop));
    }
    report.averages = per_agent_averages(cut, effective_burn_in, bootstrap_resamples, rng);
    reports.push_back(std::move(report));
  }
  return reports;
}

void write_fairness_csv(std::ostream& out, std::span<const FairnessCsvRow> rows,
                        const std::optional<FairnessVerdict>& verdict) {
  out << "# schema: fairness/v1\n";
  out << "agent_id,r_bar,ci_halfwidth,segment\n";
  for (const auto& row : rows) {
    out << format_u64(row.agent_id) << "," << format_double(row.r_bar) << "," << format_double(row.ci_halfwidth)
        << "," << format_u64(row.segment) << "\n";
  }
  if (verdict) {
    out << "# summary: norm=" << norm_name(verdict->norm) << " r=" << format_double(verdict->r)
        << " gap=" << format_double(verdict->gap) << " epsilon=" << format_double(verdict->epsilon)
        << " verdict=" << (verdict->fair ? "fair" : "unfair") << "\n";
  }
}

std::pair<std::vector<FairnessCsvRow>, std::optional<FairnessVerdict>> read_fairness_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const std::size_t ca = table.column("agent_id");
  const std::size_t cr = table.column("r_bar");
  const std::size_t cw = table.column("ci_halfwidth");
  const std::size_t cs = table.column("segment");
  std::vector<FairnessCsvRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    rows.push_back(FairnessCsvRow{parse_u64(row[ca]), parse_double(row[cr]), parse_double(row[cw]),
                                  parse_u64(row[cs])});
  }
  std::optional<FairnessVerdict> verdict;
  for (const auto& comment : table.comments) {
    const std::string prefix = "# summary:";
    if (comment.rfind(prefix, 0) != 0) continue;
    FairnessVerdict v{0.0, 0.0, false, Norm::max, 0.0};
    std::istringstream tokens(comment.substr(prefix.size()));
    std::string token;
    while (tokens >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "norm") {
        v.norm = value == "1" ? Norm::one : value == "2" ? Norm::two : Norm::max;
      } else if (key == "r") {
        v.r = parse_double(value);
      } else if (key == "gap") {
        v.gap = parse_double(value);
      } else if (key == "epsilon") {
        v.epsilon = parse_double(value);
      } else if (key == "verdict") {
        v.fair = value == "fair";
      }
    }
    verdict = v;
  }
  return {std::move(rows), verdict};
}

}  // namespace crowdsense
