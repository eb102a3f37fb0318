#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "crowdsense/config.hpp"
#include "crowdsense/csv.hpp"
#include "crowdsense/errors.hpp"
#include "crowdsense/fairness.hpp"
#include "crowdsense/manifest.hpp"
#include "crowdsense/measure.hpp"
#include "crowdsense/search/campaign.hpp"
#include "crowdsense/series.hpp"

namespace fs = std::filesystem;
using namespace crowdsense;

namespace {

std::string sim_file_name(const char* stem, std::size_t sim_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04zu.csv", stem, sim_id);
  return buf;
}

Norm parse_norm(const std::string& name) {
  if (name == "one") return Norm::one;
  if (name == "two") return Norm::two;
  if (name == "max") return Norm::max;
  throw ConfigError("norm must be one of: one, two, max");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct ScenarioFlags {
  std::string preset = "melbourne-scale";
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  std::int64_t sims = 0;
  std::int64_t jobs = -1;
  bool seed_given = false;
  bool sims_given = false;
  bool jobs_given = false;
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& flags) {
  cmd->add_option("--preset", flags.preset, "Scenario preset: melbourne-scale, regulation-only, smoke")
      ->envname("CROWDSENSE_PRESET")
      ->capture_default_str();
  cmd->add_option("--config", flags.config_path, "JSON config file layered over the preset")
      ->envname("CROWDSENSE_CONFIG");
  cmd->add_option("--set", flags.overrides,
                  "Override one config value, e.g. --set city.occupancy_prob=0.4 (repeatable; applied "
                  "after --config)")
      ->take_all();
  cmd->add_option("--seed", flags.seed, "Master seed (overrides run.seed)")->envname("CROWDSENSE_SEED");
  cmd->add_option("--sims", flags.sims, "Number of simulations (overrides run.sims)")
      ->envname("CROWDSENSE_SIMS");
  cmd->add_option("--jobs", flags.jobs, "Worker threads, 0 = one per core (overrides run.jobs)")
      ->envname("CROWDSENSE_JOBS");
}

ScenarioConfig resolve_scenario(CLI::App* cmd, ScenarioFlags& flags, nlohmann::json& effective) {
  std::vector<std::string> overrides = flags.overrides;
  if (cmd->count("--seed") > 0) overrides.push_back("run.seed=" + std::to_string(flags.seed));
  if (cmd->count("--sims") > 0) overrides.push_back("run.sims=" + std::to_string(flags.sims));
  if (cmd->count("--jobs") > 0) overrides.push_back("run.jobs=" + std::to_string(flags.jobs));
  return load_scenario(flags.preset, flags.config_path, overrides, effective);
}

int cmd_simulate(CLI::App* cmd, ScenarioFlags& flags, const std::string& out_dir, bool emit_loops,
                 bool emit_agents) {
  nlohmann::json effective;
  ScenarioConfig scenario = resolve_scenario(cmd, flags, effective);
  scenario.search.record_agent_states = emit_agents;

  const unsigned jobs = scenario.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : scenario.jobs;
  fs::create_directories(out_dir);

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.preset = scenario.preset;
  manifest.config_hash = config_hash(effective);
  manifest.master_seed = scenario.seed;
  manifest.sims = scenario.sims;
  manifest.jobs = jobs;
  manifest.effective_config = effective;
  manifest.started_utc = utc_timestamp_now();

  auto on_outcome = [&](std::size_t sim_id, const SearchOutcome& outcome) {
    if (emit_loops) {
      std::ostringstream buf;
      write_loop_csv(buf, outcome.loop);
      write_file_atomic((fs::path(out_dir) / sim_file_name("loop", sim_id)).string(), buf.str());
    }
    if (emit_agents) {
      std::vector<double> ticks(outcome.loop.k.begin(), outcome.loop.k.end());
      std::vector<std::vector<double>> agents(outcome.participants);
      for (std::size_t a = 0; a < outcome.participants; ++a) {
        agents[a].resize(ticks.size());
        for (std::size_t t = 0; t < ticks.size(); ++t) agents[a][t] = outcome.agent_on[t][a];
      }
      std::ostringstream buf;
      write_agent_series_csv(buf, ticks, agents);
      write_file_atomic((fs::path(out_dir) / sim_file_name("agents", sim_id)).string(), buf.str());
    }
  };

  CampaignResult result = run_campaign(scenario.search, scenario.seed, scenario.sims, jobs, false,
                                       (emit_loops || emit_agents)
                                           ? std::function<void(std::size_t, const SearchOutcome&)>(on_outcome)
                                           : std::function<void(std::size_t, const SearchOutcome&)>{});

  const fs::path campaign_path = fs::path(out_dir) / "campaign.csv";
  {
    std::ostringstream buf;
    write_campaign_csv(buf, result);
    write_file_atomic(campaign_path.string(), buf.str());
  }

  manifest.finished_utc = utc_timestamp_now();
  manifest.outputs.push_back(campaign_path.string());
  for (std::size_t i = 0; i < scenario.sims; ++i) {
    if (emit_loops) manifest.outputs.push_back((fs::path(out_dir) / sim_file_name("loop", i)).string());
    if (emit_agents) manifest.outputs.push_back((fs::path(out_dir) / sim_file_name("agents", i)).string());
  }
  const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
  write_manifest(manifest_path.string(), manifest);

  const CampaignSummary& s = result.summary;
  std::cout << "campaign: " << s.sims << " sims, " << s.failures << " undetected ("
            << format_double(100.0 * s.failure_rate) << "%)";
  if (s.failures < s.sims) {
    std::cout << ", mean detection " << format_double(s.mean_detection_s) << " s, 95% CI ["
              << format_double(s.ci95_lo) << ", " << format_double(s.ci95_hi) << "]";
  }
  std::cout << "\nconfig hash: " << manifest.config_hash << "\noutputs: " << campaign_path.string() << ", "
            << manifest_path.string();
  if (emit_loops || emit_agents) std::cout << ", per-sim CSVs in " << out_dir;
  std::cout << std::endl;
  return 0;
}

int cmd_validate(CLI::App* cmd, ScenarioFlags& flags) {
  nlohmann::json effective;
  ScenarioConfig scenario;
  try {
    scenario = resolve_scenario(cmd, flags, effective);
  } catch (const std::exception& e) {
    std::cout << "check: configuration parses and is in range ... FAIL\n  " << e.what() << std::endl;
    return 1;
  }
  std::cout << "check: configuration parses and is in range ... PASS\n";

  int failures = 0;
  auto report = [&](const char* what, bool ok, const std::string& detail) {
    std::cout << "check: " << what << " ... " << (ok ? "PASS" : "FAIL") << '\n';
    if (!ok) {
      std::cout << "  " << detail << '\n';
      ++failures;
    }
  };

  // The on/off toss is the two-map system {x -> 1, x -> 0}; both maps have
  // zero linear part, so the contraction condition holds with radius 0.
  {
    bool ok = true;
    std::string detail;
    try {
      const AffineMap on = AffineMap::constant(Eigen::VectorXd::Ones(1));
      const AffineMap off = AffineMap::constant(Eigen::VectorXd::Zero(1));
      ok = on.spectral_radius() < 1.0 && off.spectral_radius() < 1.0;
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    report("maps are contractions (spectral radius below one)", ok, detail);
  }

  {
    bool ok = true;
    std::string detail;
    try {
      validate_floor(scenario.search.behaviors, scenario.search.pi_min, scenario.search.pi_max);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("probabilities are bounded away from zero: violated; ") + e.what();
    }
    report("probabilities bounded away from zero on the clamped broadcast range", ok, detail);
  }

  report("neighbor thresholds ordered (t_few < t_many)",
         scenario.search.behaviors.t_few < scenario.search.behaviors.t_many,
         "behaviors.t_few must be smaller than behaviors.t_many");

  report("controller stability (|gamma| <= 1)", std::abs(scenario.search.controller_gamma) <= 1.0,
         "control.gamma outside [-1, 1] lets broadcast values grow without bound");

  const int total = 5;
  std::cout << "validation: " << (total - failures) << "/" << total << " checks passed" << std::endl;
  return failures == 0 ? 0 : 1;
}

int cmd_analyze_fairness(const std::string& input, std::size_t burn_in, double epsilon,
                         const std::string& norm_name, double r_override, bool r_given,
                         const std::string& out_path, std::uint64_t seed) {
  std::istringstream in(read_text_file(input));
  AgentSeries series = read_agent_series_csv(in);
  if (series.agents.empty()) throw ConfigError("agents csv: no agent columns");

  RngStream rng(seed, 7001);
  PredictabilityVector pv = per_agent_averages(series.agents, burn_in, 200, rng);

  double r = r_override;
  if (!r_given) {
    double sum = 0.0;
    for (double v : pv.r_bar) sum += v;
    r = sum / static_cast<double>(pv.r_bar.size());
  }

  const Norm norm = parse_norm(norm_name);
  FairnessVerdict verdict = epsilon_fairness(pv.r_bar, r, epsilon, norm);

  std::vector<FairnessCsvRow> rows(pv.r_bar.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    rows[a] = FairnessCsvRow{a, pv.r_bar[a], pv.ci_halfwidth[a], 0};
  }
  if (!out_path.empty()) {
    std::ostringstream buf;
    write_fairness_csv(buf, rows, verdict);
    write_file_atomic(out_path, buf.str());
  }

  std::cout << "agents: " << rows.size() << ", burn-in: " << burn_in << " rows\n";
  std::cout << "reference long-run average r: " << format_double(r) << (r_given ? "" : " (mean of agents)")
            << '\n';
  std::cout << "fairness gap (" << norm_name << " norm): " << format_double(verdict.gap)
            << ", epsilon: " << format_double(epsilon) << " -> " << (verdict.fair ? "fair" : "unfair")
            << std::endl;
  if (!out_path.empty()) std::cout << "report: " << out_path << std::endl;
  return verdict.fair ? 0 : 1;
}

int cmd_analyze_predictability(const std::vector<std::string>& inputs, std::size_t burn_in,
                               double tolerance, const std::string& out_path, std::uint64_t seed) {
  if (inputs.size() < 2) throw ConfigError("predictability needs at least two --input files");
  std::vector<PredictabilityVector> per_run;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::istringstream in(read_text_file(inputs[i]));
    AgentSeries series = read_agent_series_csv(in);
    RngStream rng(seed, 7100 + i);
    per_run.push_back(per_agent_averages(series.agents, burn_in, 200, rng));
  }
  PredictabilityReport report = predictability_report(per_run);

  if (!out_path.empty()) {
    std::vector<FairnessCsvRow> rows(report.pooled.r_bar.size());
    for (std::size_t a = 0; a < rows.size(); ++a) {
      rows[a] = FairnessCsvRow{a, report.pooled.r_bar[a], report.pooled.ci_halfwidth[a], 0};
    }
    std::ostringstream buf;
    write_fairness_csv(buf, rows, std::nullopt);
    write_file_atomic(out_path, buf.str());
  }

  std::cout << "runs: " << inputs.size() << ", agents: " << report.pooled.r_bar.size() << ", burn-in: "
            << burn_in << " rows\n";
  std::cout << "max spread of long-run averages across initial conditions: "
            << format_double(report.max_spread) << '\n';
  const bool ok = report.max_spread <= tolerance;
  std::cout << "predictability (spread <= " << format_double(tolerance) << "): " << (ok ? "PASS" : "FAIL")
            << std::endl;
  if (!out_path.empty()) std::cout << "report: " << out_path << std::endl;
  return ok ? 0 : 1;
}

int cmd_analyze_perturbation(const std::string& base_path, const std::string& perturbed_path, double r,
                             double r_prime, double gap, double beta, double eta, double margin,
                             const std::string& norm_name, const std::string& out_path) {
  std::istringstream base_in(read_text_file(base_path));
  std::istringstream pert_in(read_text_file(perturbed_path));
  const DiscreteMeasure base = read_measure_csv(base_in);
  const DiscreteMeasure perturbed = read_measure_csv(pert_in);

  const Norm norm = parse_norm(norm_name);
  const double empirical = wasserstein1_discrete(base, perturbed, norm).distance;
  const double bound = perturbation_bound({r, r_prime, gap, beta, eta});
  const bool pass = bound >= empirical - margin;

  if (!out_path.empty()) {
    std::ostringstream buf;
    buf << "# schema: perturbation/v1\n";
    buf << "empirical_w1,bound,r,r_prime,gap,beta,eta,margin,verdict\n";
    buf << format_double(empirical) << ',' << format_double(bound) << ',' << format_double(r) << ','
        << format_double(r_prime) << ',' << format_double(gap) << ',' << format_double(beta) << ','
        << format_double(eta) << ',' << format_double(margin) << ',' << (pass ? "PASS" : "FAIL") << '\n';
    write_file_atomic(out_path, buf.str());
  }

  std::cout << "empirical W1(" << norm_name << " ground metric): " << format_double(empirical) << '\n';
  std::cout << "perturbation bound (r=" << format_double(r) << ", r'=" << format_double(r_prime)
            << ", gap=" << format_double(gap) << ", beta=" << format_double(beta)
            << ", eta=" << format_double(eta) << "): " << format_double(bound) << '\n';
  std::cout << "bound >= empirical - " << format_double(margin) << ": " << (pass ? "PASS" : "FAIL")
            << std::endl;
  if (!out_path.empty()) std::cout << "report: " << out_path << std::endl;
  return pass ? 0 : 1;
}

int cmd_analyze_coupling(const std::string& first_path, const std::string& second_path, double rate,
                         const std::string& norm_name, const std::string& out_path) {
  if (!(rate > 0.0 && rate < 1.0)) throw ConfigError("--rate must lie in (0, 1)");
  std::istringstream first_in(read_text_file(first_path));
  std::istringstream second_in(read_text_file(second_path));
  const StateSeries a = read_state_series_csv(first_in);
  const StateSeries b = read_state_series_csv(second_in);
  if (a.states.rows() != b.states.rows() || a.states.cols() != b.states.cols()) {
    throw ConfigError("coupling: the two trajectories must have the same dimension and length");
  }
  const Eigen::Index rows = a.states.cols();
  if (rows < 2) throw ConfigError("coupling: need at least two steps");

  const Norm norm = parse_norm(norm_name);
  std::vector<double> distance(static_cast<std::size_t>(rows));
  for (Eigen::Index k = 0; k < rows; ++k) {
    distance[static_cast<std::size_t>(k)] = vector_norm(a.states.col(k) - b.states.col(k), norm);
  }

  const double d0 = distance[0];
  bool within = true;
  double envelope = d0;
  for (std::size_t k = 1; k < distance.size(); ++k) {
    envelope *= rate;
    if (distance[k] > envelope * (1.0 + 1e-12) + 1e-300) within = false;
  }

  // Least-squares slope of log d(k) against k over the strictly positive
  // distances; a coupled contraction keeps it at or below log(rate).
  double slope = 0.0;
  {
    std::vector<double> ks, logs;
    for (std::size_t k = 0; k < distance.size(); ++k) {
      if (distance[k] > 0.0) {
        ks.push_back(static_cast<double>(k));
        logs.push_back(std::log(distance[k]));
      }
    }
    if (ks.size() >= 2) {
      double mk = 0.0, ml = 0.0;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        mk += ks[i];
        ml += logs[i];
      }
      mk /= static_cast<double>(ks.size());
      ml /= static_cast<double>(ks.size());
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        num += (ks[i] - mk) * (logs[i] - ml);
        den += (ks[i] - mk) * (ks[i] - mk);
      }
      slope = den > 0.0 ? num / den : 0.0;
    } else {
      slope = -std::numeric_limits<double>::infinity();
    }
  }
  const double log_rate = std::log(rate);
  const bool slope_ok = slope <= log_rate + 1e-9;

  if (!out_path.empty()) {
    std::ostringstream buf;
    buf << "# schema: coupling/v1\n";
    buf << "k,distance,envelope\n";
    double env = d0;
    for (std::size_t k = 0; k < distance.size(); ++k) {
      buf << format_u64(k) << ',' << format_double(distance[k]) << ',' << format_double(env) << '\n';
      env *= rate;
    }
    write_file_atomic(out_path, buf.str());
  }

  std::cout << "steps: " << (rows - 1) << ", initial distance: " << format_double(d0) << '\n';
  std::cout << "log-distance slope: " << format_double(slope) << ", log(rate): " << format_double(log_rate)
            << '\n';
  std::cout << "distance within rate^k envelope: " << (within ? "yes" : "no") << '\n';
  std::cout << "slope <= log(rate): " << (slope_ok ? "PASS" : "FAIL") << std::endl;
  if (!out_path.empty()) std::cout << "report: " << out_path << std::endl;
  return (slope_ok && within) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowdsense: closed-loop crowd sensing simulation and analysis"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a detection campaign and write outcome CSVs");
  ScenarioFlags sim_flags;
  add_scenario_flags(sim, sim_flags);
  std::string out_dir = "out";
  bool emit_loops = false;
  bool emit_agents = false;
  sim->add_option("--out", out_dir, "Output directory")->envname("CROWDSENSE_OUT")->capture_default_str();
  sim->add_flag("--emit-loops", emit_loops, "Write one regulation-loop CSV per simulation");
  sim->add_flag("--emit-agents", emit_agents, "Write one per-agent on/off CSV per simulation");

  // validate
  auto* val = app.add_subcommand("validate", "Check a configuration against the model preconditions");
  ScenarioFlags val_flags;
  add_scenario_flags(val, val_flags);

  // analyze
  auto* ana = app.add_subcommand("analyze", "Compute reports from previously written CSVs");
  ana->require_subcommand(1);

  auto* fair = ana->add_subcommand("fairness", "Per-agent long-run averages and the fairness gap");
  std::string fair_input, fair_out, fair_norm = "max";
  std::size_t fair_burn_in = 0;
  double fair_epsilon = 0.02;
  double fair_r = 0.0;
  std::uint64_t fair_seed = 1;
  fair->add_option("--input", fair_input, "agents/v1 CSV")->required();
  fair->add_option("--burn-in", fair_burn_in, "Rows to drop before averaging")->capture_default_str();
  fair->add_option("--epsilon", fair_epsilon, "Fairness threshold")->capture_default_str();
  fair->add_option("--norm", fair_norm, "Gap norm: one, two, max")->capture_default_str();
  auto* fair_r_opt = fair->add_option("--r", fair_r, "Reference long-run average (default: agent mean)");
  fair->add_option("--out", fair_out, "Write a fairness/v1 report CSV");
  fair->add_option("--seed", fair_seed, "Bootstrap seed")->capture_default_str();

  auto* pred = ana->add_subcommand("predictability",
                                   "Initial-condition independence of per-agent averages");
  std::vector<std::string> pred_inputs;
  std::string pred_out;
  std::size_t pred_burn_in = 0;
  double pred_tolerance = 0.02;
  std::uint64_t pred_seed = 1;
  pred->add_option("--input", pred_inputs, "agents/v1 CSVs, one per initial condition (repeatable)")
      ->required()
      ->take_all();
  pred->add_option("--burn-in", pred_burn_in, "Rows to drop before averaging")->capture_default_str();
  pred->add_option("--tolerance", pred_tolerance, "Max allowed spread across runs")->capture_default_str();
  pred->add_option("--out", pred_out, "Write a report CSV");
  pred->add_option("--seed", pred_seed, "Bootstrap seed")->capture_default_str();

  auto* pert = ana->add_subcommand("perturbation", "Empirical W1 against the perturbation bound");
  std::string pert_base, pert_perturbed, pert_out, pert_norm = "two";
  double pert_r = 0.0, pert_r_prime = 1.0, pert_gap = 0.0, pert_beta = 0.0, pert_eta = 0.0,
         pert_margin = 0.0;
  pert->add_option("--base", pert_base, "measure/v1 CSV of the reference invariant measure")->required();
  pert->add_option("--perturbed", pert_perturbed, "measure/v1 CSV of the perturbed invariant measure")
      ->required();
  pert->add_option("--r", pert_r, "Contraction factor of the reference system, in [0, 1)")->required();
  pert->add_option("--r-prime", pert_r_prime, "Test-function Lipschitz bound")->capture_default_str();
  pert->add_option("--gap", pert_gap, "Probability-weighted map displacement bound")->capture_default_str();
  pert->add_option("--beta", pert_beta, "Sup-norm bound of test functions on the support")->required();
  pert->add_option("--eta", pert_eta, "Probability perturbation size")->required();
  pert->add_option("--margin", pert_margin, "Slack subtracted from the empirical W1")->capture_default_str();
  pert->add_option("--norm", pert_norm, "Ground metric norm: one, two, max")->capture_default_str();
  pert->add_option("--out", pert_out, "Write a report CSV");

  auto* coup = ana->add_subcommand("coupling", "Contraction of paired trajectories");
  std::string coup_first, coup_second, coup_out, coup_norm = "two";
  double coup_rate = 0.0;
  coup->add_option("--first", coup_first, "trajectory/v1 CSV")->required();
  coup->add_option("--second", coup_second, "trajectory/v1 CSV with the same index draws")->required();
  coup->add_option("--rate", coup_rate, "Contraction rate bound, in (0, 1)")->required();
  coup->add_option("--norm", coup_norm, "Distance norm: one, two, max")->capture_default_str();
  coup->add_option("--out", coup_out, "Write a per-step distance CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim, sim_flags, out_dir, emit_loops, emit_agents);
    if (val->parsed()) return cmd_validate(val, val_flags);
    if (fair->parsed()) {
      return cmd_analyze_fairness(fair_input, fair_burn_in, fair_epsilon, fair_norm, fair_r,
                                  fair_r_opt->count() > 0, fair_out, fair_seed);
    }
    if (pred->parsed()) {
      return cmd_analyze_predictability(pred_inputs, pred_burn_in, pred_tolerance, pred_out, pred_seed);
    }
    if (pert->parsed()) {
      return cmd_analyze_perturbation(pert_base, pert_perturbed, pert_r, pert_r_prime, pert_gap, pert_beta,
                                      pert_eta, pert_margin, pert_norm, pert_out);
    }
    if (coup->parsed()) {
      return cmd_analyze_coupling(coup_first, coup_second, coup_rate, coup_norm, coup_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
