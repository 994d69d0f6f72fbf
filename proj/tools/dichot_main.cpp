// Command-line front end: scenario simulation, single-dataset analysis,
// closed-form truth, and cross-study variance-ratio comparison.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dichot/csv.hpp"
#include "dichot/datagen.hpp"
#include "dichot/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw dichot::ConfigError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw dichot::ConfigError(path.string() + ": " + e.what());
  }
  return j;
}

int default_threads() {
  if (const char* env = std::getenv("DICHOT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;  // harness resolves 0 to hardware concurrency
}

struct SimulateArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> bootstrap;
  int threads = default_threads();
};

int cmd_simulate(const SimulateArgs& args) {
  const std::filesystem::path config_path(args.config_path);
  dichot::StudyConfig cfg = dichot::study_config_from_json(
      load_json(config_path), config_path.parent_path());
  cfg.label = config_path.stem().string();
  if (args.seed.has_value()) cfg.master_seed = *args.seed;
  if (args.replicates.has_value()) {
    if (*args.replicates < 1) {
      throw dichot::ConfigError("--replicates must be >= 1");
    }
    cfg.n_replicates = *args.replicates;
  }
  if (args.bootstrap.has_value()) cfg.bootstrap_B = *args.bootstrap;
  cfg.n_threads = args.threads;

  std::cerr << "simulate: scenario '" << cfg.label << "', R = "
            << cfg.n_replicates << ", seed = " << cfg.master_seed << "\n";
  const dichot::MetricsSummary summary = dichot::run_study(cfg);
  const std::string base = cfg.label + "_summary";
  dichot::emit_tables(summary, args.out_dir, base);
  std::cerr << "simulate: wrote " << (std::filesystem::path(args.out_dir) /
                                      (base + ".csv")).string()
            << " and .json\n";
  return kExitOk;
}

struct AnalyzeArgs {
  std::string data_path;
  double lambda = 7.0;
  std::string comparison = "strict_less";
  std::string method = "both";
  std::size_t m = 10;
  std::optional<std::size_t> bootstrap;
  std::optional<std::uint64_t> seed;
  std::string dump_imputations;  // directory for completed-copy CSVs
};

void print_record(const dichot::EstimateRecord& rec,
                  const std::optional<dichot::BootstrapResult>& boot) {
  std::cout << to_string(rec.method) << "," << to_string(rec.estimand) << ","
            << fmt17(rec.estimate) << "," << fmt17(rec.variance) << ","
            << fmt17(rec.ci_low) << "," << fmt17(rec.ci_high);
  if (boot.has_value()) {
    std::cout << "," << fmt17(boot->ci_low) << "," << fmt17(boot->ci_high)
              << "," << fmt17(boot->variance);
  }
  std::cout << "\n";
}

int cmd_analyze(const AnalyzeArgs& args) {
  const dichot::TrialDataset data = dichot::read_wide_csv(args.data_path);
  bool has_arm[2] = {false, false};
  for (const auto& s : data.subjects()) has_arm[s.arm] = true;
  if (!has_arm[0] || !has_arm[1]) {
    throw dichot::ValidationError("dataset contains a single arm");
  }
  dichot::Threshold threshold;
  threshold.lambda = args.lambda;
  if (args.comparison == "strict_less") {
    threshold.comparison = dichot::Comparison::strict_less;
  } else if (args.comparison == "less_or_equal") {
    threshold.comparison = dichot::Comparison::less_or_equal;
  } else {
    throw dichot::ConfigError("--comparison must be strict_less or less_or_equal");
  }
  const bool run_glmm = args.method == "both" || args.method == "glmm";
  const bool run_mi = args.method == "both" || args.method == "mi";
  if (!run_glmm && !run_mi) {
    throw dichot::ConfigError("--method must be glmm, mi, or both");
  }

  std::uint64_t seed;
  if (args.seed.has_value()) {
    seed = *args.seed;
  } else {
    seed = std::random_device{}();
    std::cerr << "analyze: no --seed given, using random seed " << seed << "\n";
  }

  std::cout << "method,estimand,estimate,variance,ci_low,ci_high";
  if (args.bootstrap.has_value()) std::cout << ",boot_low,boot_high,boot_var";
  std::cout << "\n";

  dichot::Rng mi_rng(seed, 0, dichot::Stage::imputation);
  dichot::Rng boot_rng(seed, 0, dichot::Stage::bootstrap);

  std::optional<dichot::EstimateRecord> glmm_rd, glmm_lo, mi_rd, mi_lo;
  if (run_glmm) {
    const dichot::BinaryPanel panel = dichot::dichotomize(data, threshold);
    const dichot::DesignData design = dichot::build_design(panel, data);
    const dichot::FitResult fit = dichot::fit_marginal_logistic(design);
    const auto cfd = dichot::final_visit_cfd_longitudinal(data);
    glmm_rd = dichot::risk_difference(fit.beta, fit.cov_sandwich, cfd);
    glmm_lo = dichot::log_odds_ratio(fit.beta, fit.cov_sandwich, cfd);
    glmm_rd->method = dichot::MethodTag::glmm;
    glmm_lo->method = dichot::MethodTag::glmm;
    if (fit.used_fallback) {
      std::cerr << "analyze: glmm fell back to independence working "
                   "correlation\n";
    }
  }
  if (run_mi) {
    dichot::ImputationConfig imp;
    imp.m = args.m;
    const dichot::CompletedSet set =
        dichot::impute_monotone(data, imp, mi_rng);
    if (!args.dump_imputations.empty()) {
      std::filesystem::create_directories(args.dump_imputations);
      for (std::size_t c = 0; c < set.copies.size(); ++c) {
        char name[32];
        std::snprintf(name, sizeof(name), "imputation_%02zu.csv", c + 1);
        dichot::write_wide_csv(set.copies[c],
                               std::filesystem::path(args.dump_imputations) /
                                   name);
      }
      std::cerr << "analyze: wrote " << set.copies.size()
                << " completed datasets to " << args.dump_imputations << "\n";
    }
    const dichot::MiAnalysis analysis =
        dichot::analyze_completed(set, threshold);
    mi_rd = dichot::rubin_pool(analysis.rd_per_copy);
    mi_lo = dichot::rubin_pool(analysis.log_or_per_copy);
  }

  std::optional<dichot::BootstrapResult> boots[4];
  if (args.bootstrap.has_value()) {
    std::vector<int> slots;
    if (run_glmm) {
      slots.push_back(0);
      slots.push_back(1);
    }
    if (run_mi) {
      slots.push_back(2);
      slots.push_back(3);
    }
    auto pipeline = [&](const dichot::TrialDataset& d, dichot::Rng& rng) {
      std::vector<double> values;
      std::optional<std::pair<dichot::EstimateRecord, dichot::EstimateRecord>>
          glmm, mi;
      for (int slot : slots) {
        if (slot <= 1 && !glmm.has_value()) {
          const auto panel = dichot::dichotomize(d, threshold);
          const auto design = dichot::build_design(panel, d);
          const auto fit = dichot::fit_marginal_logistic(design);
          const auto cfd = dichot::final_visit_cfd_longitudinal(d);
          glmm = {dichot::risk_difference(fit.beta, fit.cov_sandwich, cfd),
                  dichot::log_odds_ratio(fit.beta, fit.cov_sandwich, cfd)};
        }
        if (slot >= 2 && !mi.has_value()) {
          dichot::ImputationConfig imp;
          imp.m = args.m;
          mi = dichot::mi_pipeline(d, threshold, imp, rng);
        }
        switch (slot) {
          case 0: values.push_back(glmm->first.estimate); break;
          case 1: values.push_back(glmm->second.estimate); break;
          case 2: values.push_back(mi->first.estimate); break;
          case 3: values.push_back(mi->second.estimate); break;
        }
      }
      return values;
    };
    const auto results = dichot::bootstrap_ci_multi(
        data, pipeline, slots.size(), *args.bootstrap, boot_rng);
    for (std::size_t k = 0; k < slots.size(); ++k) {
      boots[slots[k]] = results[k];
    }
  }

  if (glmm_rd.has_value()) print_record(*glmm_rd, boots[0]);
  if (glmm_lo.has_value()) print_record(*glmm_lo, boots[1]);
  if (mi_rd.has_value()) print_record(*mi_rd, boots[2]);
  if (mi_lo.has_value()) print_record(*mi_lo, boots[3]);
  return kExitOk;
}

int cmd_truth(const std::string& config_path_str) {
  const std::filesystem::path config_path(config_path_str);
  const nlohmann::json j = load_json(config_path);
  dichot::ScenarioSpec spec;
  if (j.contains("scenario")) {
    spec = dichot::study_config_from_json(j, config_path.parent_path()).scenario;
  } else {
    spec = dichot::scenario_from_json(j, config_path.parent_path());
  }
  const dichot::TrueValues tv = dichot::true_values(spec);
  std::cout << "p0,p1,rd,log_or,visit\n"
            << fmt17(tv.p0) << "," << fmt17(tv.p1) << "," << fmt17(tv.rd)
            << "," << fmt17(tv.log_or) << "," << tv.visit << "\n";
  return kExitOk;
}

struct CompareArgs {
  std::vector<std::string> summaries;
  std::string out_path;
};

int cmd_compare(const CompareArgs& args) {
  std::vector<dichot::MetricsSummary> summaries;
  for (const auto& path : args.summaries) {
    summaries.push_back(dichot::summary_from_json(load_json(path)));
  }
  const dichot::VarianceRatioReport report =
      dichot::variance_ratio_report(summaries);
  if (!args.out_path.empty()) {
    dichot::write_variance_ratio_csv(report, args.out_path);
    std::cerr << "compare: wrote " << args.out_path << "\n";
  } else {
    std::cout << "scenario,missing_rate,ratio_rd,ratio_log_or,variance_source\n";
    for (const auto& r : report.rows) {
      std::cout << r.scenario << "," << fmt17(r.missing_rate) << ","
                << fmt17(r.ratio_rd) << "," << fmt17(r.ratio_log_or) << ","
                << r.variance_source << "\n";
    }
  }
  std::cout << "slope_rd," << fmt17(report.slope_rd) << "\n"
            << "intercept_rd," << fmt17(report.intercept_rd) << "\n"
            << "slope_log_or," << fmt17(report.slope_log_or) << "\n"
            << "intercept_log_or," << fmt17(report.intercept_log_or) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and estimation toolkit for binary endpoints "
               "dichotomized from longitudinal continuous outcomes"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Run a replicate study from a config file and emit tables");
  simulate->add_option("--config", sim.config_path, "Study config (JSON)")
      ->required();
  simulate->add_option("--out", sim.out_dir, "Output directory");
  simulate->add_option("--seed", sim.seed, "Master seed override");
  simulate->add_option("--replicates", sim.replicates,
                       "Replicate count override");
  simulate->add_option("--bootstrap", sim.bootstrap,
                       "Bootstrap resamples per replicate");
  simulate->add_option("--threads", sim.threads,
                       "Worker threads (default: DICHOT_THREADS or all cores)");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand(
      "analyze", "Estimate RD and log(OR) for one dataset");
  analyze->add_option("--data", an.data_path, "Wide CSV dataset")->required();
  analyze->add_option("--lambda", an.lambda, "Threshold value")->required();
  analyze->add_option("--comparison", an.comparison,
                      "strict_less or less_or_equal");
  analyze->add_option("--method", an.method, "glmm, mi, or both");
  analyze->add_option("--m", an.m, "Imputation copies");
  analyze->add_option("--bootstrap", an.bootstrap, "Bootstrap resamples");
  analyze->add_option("--seed", an.seed, "Seed (random and logged if absent)");
  analyze->add_option("--dump-imputations", an.dump_imputations,
                      "Write the completed datasets as numbered CSVs here");

  std::string truth_config;
  auto* truth = app.add_subcommand(
      "truth", "Print closed-form true values for a scenario");
  truth->add_option("--config", truth_config, "Scenario or study config")
      ->required();

  CompareArgs cmp;
  auto* compare = app.add_subcommand(
      "compare", "Variance-ratio report across study summaries");
  compare->add_option("summaries", cmp.summaries, "Summary JSON files")
      ->required()
      ->expected(-2);
  compare->add_option("--out", cmp.out_path, "Write scatter rows to CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (analyze->parsed()) return cmd_analyze(an);
    if (truth->parsed()) return cmd_truth(truth_config);
    if (compare->parsed()) return cmd_compare(cmp);
  } catch (const dichot::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dichot::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
