#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dichot/estimands.hpp"
#include "dichot/imputation.hpp"
#include "dichot/marginal_fit.hpp"
#include "dichot/scenario.hpp"

namespace dichot {

struct StudyConfig {
  ScenarioSpec scenario;
  std::size_t n_replicates = 1000;
  bool run_glmm = true;
  bool run_mi = true;
  std::optional<std::size_t> bootstrap_B;
  std::uint64_t master_seed = 0;
  ImputationConfig imputation;
  ModelSpec model;
  std::string label = "study";
  int n_threads = 0;  // 0 = hardware concurrency
};

/// Parse a study config (scenario plus harness keys) from JSON; unknown keys
/// raise ConfigError naming the key.
StudyConfig study_config_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir);

struct MethodResult {
  std::optional<EstimateRecord> rd;
  std::optional<EstimateRecord> log_or;
  std::optional<BootstrapResult> rd_boot;
  std::optional<BootstrapResult> log_or_boot;
  std::string error;  // non-empty when the method failed on this replicate
};

/// Everything produced by one replicate. Deterministic in
/// (master_seed, replicate_index).
struct ReplicateOutcome {
  MethodResult glmm;
  MethodResult mi;
  double final_missing_fraction = 0;
};

ReplicateOutcome run_replicate(const StudyConfig& config,
                               std::uint64_t replicate_index);

/// Metrics for one (method, estimand) cell of the summary table.
struct CellMetrics {
  MethodTag method = MethodTag::glmm;
  Estimand estimand = Estimand::rd;
  std::size_t n_success = 0;
  std::size_t n_fail = 0;
  std::size_t n_fallback = 0;
  double bias = 0;
  double evar = 0;
  double cp = 0;
  double mse = 0;
  std::optional<double> var;            // absent when fewer than 2 successes
  std::optional<double> cp_b;           // bootstrap coverage, when run
  std::optional<double> mean_boot_var;  // mean bootstrap variance, when run
};

struct MetricsSummary {
  std::string scenario;
  std::string missing;
  std::size_t n_replicates = 0;
  TrueValues truth;
  std::vector<CellMetrics> cells;
  std::optional<double> rmse_ratio_rd;      // MSE(glmm) / MSE(mi)
  std::optional<double> rmse_ratio_log_or;
  double final_missing_rate = 0;  // average over replicates
};

MetricsSummary run_study(const StudyConfig& config);

/// Write `<basename>.csv` and `<basename>.json` under out_dir. The CSV has
/// exactly the columns scenario, missing, method, estimand, bias, var, evar,
/// cp, cp_b, rmse_ratio, n_fallback, n_fail; the JSON carries the same rows
/// plus the truth and bootstrap-variance fields consumed by `compare`.
void emit_tables(const MetricsSummary& summary,
                 const std::filesystem::path& out_dir,
                 const std::string& basename);

nlohmann::json summary_to_json(const MetricsSummary& summary);
MetricsSummary summary_from_json(const nlohmann::json& j);

/// Variance-ratio-versus-missing-rate scatter over several studies, with an
/// OLS line per estimand. The ratio per scenario is mean bootstrap variance
/// of glmm over mi when bootstrap ran, else the empirical variance ratio.
struct VarianceRatioReport {
  struct Row {
    std::string scenario;
    double missing_rate = 0;
    double ratio_rd = 0;
    double ratio_log_or = 0;
    std::string variance_source;  // "bootstrap" or "empirical"
  };
  std::vector<Row> rows;
  double slope_rd = 0;
  double intercept_rd = 0;
  double slope_log_or = 0;
  double intercept_log_or = 0;
};

VarianceRatioReport variance_ratio_report(
    const std::vector<MetricsSummary>& summaries);

void write_variance_ratio_csv(const VarianceRatioReport& report,
                              const std::filesystem::path& path);

}  // namespace dichot
