#include "dichot/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "dichot/datagen.hpp"
#include "dichot/missingness.hpp"
#include "dichot/stats.hpp"

namespace dichot {

StudyConfig study_config_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir) {
  for (const auto& [key, value] : j.items()) {
    static const std::set<std::string> known = {
        "scenario", "n_replicates", "methods", "bootstrap_B", "master_seed",
        "m", "by_arm"};
    if (!known.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in study config");
    }
  }
  StudyConfig cfg;
  cfg.scenario = scenario_from_json(j.at("scenario"), base_dir);
  if (j.contains("n_replicates")) {
    cfg.n_replicates = j.at("n_replicates").get<std::size_t>();
  }
  if (j.contains("methods")) {
    cfg.run_glmm = false;
    cfg.run_mi = false;
    for (const auto& m : j.at("methods")) {
      const auto name = m.get<std::string>();
      if (name == "glmm") {
        cfg.run_glmm = true;
      } else if (name == "mi") {
        cfg.run_mi = true;
      } else {
        throw ConfigError("unknown method '" + name + "'");
      }
    }
    if (!cfg.run_glmm && !cfg.run_mi) {
      throw ConfigError("methods must include glmm and/or mi");
    }
  }
  if (j.contains("bootstrap_B")) {
    cfg.bootstrap_B = j.at("bootstrap_B").get<std::size_t>();
  }
  cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("m")) cfg.imputation.m = j.at("m").get<std::size_t>();
  if (j.contains("by_arm")) cfg.imputation.by_arm = j.at("by_arm").get<bool>();
  if (cfg.n_replicates < 1) throw ConfigError("n_replicates must be >= 1");
  return cfg;
}

namespace {

struct GlmmEstimates {
  EstimateRecord rd;
  EstimateRecord log_or;
};

GlmmEstimates glmm_analyze(const TrialDataset& data, const Threshold& threshold,
                           const ModelSpec& model) {
  const BinaryPanel panel = dichotomize(data, threshold);
  const DesignData design = build_design(panel, data);
  const FitResult fit = fit_marginal_logistic(design, model);
  const CounterfactualDesign cfd = final_visit_cfd_longitudinal(data);
  GlmmEstimates est{risk_difference(fit.beta, fit.cov_sandwich, cfd),
                    log_odds_ratio(fit.beta, fit.cov_sandwich, cfd)};
  est.rd.method = MethodTag::glmm;
  est.rd.used_fallback = fit.used_fallback;
  est.log_or.method = MethodTag::glmm;
  est.log_or.used_fallback = fit.used_fallback;
  return est;
}

}  // namespace

ReplicateOutcome run_replicate(const StudyConfig& config,
                               std::uint64_t replicate_index) {
  const ScenarioSpec& spec = config.scenario;
  Rng datagen_rng(config.master_seed, replicate_index, Stage::datagen);
  Rng dropout_rng(config.master_seed, replicate_index, Stage::dropout);
  Rng imputation_rng(config.master_seed, replicate_index, Stage::imputation);
  Rng bootstrap_rng(config.master_seed, replicate_index, Stage::bootstrap);

  const TrialDataset complete = sample_trial(spec, datagen_rng);
  const TrialDataset observed =
      apply_dropout(complete, spec.missingness, dropout_rng);

  ReplicateOutcome out;
  out.final_missing_fraction = observed.missing_fraction(spec.n_visits() - 1);

  if (config.run_glmm) {
    try {
      const GlmmEstimates est =
          glmm_analyze(observed, spec.threshold, config.model);
      out.glmm.rd = est.rd;
      out.glmm.log_or = est.log_or;
    } catch (const EstimationError& e) {
      out.glmm.error = e.what();
    }
  }
  if (config.run_mi) {
    try {
      auto [rd, log_or] = mi_pipeline(observed, spec.threshold,
                                      config.imputation, imputation_rng);
      out.mi.rd = rd;
      out.mi.log_or = log_or;
    } catch (const EstimationError& e) {
      out.mi.error = e.what();
    }
  }

  if (config.bootstrap_B.has_value()) {
    // One resampling pass evaluates every requested (method, estimand) so the
    // two methods see identical resampled datasets.
    std::vector<int> slots;  // 0 glmm rd, 1 glmm logor, 2 mi rd, 3 mi logor
    if (config.run_glmm) {
      slots.push_back(0);
      slots.push_back(1);
    }
    if (config.run_mi) {
      slots.push_back(2);
      slots.push_back(3);
    }
    auto pipeline = [&](const TrialDataset& d, Rng& rng) {
      std::vector<double> values;
      values.reserve(slots.size());
      std::optional<GlmmEstimates> glmm;
      std::optional<std::pair<EstimateRecord, EstimateRecord>> mi;
      for (int slot : slots) {
        if (slot <= 1 && !glmm.has_value()) {
          glmm = glmm_analyze(d, spec.threshold, config.model);
        }
        if (slot >= 2 && !mi.has_value()) {
          mi = mi_pipeline(d, spec.threshold, config.imputation, rng);
        }
        switch (slot) {
          case 0: values.push_back(glmm->rd.estimate); break;
          case 1: values.push_back(glmm->log_or.estimate); break;
          case 2: values.push_back(mi->first.estimate); break;
          case 3: values.push_back(mi->second.estimate); break;
        }
      }
      return values;
    };
    try {
      const auto results = bootstrap_ci_multi(
          observed, pipeline, slots.size(), *config.bootstrap_B, bootstrap_rng);
      for (std::size_t k = 0; k < slots.size(); ++k) {
        switch (slots[k]) {
          case 0: out.glmm.rd_boot = results[k]; break;
          case 1: out.glmm.log_or_boot = results[k]; break;
          case 2: out.mi.rd_boot = results[k]; break;
          case 3: out.mi.log_or_boot = results[k]; break;
        }
      }
    } catch (const EstimationError& e) {
      // Bootstrap failure voids the bootstrap intervals only; the point
      // estimates above stand.
      if (config.run_glmm && out.glmm.error.empty()) {
        out.glmm.error = std::string("bootstrap: ") + e.what();
      }
      if (config.run_mi && out.mi.error.empty()) {
        out.mi.error = std::string("bootstrap: ") + e.what();
      }
    }
  }
  return out;
}

namespace {

CellMetrics summarize_cell(const std::vector<ReplicateOutcome>& outcomes,
                           MethodTag method, Estimand estimand, double truth) {
  CellMetrics cell;
  cell.method = method;
  cell.estimand = estimand;
  std::vector<double> estimates, variances;
  std::size_t covered = 0;
  std::size_t boot_count = 0, boot_covered = 0;
  double boot_var_sum = 0;
  for (const auto& rep : outcomes) {
    const MethodResult& mr = method == MethodTag::glmm ? rep.glmm : rep.mi;
    const auto& rec = estimand == Estimand::rd ? mr.rd : mr.log_or;
    if (!rec.has_value()) {
      ++cell.n_fail;
      continue;
    }
    ++cell.n_success;
    if (rec->used_fallback) ++cell.n_fallback;
    estimates.push_back(rec->estimate);
    variances.push_back(rec->variance);
    if (rec->ci_low <= truth && truth <= rec->ci_high) ++covered;
    const auto& boot = estimand == Estimand::rd ? mr.rd_boot : mr.log_or_boot;
    if (boot.has_value()) {
      ++boot_count;
      boot_var_sum += boot->variance;
      if (boot->ci_low <= truth && truth <= boot->ci_high) ++boot_covered;
    }
  }
  if (!estimates.empty()) {
    cell.bias = stats::mean(estimates) - truth;
    cell.evar = stats::mean(variances);
    cell.cp = static_cast<double>(covered) /
              static_cast<double>(cell.n_success);
    double mse = 0;
    for (double e : estimates) mse += (e - truth) * (e - truth);
    cell.mse = mse / static_cast<double>(estimates.size());
    if (estimates.size() >= 2) cell.var = stats::sample_variance(estimates);
  }
  if (boot_count > 0) {
    cell.cp_b = static_cast<double>(boot_covered) /
                static_cast<double>(boot_count);
    cell.mean_boot_var = boot_var_sum / static_cast<double>(boot_count);
  }
  return cell;
}

}  // namespace

MetricsSummary run_study(const StudyConfig& config) {
  if (config.n_replicates < 1) throw ConfigError("n_replicates must be >= 1");
  const TrueValues truth = true_values(config.scenario);

  std::vector<ReplicateOutcome> outcomes(config.n_replicates);
  unsigned n_threads = config.n_threads > 0
                           ? static_cast<unsigned>(config.n_threads)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(
      n_threads, static_cast<unsigned>(config.n_replicates));

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t r = next.fetch_add(1);
      if (r >= config.n_replicates) return;
      try {
        outcomes[r] = run_replicate(config, r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  MetricsSummary summary;
  summary.scenario = config.label;
  summary.missing = to_string(config.scenario.missingness.mechanism);
  summary.n_replicates = config.n_replicates;
  summary.truth = truth;
  double missing_sum = 0;
  for (const auto& rep : outcomes) missing_sum += rep.final_missing_fraction;
  summary.final_missing_rate =
      missing_sum / static_cast<double>(config.n_replicates);

  for (MethodTag method : {MethodTag::glmm, MethodTag::mi}) {
    if (method == MethodTag::glmm && !config.run_glmm) continue;
    if (method == MethodTag::mi && !config.run_mi) continue;
    for (Estimand estimand : {Estimand::rd, Estimand::log_or}) {
      const double truth_value =
          estimand == Estimand::rd ? truth.rd : truth.log_or;
      summary.cells.push_back(
          summarize_cell(outcomes, method, estimand, truth_value));
    }
  }

  if (config.run_glmm && config.run_mi) {
    auto find_cell = [&](MethodTag m, Estimand e) -> const CellMetrics* {
      for (const auto& c : summary.cells) {
        if (c.method == m && c.estimand == e) return &c;
      }
      return nullptr;
    };
    const auto* g_rd = find_cell(MethodTag::glmm, Estimand::rd);
    const auto* m_rd = find_cell(MethodTag::mi, Estimand::rd);
    const auto* g_lo = find_cell(MethodTag::glmm, Estimand::log_or);
    const auto* m_lo = find_cell(MethodTag::mi, Estimand::log_or);
    if (g_rd->n_success > 0 && m_rd->n_success > 0 && m_rd->mse > 0) {
      summary.rmse_ratio_rd = g_rd->mse / m_rd->mse;
    }
    if (g_lo->n_success > 0 && m_lo->n_success > 0 && m_lo->mse > 0) {
      summary.rmse_ratio_log_or = g_lo->mse / m_lo->mse;
    }
  }
  return summary;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::optional<double> cell_rmse_ratio(const MetricsSummary& s,
                                      const CellMetrics& c) {
  return c.estimand == Estimand::rd ? s.rmse_ratio_rd : s.rmse_ratio_log_or;
}

}  // namespace

void emit_tables(const MetricsSummary& summary,
                 const std::filesystem::path& out_dir,
                 const std::string& basename) {
  std::filesystem::create_directories(out_dir);
  const auto csv_path = out_dir / (basename + ".csv");
  std::ofstream csv(csv_path);
  if (!csv) throw Error("cannot write " + csv_path.string());
  csv << "scenario,missing,method,estimand,bias,var,evar,cp,cp_b,rmse_ratio,"
         "n_fallback,n_fail\n";
  for (const auto& c : summary.cells) {
    csv << summary.scenario << "," << summary.missing << ","
        << to_string(c.method) << "," << to_string(c.estimand) << ","
        << fmt17(c.bias) << ",";
    if (c.var.has_value()) csv << fmt17(*c.var);
    csv << "," << fmt17(c.evar) << "," << fmt17(c.cp) << ",";
    if (c.cp_b.has_value()) csv << fmt17(*c.cp_b);
    csv << ",";
    const auto ratio = cell_rmse_ratio(summary, c);
    if (ratio.has_value()) csv << fmt17(*ratio);
    csv << "," << c.n_fallback << "," << c.n_fail << "\n";
  }
  if (!csv) throw Error("write failed for " + csv_path.string());
  csv.close();

  const auto json_path = out_dir / (basename + ".json");
  std::ofstream js(json_path);
  if (!js) throw Error("cannot write " + json_path.string());
  js << summary_to_json(summary).dump(2) << "\n";
  if (!js) throw Error("write failed for " + json_path.string());
}

nlohmann::json summary_to_json(const MetricsSummary& summary) {
  nlohmann::json j;
  j["scenario"] = summary.scenario;
  j["missing"] = summary.missing;
  j["n_replicates"] = summary.n_replicates;
  j["final_missing_rate"] = summary.final_missing_rate;
  j["truth"] = {{"p0", summary.truth.p0},
                {"p1", summary.truth.p1},
                {"rd", summary.truth.rd},
                {"log_or", summary.truth.log_or},
                {"visit", summary.truth.visit}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : summary.cells) {
    nlohmann::json row;
    row["scenario"] = summary.scenario;
    row["missing"] = summary.missing;
    row["method"] = to_string(c.method);
    row["estimand"] = to_string(c.estimand);
    row["bias"] = c.bias;
    row["var"] = c.var.has_value() ? nlohmann::json(*c.var)
                                   : nlohmann::json(nullptr);
    row["evar"] = c.evar;
    row["cp"] = c.cp;
    row["cp_b"] = c.cp_b.has_value() ? nlohmann::json(*c.cp_b)
                                     : nlohmann::json(nullptr);
    const auto ratio = cell_rmse_ratio(summary, c);
    row["rmse_ratio"] = ratio.has_value() ? nlohmann::json(*ratio)
                                          : nlohmann::json(nullptr);
    row["n_fallback"] = c.n_fallback;
    row["n_fail"] = c.n_fail;
    row["mean_boot_var"] = c.mean_boot_var.has_value()
                               ? nlohmann::json(*c.mean_boot_var)
                               : nlohmann::json(nullptr);
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

MetricsSummary summary_from_json(const nlohmann::json& j) {
  MetricsSummary s;
  s.scenario = j.at("scenario").get<std::string>();
  s.missing = j.at("missing").get<std::string>();
  s.n_replicates = j.at("n_replicates").get<std::size_t>();
  s.final_missing_rate = j.at("final_missing_rate").get<double>();
  const auto& t = j.at("truth");
  s.truth.p0 = t.at("p0").get<double>();
  s.truth.p1 = t.at("p1").get<double>();
  s.truth.rd = t.at("rd").get<double>();
  s.truth.log_or = t.at("log_or").get<double>();
  s.truth.visit = t.at("visit").get<std::size_t>();
  for (const auto& row : j.at("rows")) {
    CellMetrics c;
    const auto method = row.at("method").get<std::string>();
    c.method = method == "glmm" ? MethodTag::glmm : MethodTag::mi;
    const auto estimand = row.at("estimand").get<std::string>();
    c.estimand = estimand == "rd" ? Estimand::rd : Estimand::log_or;
    c.bias = row.at("bias").get<double>();
    if (!row.at("var").is_null()) c.var = row.at("var").get<double>();
    c.evar = row.at("evar").get<double>();
    c.cp = row.at("cp").get<double>();
    if (!row.at("cp_b").is_null()) c.cp_b = row.at("cp_b").get<double>();
    if (!row.at("rmse_ratio").is_null()) {
      if (c.estimand == Estimand::rd) {
        s.rmse_ratio_rd = row.at("rmse_ratio").get<double>();
      } else {
        s.rmse_ratio_log_or = row.at("rmse_ratio").get<double>();
      }
    }
    c.n_fallback = row.at("n_fallback").get<std::size_t>();
    c.n_fail = row.at("n_fail").get<std::size_t>();
    if (!row.at("mean_boot_var").is_null()) {
      c.mean_boot_var = row.at("mean_boot_var").get<double>();
    }
    s.cells.push_back(c);
  }
  return s;
}

VarianceRatioReport variance_ratio_report(
    const std::vector<MetricsSummary>& summaries) {
  if (summaries.size() < 2) {
    throw Error("variance_ratio_report needs at least two scenarios");
  }
  VarianceRatioReport report;
  for (const auto& s : summaries) {
    auto find_cell = [&](MethodTag m, Estimand e) -> const CellMetrics* {
      for (const auto& c : s.cells) {
        if (c.method == m && c.estimand == e) return &c;
      }
      return nullptr;
    };
    const auto* g_rd = find_cell(MethodTag::glmm, Estimand::rd);
    const auto* m_rd = find_cell(MethodTag::mi, Estimand::rd);
    const auto* g_lo = find_cell(MethodTag::glmm, Estimand::log_or);
    const auto* m_lo = find_cell(MethodTag::mi, Estimand::log_or);
    if (!g_rd || !m_rd || !g_lo || !m_lo) {
      throw Error("variance_ratio_report: summary '" + s.scenario +
                  "' lacks glmm or mi cells");
    }
    VarianceRatioReport::Row row;
    row.scenario = s.scenario;
    row.missing_rate = s.final_missing_rate;
    const bool boot = g_rd->mean_boot_var.has_value() &&
                      m_rd->mean_boot_var.has_value() &&
                      g_lo->mean_boot_var.has_value() &&
                      m_lo->mean_boot_var.has_value();
    if (boot) {
      row.ratio_rd = *g_rd->mean_boot_var / *m_rd->mean_boot_var;
      row.ratio_log_or = *g_lo->mean_boot_var / *m_lo->mean_boot_var;
      row.variance_source = "bootstrap";
    } else {
      if (!g_rd->var || !m_rd->var || !g_lo->var || !m_lo->var) {
        throw Error("variance_ratio_report: no variance available for '" +
                    s.scenario + "'");
      }
      row.ratio_rd = *g_rd->var / *m_rd->var;
      row.ratio_log_or = *g_lo->var / *m_lo->var;
      row.variance_source = "empirical";
    }
    report.rows.push_back(row);
  }

  auto ols_line = [](const std::vector<VarianceRatioReport::Row>& rows,
                     bool rd) -> std::pair<double, double> {
    double xbar = 0, ybar = 0;
    for (const auto& r : rows) {
      xbar += r.missing_rate;
      ybar += rd ? r.ratio_rd : r.ratio_log_or;
    }
    const double n = static_cast<double>(rows.size());
    xbar /= n;
    ybar /= n;
    double sxx = 0, sxy = 0;
    for (const auto& r : rows) {
      const double y = rd ? r.ratio_rd : r.ratio_log_or;
      sxx += (r.missing_rate - xbar) * (r.missing_rate - xbar);
      sxy += (r.missing_rate - xbar) * (y - ybar);
    }
    if (sxx <= 1e-300) return {0.0, ybar};  // coincident scenarios
    const double slope = sxy / sxx;
    return {slope, ybar - slope * xbar};
  };
  std::tie(report.slope_rd, report.intercept_rd) = ols_line(report.rows, true);
  std::tie(report.slope_log_or, report.intercept_log_or) =
      ols_line(report.rows, false);
  return report;
}

void write_variance_ratio_csv(const VarianceRatioReport& report,
                              const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "scenario,missing_rate,ratio_rd,ratio_log_or,variance_source\n";
  for (const auto& r : report.rows) {
    out << r.scenario << "," << fmt17(r.missing_rate) << ","
        << fmt17(r.ratio_rd) << "," << fmt17(r.ratio_log_or) << ","
        << r.variance_source << "\n";
  }
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace dichot
