#pragma once

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dichot/dataset.hpp"
#include "dichot/rng.hpp"

namespace dichot {

enum class Estimand { rd, log_or };
enum class MethodTag { glmm, mi };

std::string to_string(Estimand e);
std::string to_string(MethodTag m);

/// One estimate with its variance and confidence interval.
struct EstimateRecord {
  Estimand estimand = Estimand::rd;
  MethodTag method = MethodTag::glmm;
  double estimate = 0;
  double variance = 0;
  double ci_low = 0;
  double ci_high = 0;
  // Degrees of freedom behind the CI: +inf means a normal quantile, finite
  // values come from Rubin pooling.
  double df = std::numeric_limits<double>::infinity();
  bool used_fallback = false;
};

/// Per-subject design rows at the target visit under each counterfactual arm.
/// The two rows differ only in the treatment / treatment-interaction columns.
struct CounterfactualDesign {
  Eigen::MatrixXd rows0;
  Eigen::MatrixXd rows1;
};

/// Rows [1, baseline, k] of the final-visit logistic analysis model.
CounterfactualDesign final_visit_cfd_logistic(const TrialDataset& dataset);

/// Rows of the longitudinal marginal model evaluated at the final visit
/// (matches build_design column order).
CounterfactualDesign final_visit_cfd_longitudinal(const TrialDataset& dataset);

/// Standardized group means: average of expit(row_k . beta) over all subjects
/// from both arms.
std::pair<double, double> gcomp_means(const Eigen::VectorXd& beta,
                                      const CounterfactualDesign& cfd);

/// Delta-method gradients of the risk difference / log odds ratio in beta.
Eigen::VectorXd rd_gradient(const Eigen::VectorXd& beta,
                            const CounterfactualDesign& cfd);
Eigen::VectorXd log_or_gradient(const Eigen::VectorXd& beta,
                                const CounterfactualDesign& cfd);

/// p1_hat - p0_hat with variance G1' cov G1 and a normal-quantile CI.
EstimateRecord risk_difference(const Eigen::VectorXd& beta,
                               const Eigen::MatrixXd& cov_beta,
                               const CounterfactualDesign& cfd);

/// logit(p1_hat) - logit(p0_hat) with variance G2' cov G2.
EstimateRecord log_odds_ratio(const Eigen::VectorXd& beta,
                              const Eigen::MatrixXd& cov_beta,
                              const CounterfactualDesign& cfd);

/// Rubin pooling over m >= 2 records of the same estimand: mean estimate,
/// total variance W + (1+1/m)B, t interval with df (m-1)(1 + W/((1+1/m)B))^2.
EstimateRecord rubin_pool(const std::vector<EstimateRecord>& records);

struct BootstrapResult {
  double ci_low = 0;
  double ci_high = 0;
  double variance = 0;
  std::size_t n_failed = 0;
};

/// Percentile bootstrap over subjects resampled with replacement within each
/// arm. The pipeline is rerun in full on every resample; estimation failures
/// are skipped and tallied, with more than 20% failures raising an error.
/// Intervals use nearest-rank quantiles at 0.025 / 0.975.
BootstrapResult bootstrap_ci(
    const TrialDataset& dataset,
    const std::function<double(const TrialDataset&, Rng&)>& pipeline,
    std::size_t n_resamples, Rng& rng);

/// Same resampling scheme for a vector-valued pipeline; returns one
/// BootstrapResult per component. Components of a failed resample are all
/// skipped.
std::vector<BootstrapResult> bootstrap_ci_multi(
    const TrialDataset& dataset,
    const std::function<std::vector<double>(const TrialDataset&, Rng&)>&
        pipeline,
    std::size_t n_outputs, std::size_t n_resamples, Rng& rng);

}  // namespace dichot
