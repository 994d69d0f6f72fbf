#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dichot/dataset.hpp"

namespace dichot {

enum class WorkingStructure { unstructured, independence };

struct ModelSpec {
  WorkingStructure working = WorkingStructure::unstructured;
  int max_iter = 100;
  double tol = 1e-6;
  // |beta_j| beyond this on the logit scale is treated as separation.
  double separation_threshold = 30.0;
};

/// Stacked per-subject design blocks for the marginal logistic model. One row
/// per observed (subject, post-baseline visit); columns are
///   [intercept, baseline value, visit indicators (reference = first
///    post-baseline visit), treatment, treatment x visit indicators].
struct DesignData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::int32_t> subject;  // cluster index per row
  std::vector<std::int32_t> visit;    // 0-based index among post-baseline visits
  std::size_t n_visits = 0;           // J (including baseline)
  std::size_t n_subjects = 0;
};

struct FitResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov_model;     // bread inverse
  Eigen::MatrixXd cov_sandwich;  // cluster-robust
  Eigen::MatrixXd working_corr;  // (J-1) x (J-1), identity when fallback
  bool converged = false;
  bool used_fallback = false;
  int n_iter = 0;
};

DesignData build_design(const BinaryPanel& panel, const TrialDataset& dataset);

/// Solve the marginal estimating equations with logistic mean and working
/// covariance A^{1/2} R A^{1/2}. R is re-estimated every outer iteration by
/// pairwise-complete moments of Pearson residuals; on non-convergence or a
/// non-positive-definite R the fit falls back to R = identity and sets
/// used_fallback. cov_sandwich is B^{-1} M B^{-1} over subject clusters.
FitResult fit_marginal_logistic(const DesignData& design,
                                const ModelSpec& spec = {});

/// expit(row . beta).
double predict_prob(const FitResult& fit, const Eigen::VectorXd& row);

}  // namespace dichot
