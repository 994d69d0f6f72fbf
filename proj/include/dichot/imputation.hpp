#pragma once

#include <vector>

#include "dichot/dataset.hpp"
#include "dichot/estimands.hpp"
#include "dichot/rng.hpp"

namespace dichot {

struct ImputationConfig {
  std::size_t m = 10;
  // Impute each arm separately (default); when false, the arms are pooled and
  // treatment enters every regression as a covariate.
  bool by_arm = true;
};

/// m completed copies of the source; observed cells are identical to the
/// source in every copy.
struct CompletedSet {
  std::vector<TrialDataset> copies;
};

/// Sequential-regression imputation for monotone missingness: visit by visit,
/// regress the observed values on the full prior history, draw the error
/// variance from RSS/chi-square(df) and the coefficients from their normal
/// posterior, then fill the missing cells with noise added. Filled values
/// feed the later steps.
CompletedSet impute_monotone(const TrialDataset& dataset,
                             const ImputationConfig& config, Rng& rng);

/// Per-copy analysis: dichotomize, fit the final-visit logistic model
/// (baseline + treatment) with sandwich covariance, and standardize.
struct MiAnalysis {
  std::vector<EstimateRecord> rd_per_copy;
  std::vector<EstimateRecord> log_or_per_copy;
};
MiAnalysis analyze_completed(const CompletedSet& set, const Threshold& threshold);

/// Impute, analyze, and Rubin-pool; returns the pooled (rd, log_or) pair.
std::pair<EstimateRecord, EstimateRecord> mi_pipeline(
    const TrialDataset& dataset, const Threshold& threshold,
    const ImputationConfig& config, Rng& rng);

}  // namespace dichot
