#pragma once

#include <span>
#include <vector>

#include "dichot/rng.hpp"
#include "dichot/scenario.hpp"

namespace dichot {

/// Residuals of the least-squares line of y on x (with intercept).
/// Requires >= 3 points and non-constant x.
std::vector<double> ols_residuals(std::span<const double> y,
                                  std::span<const double> x);

// Both generators take a complete dataset and induce monotone dropout, one
// retention stage per post-baseline visit.
//
// MCAR: stage t is an unconditional Bernoulli(conditional_retention[t]) among
// subjects retained through stage t-1.
//
// MAR: stage 1 retention is expit(logit(mar_base[1]) - c_trt*y1 (treated) or
// - c_ctl*y1 (control)); at stage t >= 2 an OLS of the previous visit's value
// on baseline is fit within the at-risk set (arms pooled), and the residual
// enters the same way. Dropout therefore rises with higher-than-predicted
// values and is steeper in the control arm.
TrialDataset apply_mcar(const TrialDataset& dataset, const DropoutConfig& config,
                        Rng& rng);
TrialDataset apply_mar(const TrialDataset& dataset, const DropoutConfig& config,
                       Rng& rng);

/// Dispatch on config.mechanism; Mechanism::none returns the input unchanged.
TrialDataset apply_dropout(const TrialDataset& dataset,
                           const DropoutConfig& config, Rng& rng);

}  // namespace dichot
