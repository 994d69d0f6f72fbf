#pragma once

#include <Eigen/Core>

#include "dichot/rng.hpp"
#include "dichot/scenario.hpp"

namespace dichot {

/// Exchangeable-decay correlation matrix with entries rho^|j-k|.
Eigen::MatrixXd corr_matrix(std::size_t n_visits, double rho);

/// Underlying Gaussian parameters of a log-normal with the given mean and
/// standard deviation on the original scale.
struct LognormalParams {
  double mu_log = 0;
  double sigma_log = 0;
};
LognormalParams lognormal_match(double mean, double sd);

/// Latent Gaussian correlation producing `target` correlation between two
/// log-normals with log-scale sigmas sl_j, sl_k (copula inversion).
double lognormal_latent_corr(double target, double sl_j, double sl_k);

// Complete outcome rows (n x J) for one counterfactual arm. Marginal means
// are mu_k, marginal SDs sigma, correlation corr_decay^|j-k|.
Eigen::MatrixXd sample_mvnormal(const ScenarioSpec& spec, std::size_t n,
                                int arm, Rng& rng);
Eigen::MatrixXd sample_mvt3(const ScenarioSpec& spec, std::size_t n, int arm,
                            Rng& rng);
Eigen::MatrixXd sample_mvlognormal(const ScenarioSpec& spec, std::size_t n,
                                   int arm, Rng& rng);

/// Complete trial from a parametric family: arms fixed at n_per_arm each, or
/// drawn Bernoulli(treated_probability) when n_total is given.
TrialDataset sample_parametric_trial(const ScenarioSpec& spec, Rng& rng);

/// Per-visit constant shifts aligning the source sample means with mu0 / mu1.
std::pair<std::vector<double>, std::vector<double>> empirical_shifts(
    const ScenarioSpec& spec);

/// Resampling generator: bootstrap source subjects to n_total, draw arms
/// Bernoulli with the randomization ratio, attach the shifted potential
/// outcome of the drawn arm. Output is complete.
TrialDataset resample_empirical(const ScenarioSpec& spec, Rng& rng);

/// Complete trial from any family.
TrialDataset sample_trial(const ScenarioSpec& spec, Rng& rng);

/// Closed-form (parametric) or exact finite-population (empirical) estimand
/// values at the final visit.
TrueValues true_values(const ScenarioSpec& spec);

}  // namespace dichot
