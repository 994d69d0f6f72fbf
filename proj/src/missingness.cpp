#include "dichot/missingness.hpp"

#include <cmath>

#include "dichot/links.hpp"

namespace dichot {

std::vector<double> ols_residuals(std::span<const double> y,
                                  std::span<const double> x) {
  const std::size_t n = y.size();
  if (n != x.size()) {
    throw EstimationError("ols_residuals: y and x lengths differ");
  }
  if (n < 3) {
    throw EstimationError("ols_residuals: need at least 3 points");
  }
  double xbar = 0, ybar = 0;
  for (std::size_t i = 0; i < n; ++i) {
    xbar += x[i];
    ybar += y[i];
  }
  xbar /= static_cast<double>(n);
  ybar /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
  }
  if (sxx <= 0.0) {
    throw EstimationError("ols_residuals: x is constant");
  }
  const double slope = sxy / sxx;
  const double intercept = ybar - slope * xbar;
  std::vector<double> res(n);
  for (std::size_t i = 0; i < n; ++i) {
    res[i] = y[i] - (intercept + slope * x[i]);
  }
  return res;
}

namespace {

TrialDataset blank_from_stage(const TrialDataset& dataset,
                              const std::vector<std::size_t>& observed_visits) {
  auto subjects = dataset.subjects();
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    for (std::size_t j = observed_visits[i]; j < dataset.n_visits(); ++j) {
      subjects[i].outcomes[j].reset();
    }
  }
  return TrialDataset(std::move(subjects), dataset.n_visits());
}

void require_complete(const TrialDataset& dataset, const char* op) {
  if (!dataset.complete()) {
    throw Error(std::string(op) + " requires a complete dataset");
  }
}

}  // namespace

TrialDataset apply_mcar(const TrialDataset& dataset,
                        const DropoutConfig& config, Rng& rng) {
  require_complete(dataset, "apply_mcar");
  config.validate(dataset.n_visits());
  const std::size_t n = dataset.n_subjects();
  const std::size_t J = dataset.n_visits();
  // observed[i] = number of leading visits kept (J = complete).
  std::vector<std::size_t> observed(n, J);
  std::vector<bool> retained(n, true);
  for (std::size_t stage = 0; stage + 1 < J; ++stage) {
    const double p = config.conditional_retention[stage];
    for (std::size_t i = 0; i < n; ++i) {
      if (!retained[i]) continue;
      if (!rng.bernoulli(p)) {
        retained[i] = false;
        observed[i] = stage + 1;  // visits 0..stage kept
      }
    }
  }
  return blank_from_stage(dataset, observed);
}

TrialDataset apply_mar(const TrialDataset& dataset, const DropoutConfig& config,
                       Rng& rng) {
  require_complete(dataset, "apply_mar");
  config.validate(dataset.n_visits());
  const std::size_t n = dataset.n_subjects();
  const std::size_t J = dataset.n_visits();
  const auto& subjects = dataset.subjects();

  std::vector<std::size_t> observed(n, J);
  std::vector<bool> retained(n, true);
  for (std::size_t stage = 0; stage + 1 < J; ++stage) {
    const double base_logit = logit(config.mar_base[stage]);
    const double c_trt = config.mar_coeff_trt[stage];
    const double c_ctl = config.mar_coeff_ctl[stage];

    // Stage 0 uses the raw baseline value; later stages use residuals from a
    // pooled-arm OLS of the previous visit's value on baseline, fit within
    // the at-risk set.
    std::vector<std::size_t> at_risk;
    for (std::size_t i = 0; i < n; ++i) {
      if (retained[i]) at_risk.push_back(i);
    }
    std::vector<double> driver(at_risk.size());
    if (stage == 0) {
      for (std::size_t k = 0; k < at_risk.size(); ++k) {
        driver[k] = *subjects[at_risk[k]].outcomes[0];
      }
    } else {
      if (at_risk.size() < 3) {
        throw EstimationError("apply_mar: at-risk set smaller than 3 at stage " +
                              std::to_string(stage + 1));
      }
      std::vector<double> yprev(at_risk.size()), ybase(at_risk.size());
      for (std::size_t k = 0; k < at_risk.size(); ++k) {
        yprev[k] = *subjects[at_risk[k]].outcomes[stage];
        ybase[k] = *subjects[at_risk[k]].outcomes[0];
      }
      driver = ols_residuals(yprev, ybase);
    }

    for (std::size_t k = 0; k < at_risk.size(); ++k) {
      const std::size_t i = at_risk[k];
      const double coeff = subjects[i].arm == 1 ? c_trt : c_ctl;
      const double p = expit(base_logit - coeff * driver[k]);
      if (!rng.bernoulli(p)) {
        retained[i] = false;
        observed[i] = stage + 1;
      }
    }
  }
  return blank_from_stage(dataset, observed);
}

TrialDataset apply_dropout(const TrialDataset& dataset,
                           const DropoutConfig& config, Rng& rng) {
  switch (config.mechanism) {
    case Mechanism::none: return dataset;
    case Mechanism::mcar: return apply_mcar(dataset, config, rng);
    case Mechanism::mar: return apply_mar(dataset, config, rng);
  }
  throw Error("apply_dropout: bad mechanism");
}

}  // namespace dichot
