#include "dichot/imputation.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "dichot/marginal_fit.hpp"

namespace dichot {

namespace {

// One stratum = the subject indices imputed with a shared regression.
std::vector<std::vector<std::size_t>> strata_indices(
    const TrialDataset& dataset, bool by_arm) {
  if (!by_arm) {
    std::vector<std::size_t> all(dataset.n_subjects());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return {all};
  }
  std::vector<std::vector<std::size_t>> strata(2);
  for (std::size_t i = 0; i < dataset.n_subjects(); ++i) {
    strata[dataset.subjects()[i].arm].push_back(i);
  }
  if (strata[0].empty()) strata.erase(strata.begin());
  else if (strata[1].empty()) strata.pop_back();
  return strata;
}

std::string stratum_name(bool by_arm, std::size_t stratum_arm) {
  if (!by_arm) return "pooled";
  return stratum_arm == 0 ? "control arm" : "treatment arm";
}

}  // namespace

CompletedSet impute_monotone(const TrialDataset& dataset,
                             const ImputationConfig& config, Rng& rng) {
  if (config.m < 2) {
    throw ConfigError("imputation requires m >= 2");
  }
  const std::size_t J = dataset.n_visits();
  const auto strata = strata_indices(dataset, config.by_arm);
  const bool add_trt = !config.by_arm;

  CompletedSet set;
  set.copies.reserve(config.m);
  for (std::size_t copy = 0; copy < config.m; ++copy) {
    Rng copy_rng = rng.fork(copy);
    auto subjects = dataset.subjects();

    for (std::size_t s = 0; s < strata.size(); ++s) {
      const auto& members = strata[s];
      for (std::size_t t = 1; t < J; ++t) {
        std::vector<std::size_t> obs, mis;
        for (std::size_t i : members) {
          if (dataset.subjects()[i].outcomes[t].has_value()) {
            obs.push_back(i);
          } else {
            mis.push_back(i);
          }
        }
        if (mis.empty()) continue;

        const std::size_t q = t + 1 + (add_trt ? 1 : 0);
        const auto arm_of = dataset.subjects()[members.front()].arm;
        const double df =
            static_cast<double>(obs.size()) - static_cast<double>(q);
        if (df < 2.0) {
          throw EstimationError(
              "imputation: too few complete cases at visit y" +
              std::to_string(t + 1) + " in " +
              stratum_name(config.by_arm, arm_of));
        }

        auto design_row = [&](std::size_t i) {
          Eigen::VectorXd x(q);
          x(0) = 1.0;
          for (std::size_t k = 0; k < t; ++k) {
            x(static_cast<Eigen::Index>(k + 1)) = *subjects[i].outcomes[k];
          }
          if (add_trt) x(static_cast<Eigen::Index>(q - 1)) = subjects[i].arm;
          return x;
        };

        Eigen::MatrixXd x_obs(obs.size(), q);
        Eigen::VectorXd y_obs(obs.size());
        for (std::size_t r = 0; r < obs.size(); ++r) {
          x_obs.row(static_cast<Eigen::Index>(r)) = design_row(obs[r]);
          y_obs(static_cast<Eigen::Index>(r)) = *subjects[obs[r]].outcomes[t];
        }
        {
          Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x_obs);
          if (qr.rank() < x_obs.cols()) {
            throw EstimationError(
                "imputation: collinear history at visit y" +
                std::to_string(t + 1) + " in " +
                stratum_name(config.by_arm, arm_of));
          }
        }

        const Eigen::MatrixXd xtx = x_obs.transpose() * x_obs;
        Eigen::LLT<Eigen::MatrixXd> llt(xtx);
        if (llt.info() != Eigen::Success) {
          throw EstimationError("imputation: X'X not positive definite");
        }
        const Eigen::VectorXd beta_hat =
            llt.solve(x_obs.transpose() * y_obs);
        const double rss = (y_obs - x_obs * beta_hat).squaredNorm();

        // Posterior draws: sigma*^2 = RSS / chi2(df), beta* ~ N(beta_hat,
        // sigma*^2 (X'X)^-1).
        const double sigma2 = rss / copy_rng.chi_squared(df);
        const double sigma = std::sqrt(sigma2);
        Eigen::VectorXd z(q);
        for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = copy_rng.normal();
        // L L' = X'X, so L^{-T} z has covariance (X'X)^{-1}.
        const Eigen::VectorXd beta_star =
            beta_hat +
            sigma * llt.matrixU().solve(z);

        for (std::size_t i : mis) {
          const double fitted = design_row(i).dot(beta_star);
          subjects[i].outcomes[t] = fitted + sigma * copy_rng.normal();
        }
      }
    }
    set.copies.emplace_back(std::move(subjects), J);
  }
  return set;
}

MiAnalysis analyze_completed(const CompletedSet& set,
                             const Threshold& threshold) {
  MiAnalysis out;
  for (const auto& copy : set.copies) {
    const BinaryPanel panel = dichotomize(copy, threshold);
    const std::size_t J = copy.n_visits();
    const auto n = static_cast<Eigen::Index>(copy.n_subjects());

    DesignData d;
    d.X = Eigen::MatrixXd::Zero(n, 3);
    d.y.resize(n);
    d.subject.resize(n);
    d.visit.assign(n, 0);
    d.n_visits = 2;
    d.n_subjects = copy.n_subjects();
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& subj = copy.subjects()[i];
      d.X(i, 0) = 1.0;
      d.X(i, 1) = *subj.outcomes[0];
      d.X(i, 2) = subj.arm;
      d.y(i) = *panel.at(static_cast<std::size_t>(i), J - 1);
      d.subject[i] = static_cast<std::int32_t>(i);
    }
    ModelSpec spec;
    spec.working = WorkingStructure::independence;
    const FitResult fit = fit_marginal_logistic(d, spec);
    const CounterfactualDesign cfd = final_visit_cfd_logistic(copy);

    EstimateRecord rd = risk_difference(fit.beta, fit.cov_sandwich, cfd);
    rd.method = MethodTag::mi;
    EstimateRecord lo = log_odds_ratio(fit.beta, fit.cov_sandwich, cfd);
    lo.method = MethodTag::mi;
    out.rd_per_copy.push_back(rd);
    out.log_or_per_copy.push_back(lo);
  }
  return out;
}

std::pair<EstimateRecord, EstimateRecord> mi_pipeline(
    const TrialDataset& dataset, const Threshold& threshold,
    const ImputationConfig& config, Rng& rng) {
  const CompletedSet set = impute_monotone(dataset, config, rng);
  const MiAnalysis analysis = analyze_completed(set, threshold);
  return {rubin_pool(analysis.rd_per_copy),
          rubin_pool(analysis.log_or_per_copy)};
}

}  // namespace dichot
