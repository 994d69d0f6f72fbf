#include "dichot/estimands.hpp"

#include <algorithm>
#include <cmath>

#include "dichot/links.hpp"
#include "dichot/stats.hpp"

namespace dichot {

std::string to_string(Estimand e) {
  return e == Estimand::rd ? "rd" : "log_or";
}

std::string to_string(MethodTag m) { return m == MethodTag::glmm ? "glmm" : "mi"; }

CounterfactualDesign final_visit_cfd_logistic(const TrialDataset& dataset) {
  const auto n = static_cast<Eigen::Index>(dataset.n_subjects());
  CounterfactualDesign cfd;
  cfd.rows0 = Eigen::MatrixXd::Zero(n, 3);
  cfd.rows1 = Eigen::MatrixXd::Zero(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double baseline = *dataset.subjects()[i].outcomes[0];
    cfd.rows0(i, 0) = 1.0;
    cfd.rows0(i, 1) = baseline;
    cfd.rows1(i, 0) = 1.0;
    cfd.rows1(i, 1) = baseline;
    cfd.rows1(i, 2) = 1.0;
  }
  return cfd;
}

CounterfactualDesign final_visit_cfd_longitudinal(const TrialDataset& dataset) {
  const std::size_t J = dataset.n_visits();
  const auto n = static_cast<Eigen::Index>(dataset.n_subjects());
  const auto p = static_cast<Eigen::Index>(2 * J - 1);
  CounterfactualDesign cfd;
  cfd.rows0 = Eigen::MatrixXd::Zero(n, p);
  cfd.rows1 = Eigen::MatrixXd::Zero(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double baseline = *dataset.subjects()[i].outcomes[0];
    cfd.rows0(i, 0) = 1.0;
    cfd.rows0(i, 1) = baseline;
    if (J > 2) cfd.rows0(i, static_cast<Eigen::Index>(J - 1)) = 1.0;
    cfd.rows1.row(i) = cfd.rows0.row(i);
    cfd.rows1(i, static_cast<Eigen::Index>(J)) = 1.0;
    if (J > 2) cfd.rows1(i, p - 1) = 1.0;
  }
  return cfd;
}

std::pair<double, double> gcomp_means(const Eigen::VectorXd& beta,
                                      const CounterfactualDesign& cfd) {
  const Eigen::Index n = cfd.rows0.rows();
  double s0 = 0, s1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    s0 += expit(cfd.rows0.row(i).dot(beta));
    s1 += expit(cfd.rows1.row(i).dot(beta));
  }
  const double dn = static_cast<double>(n);
  return {s0 / dn, s1 / dn};
}

namespace {

// Mean over subjects of p_ik (1 - p_ik) row_k(i), the building block of both
// gradients.
void arm_gradients(const Eigen::VectorXd& beta, const CounterfactualDesign& cfd,
                   Eigen::VectorXd& g0, Eigen::VectorXd& g1) {
  const Eigen::Index n = cfd.rows0.rows();
  g0 = Eigen::VectorXd::Zero(beta.size());
  g1 = Eigen::VectorXd::Zero(beta.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p0 = expit(cfd.rows0.row(i).dot(beta));
    const double p1 = expit(cfd.rows1.row(i).dot(beta));
    g0 += p0 * (1.0 - p0) * cfd.rows0.row(i).transpose();
    g1 += p1 * (1.0 - p1) * cfd.rows1.row(i).transpose();
  }
  g0 /= static_cast<double>(n);
  g1 /= static_cast<double>(n);
}

double quadratic_form(const Eigen::VectorXd& g, const Eigen::MatrixXd& cov) {
  const double v = g.dot(cov * g);
  return std::max(v, 0.0);
}

const double kZ975 = stats::normal_quantile(0.975);

}  // namespace

Eigen::VectorXd rd_gradient(const Eigen::VectorXd& beta,
                            const CounterfactualDesign& cfd) {
  Eigen::VectorXd g0, g1;
  arm_gradients(beta, cfd, g0, g1);
  return g1 - g0;
}

Eigen::VectorXd log_or_gradient(const Eigen::VectorXd& beta,
                                const CounterfactualDesign& cfd) {
  const auto [p0, p1] = gcomp_means(beta, cfd);
  if (!(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0)) {
    throw EstimationError("log odds ratio: degenerate group mean probability");
  }
  Eigen::VectorXd g0, g1;
  arm_gradients(beta, cfd, g0, g1);
  return g1 / (p1 * (1.0 - p1)) - g0 / (p0 * (1.0 - p0));
}

EstimateRecord risk_difference(const Eigen::VectorXd& beta,
                               const Eigen::MatrixXd& cov_beta,
                               const CounterfactualDesign& cfd) {
  const auto [p0, p1] = gcomp_means(beta, cfd);
  EstimateRecord rec;
  rec.estimand = Estimand::rd;
  rec.estimate = p1 - p0;
  rec.variance = quadratic_form(rd_gradient(beta, cfd), cov_beta);
  const double half = kZ975 * std::sqrt(rec.variance);
  rec.ci_low = rec.estimate - half;
  rec.ci_high = rec.estimate + half;
  return rec;
}

EstimateRecord log_odds_ratio(const Eigen::VectorXd& beta,
                              const Eigen::MatrixXd& cov_beta,
                              const CounterfactualDesign& cfd) {
  const auto [p0, p1] = gcomp_means(beta, cfd);
  if (!(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0)) {
    throw EstimationError("log odds ratio: degenerate group mean probability");
  }
  EstimateRecord rec;
  rec.estimand = Estimand::log_or;
  rec.estimate = logit(p1) - logit(p0);
  rec.variance = quadratic_form(log_or_gradient(beta, cfd), cov_beta);
  const double half = kZ975 * std::sqrt(rec.variance);
  rec.ci_low = rec.estimate - half;
  rec.ci_high = rec.estimate + half;
  return rec;
}

EstimateRecord rubin_pool(const std::vector<EstimateRecord>& records) {
  const std::size_t m = records.size();
  if (m < 2) throw EstimationError("rubin_pool: need at least 2 records");
  for (const auto& r : records) {
    if (r.estimand != records.front().estimand) {
      throw EstimationError("rubin_pool: mixed estimands");
    }
  }
  std::vector<double> est(m), var(m);
  for (std::size_t i = 0; i < m; ++i) {
    est[i] = records[i].estimate;
    var[i] = records[i].variance;
  }
  const double q = stats::mean(est);
  const double w = stats::mean(var);
  // Identical estimates mean B = 0 exactly (summation noise would otherwise
  // produce a sub-ulp positive variance and a spuriously finite df).
  const bool all_equal =
      std::all_of(est.begin(), est.end(),
                  [&](double e) { return e == est.front(); });
  const double b = all_equal ? 0.0 : stats::sample_variance(est);
  const double md = static_cast<double>(m);
  const double total = w + (1.0 + 1.0 / md) * b;

  EstimateRecord rec;
  rec.estimand = records.front().estimand;
  rec.method = records.front().method;
  rec.estimate = q;
  rec.variance = total;
  if (b > 0.0) {
    const double ratio = w / ((1.0 + 1.0 / md) * b);
    rec.df = (md - 1.0) * (1.0 + ratio) * (1.0 + ratio);
  }  // else df stays infinite and the quantile is normal
  const double tq = stats::student_t_quantile(0.975, rec.df);
  const double half = tq * std::sqrt(total);
  rec.ci_low = q - half;
  rec.ci_high = q + half;
  for (const auto& r : records) rec.used_fallback |= r.used_fallback;
  return rec;
}

namespace {

TrialDataset resample_within_arms(const TrialDataset& dataset, Rng& rng) {
  std::vector<std::size_t> arm_members[2];
  for (std::size_t i = 0; i < dataset.n_subjects(); ++i) {
    arm_members[dataset.subjects()[i].arm].push_back(i);
  }
  std::vector<SubjectRecord> subjects;
  subjects.reserve(dataset.n_subjects());
  for (int arm = 0; arm <= 1; ++arm) {
    const auto& members = arm_members[arm];
    for (std::size_t k = 0; k < members.size(); ++k) {
      subjects.push_back(dataset.subjects()[members[rng.index(members.size())]]);
    }
  }
  return TrialDataset(std::move(subjects), dataset.n_visits());
}

}  // namespace

std::vector<BootstrapResult> bootstrap_ci_multi(
    const TrialDataset& dataset,
    const std::function<std::vector<double>(const TrialDataset&, Rng&)>&
        pipeline,
    std::size_t n_outputs, std::size_t n_resamples, Rng& rng) {
  if (n_resamples < 100) {
    throw ConfigError("bootstrap needs at least 100 resamples");
  }
  std::vector<std::vector<double>> draws(n_outputs);
  std::size_t n_failed = 0;
  for (std::size_t b = 0; b < n_resamples; ++b) {
    Rng index_rng = rng.fork(2 * b);
    Rng pipeline_rng = rng.fork(2 * b + 1);
    const TrialDataset resampled = resample_within_arms(dataset, index_rng);
    try {
      const auto values = pipeline(resampled, pipeline_rng);
      if (values.size() != n_outputs) {
        throw Error("bootstrap pipeline returned wrong output count");
      }
      for (std::size_t k = 0; k < n_outputs; ++k) {
        draws[k].push_back(values[k]);
      }
    } catch (const EstimationError&) {
      ++n_failed;
    }
  }
  if (5 * n_failed > n_resamples) {
    throw EstimationError("bootstrap: more than 20% of resamples failed");
  }
  std::vector<BootstrapResult> out(n_outputs);
  for (std::size_t k = 0; k < n_outputs; ++k) {
    auto& xs = draws[k];
    BootstrapResult& r = out[k];
    r.n_failed = n_failed;
    r.variance = xs.size() >= 2 ? stats::sample_variance(xs) : 0.0;
    std::sort(xs.begin(), xs.end());
    r.ci_low = stats::nearest_rank_quantile(xs, 0.025);
    r.ci_high = stats::nearest_rank_quantile(xs, 0.975);
  }
  return out;
}

BootstrapResult bootstrap_ci(
    const TrialDataset& dataset,
    const std::function<double(const TrialDataset&, Rng&)>& pipeline,
    std::size_t n_resamples, Rng& rng) {
  auto wrapped = [&pipeline](const TrialDataset& d, Rng& r) {
    return std::vector<double>{pipeline(d, r)};
  };
  return bootstrap_ci_multi(dataset, wrapped, 1, n_resamples, rng)[0];
}

}  // namespace dichot
