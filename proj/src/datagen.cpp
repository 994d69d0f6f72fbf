#include "dichot/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "dichot/links.hpp"
#include "dichot/stats.hpp"

namespace dichot {

namespace {

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(std::string(what) + " is not positive definite");
  }
  return llt.matrixL();
}

const std::vector<double>& arm_means(const ScenarioSpec& spec, int arm) {
  return arm == 0 ? spec.mu0 : spec.mu1;
}

}  // namespace

Eigen::MatrixXd corr_matrix(std::size_t n_visits, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw Error("corr_matrix: rho must lie in (0, 1)");
  }
  const auto J = static_cast<Eigen::Index>(n_visits);
  Eigen::MatrixXd r(J, J);
  for (Eigen::Index j = 0; j < J; ++j) {
    for (Eigen::Index k = 0; k < J; ++k) {
      r(j, k) = std::pow(rho, std::abs(static_cast<double>(j - k)));
    }
  }
  return r;
}

LognormalParams lognormal_match(double mean, double sd) {
  if (!(mean > 0.0)) {
    throw Error("log-normal moment matching requires a positive mean");
  }
  const double s2 = std::log1p((sd / mean) * (sd / mean));
  return {std::log(mean) - 0.5 * s2, std::sqrt(s2)};
}

double lognormal_latent_corr(double target, double sl_j, double sl_k) {
  const double a = std::sqrt(std::expm1(sl_j * sl_j) * std::expm1(sl_k * sl_k));
  return std::log1p(target * a) / (sl_j * sl_k);
}

Eigen::MatrixXd sample_mvnormal(const ScenarioSpec& spec, std::size_t n,
                                int arm, Rng& rng) {
  const std::size_t J = spec.n_visits();
  const auto& mu = arm_means(spec, arm);
  Eigen::MatrixXd cov = corr_matrix(J, spec.corr_decay);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t k = 0; k < J; ++k) {
      cov(j, k) *= spec.sigma[j] * spec.sigma[k];
    }
  }
  const Eigen::MatrixXd L = cholesky_lower(cov, "covariance");
  Eigen::MatrixXd out(n, J);
  Eigen::VectorXd z(J);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < J; ++j) z(j) = rng.normal();
    const Eigen::VectorXd x = L * z;
    for (std::size_t j = 0; j < J; ++j) out(i, j) = mu[j] + x(j);
  }
  return out;
}

Eigen::MatrixXd sample_mvt3(const ScenarioSpec& spec, std::size_t n, int arm,
                            Rng& rng) {
  const std::size_t J = spec.n_visits();
  const auto& mu = arm_means(spec, arm);
  // Scale matrix Sigma * (nu-2)/nu with nu = 3, so the marginal SD equals
  // sigma_j rather than the raw scale parameter.
  Eigen::MatrixXd scale = corr_matrix(J, spec.corr_decay);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t k = 0; k < J; ++k) {
      scale(j, k) *= spec.sigma[j] * spec.sigma[k] / 3.0;
    }
  }
  const Eigen::MatrixXd L = cholesky_lower(scale, "scale matrix");
  Eigen::MatrixXd out(n, J);
  Eigen::VectorXd z(J);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < J; ++j) z(j) = rng.normal();
    const double w = rng.chi_squared(3.0);
    const double t = std::sqrt(3.0 / w);
    const Eigen::VectorXd x = L * z;
    for (std::size_t j = 0; j < J; ++j) out(i, j) = mu[j] + t * x(j);
  }
  return out;
}

Eigen::MatrixXd sample_mvlognormal(const ScenarioSpec& spec, std::size_t n,
                                   int arm, Rng& rng) {
  const std::size_t J = spec.n_visits();
  const auto& mu = arm_means(spec, arm);
  std::vector<LognormalParams> params(J);
  for (std::size_t j = 0; j < J; ++j) {
    params[j] = lognormal_match(mu[j], spec.sigma[j]);
  }
  // Latent Gaussian correlation chosen so the original-scale correlation hits
  // corr_decay^|j-k|.
  Eigen::MatrixXd latent(J, J);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t k = 0; k < J; ++k) {
      if (j == k) {
        latent(j, k) = 1.0;
      } else {
        const double target =
            std::pow(spec.corr_decay,
                     std::abs(static_cast<double>(j) - static_cast<double>(k)));
        latent(j, k) = lognormal_latent_corr(target, params[j].sigma_log,
                                             params[k].sigma_log);
      }
    }
  }
  const Eigen::MatrixXd L = cholesky_lower(latent, "latent correlation");
  Eigen::MatrixXd out(n, J);
  Eigen::VectorXd z(J);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < J; ++j) z(j) = rng.normal();
    const Eigen::VectorXd x = L * z;
    for (std::size_t j = 0; j < J; ++j) {
      out(i, j) = std::exp(params[j].mu_log + params[j].sigma_log * x(j));
    }
  }
  return out;
}

namespace {

Eigen::MatrixXd sample_family(const ScenarioSpec& spec, std::size_t n, int arm,
                              Rng& rng) {
  switch (spec.family) {
    case Family::mvnormal: return sample_mvnormal(spec, n, arm, rng);
    case Family::mvt3: return sample_mvt3(spec, n, arm, rng);
    case Family::mvlognormal: return sample_mvlognormal(spec, n, arm, rng);
    case Family::empirical: break;
  }
  throw Error("sample_family: not a parametric family");
}

}  // namespace

TrialDataset sample_parametric_trial(const ScenarioSpec& spec, Rng& rng) {
  const std::size_t J = spec.n_visits();
  std::vector<int> arms;
  if (spec.n_per_arm > 0) {
    arms.assign(spec.n_per_arm, 0);
    arms.insert(arms.end(), spec.n_per_arm, 1);
  } else {
    arms.resize(spec.n_total);
    const double p = spec.treated_probability();
    for (auto& a : arms) a = rng.bernoulli(p) ? 1 : 0;
  }
  const auto n0 =
      static_cast<std::size_t>(std::count(arms.begin(), arms.end(), 0));
  const std::size_t n1 = arms.size() - n0;
  const Eigen::MatrixXd m0 = sample_family(spec, n0, 0, rng);
  const Eigen::MatrixXd m1 = sample_family(spec, n1, 1, rng);

  std::vector<SubjectRecord> subjects(arms.size());
  std::size_t i0 = 0, i1 = 0;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    SubjectRecord& s = subjects[i];
    s.id = "s" + std::to_string(i + 1);
    s.arm = arms[i];
    s.outcomes.resize(J);
    const Eigen::MatrixXd& m = arms[i] == 0 ? m0 : m1;
    const std::size_t row = arms[i] == 0 ? i0++ : i1++;
    for (std::size_t j = 0; j < J; ++j) {
      s.outcomes[j] = m(static_cast<Eigen::Index>(row),
                        static_cast<Eigen::Index>(j));
    }
  }
  return TrialDataset(std::move(subjects), J);
}

std::pair<std::vector<double>, std::vector<double>> empirical_shifts(
    const ScenarioSpec& spec) {
  if (!spec.source_data.has_value()) {
    throw Error("empirical_shifts: scenario has no source_data");
  }
  const TrialDataset& src = *spec.source_data;
  const std::size_t J = src.n_visits();
  std::vector<double> mean(J, 0.0);
  for (const auto& s : src.subjects()) {
    for (std::size_t j = 0; j < J; ++j) mean[j] += *s.outcomes[j];
  }
  for (auto& m : mean) m /= static_cast<double>(src.n_subjects());
  std::vector<double> shift0(J), shift1(J);
  for (std::size_t j = 0; j < J; ++j) {
    shift0[j] = spec.mu0[j] - mean[j];
    shift1[j] = spec.mu1[j] - mean[j];
  }
  return {shift0, shift1};
}

TrialDataset resample_empirical(const ScenarioSpec& spec, Rng& rng) {
  if (!spec.source_data.has_value() || spec.source_data->n_subjects() == 0) {
    throw Error("resample_empirical: empty source");
  }
  if (spec.n_total == 0) {
    throw Error("resample_empirical: n_total required");
  }
  const TrialDataset& src = *spec.source_data;
  const std::size_t J = src.n_visits();
  const auto [shift0, shift1] = empirical_shifts(spec);
  const double p_trt = spec.treated_probability();

  std::vector<SubjectRecord> subjects(spec.n_total);
  for (std::size_t i = 0; i < spec.n_total; ++i) {
    const std::size_t pick = rng.index(src.n_subjects());
    const int arm = rng.bernoulli(p_trt) ? 1 : 0;
    const auto& shift = arm == 1 ? shift1 : shift0;
    SubjectRecord& s = subjects[i];
    s.id = "r" + std::to_string(i + 1);
    s.arm = arm;
    s.outcomes.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
      s.outcomes[j] = *src.subjects()[pick].outcomes[j] + shift[j];
    }
  }
  return TrialDataset(std::move(subjects), J);
}

TrialDataset sample_trial(const ScenarioSpec& spec, Rng& rng) {
  return spec.family == Family::empirical ? resample_empirical(spec, rng)
                                          : sample_parametric_trial(spec, rng);
}

TrueValues true_values(const ScenarioSpec& spec) {
  const std::size_t J = spec.n_visits();
  const double lambda = spec.threshold.lambda;
  TrueValues tv;
  tv.visit = J;
  switch (spec.family) {
    case Family::mvnormal:
      tv.p0 = stats::normal_cdf((lambda - spec.mu0[J - 1]) / spec.sigma[J - 1]);
      tv.p1 = stats::normal_cdf((lambda - spec.mu1[J - 1]) / spec.sigma[J - 1]);
      break;
    case Family::mvt3: {
      const double scale = spec.sigma[J - 1] / std::sqrt(3.0);
      tv.p0 = stats::t3_cdf((lambda - spec.mu0[J - 1]) / scale);
      tv.p1 = stats::t3_cdf((lambda - spec.mu1[J - 1]) / scale);
      break;
    }
    case Family::mvlognormal: {
      if (!(lambda > 0.0)) {
        throw ConfigError("log-normal family needs a positive threshold");
      }
      const auto p0 = lognormal_match(spec.mu0[J - 1], spec.sigma[J - 1]);
      const auto p1 = lognormal_match(spec.mu1[J - 1], spec.sigma[J - 1]);
      tv.p0 = stats::normal_cdf((std::log(lambda) - p0.mu_log) / p0.sigma_log);
      tv.p1 = stats::normal_cdf((std::log(lambda) - p1.mu_log) / p1.sigma_log);
      break;
    }
    case Family::empirical: {
      const auto [shift0, shift1] = empirical_shifts(spec);
      const TrialDataset& src = *spec.source_data;
      double s0 = 0, s1 = 0;
      for (const auto& s : src.subjects()) {
        const double y = *s.outcomes[J - 1];
        s0 += spec.threshold.success(y + shift0[J - 1]) ? 1.0 : 0.0;
        s1 += spec.threshold.success(y + shift1[J - 1]) ? 1.0 : 0.0;
      }
      tv.p0 = s0 / static_cast<double>(src.n_subjects());
      tv.p1 = s1 / static_cast<double>(src.n_subjects());
      break;
    }
  }
  tv.rd = tv.p1 - tv.p0;
  tv.log_or = (tv.p1 == tv.p0) ? 0.0 : logit(tv.p1) - logit(tv.p0);
  return tv;
}

}  // namespace dichot
