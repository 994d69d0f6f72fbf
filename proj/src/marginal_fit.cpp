#include "dichot/marginal_fit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "dichot/links.hpp"

namespace dichot {

namespace {

constexpr double kProbFloor = 1e-10;

double clamp_prob(double p) {
  return std::min(1.0 - kProbFloor, std::max(kProbFloor, p));
}

struct Cluster {
  Eigen::Index begin = 0;  // rows are grouped by subject in DesignData
  Eigen::Index size = 0;
};

std::vector<Cluster> collect_clusters(const DesignData& d) {
  std::vector<Cluster> out;
  const auto n = static_cast<Eigen::Index>(d.subject.size());
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j < n && d.subject[j] == d.subject[i]) ++j;
    out.push_back({i, j - i});
    i = j;
  }
  return out;
}

void check_separation(const Eigen::VectorXd& beta, double threshold) {
  if (beta.lpNorm<Eigen::Infinity>() > threshold) {
    throw SeparationError(
        "separation detected: |beta| exceeded " + std::to_string(threshold) +
        " on the logit scale");
  }
}

double binomial_deviance(const DesignData& d, const Eigen::VectorXd& beta) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    const double mu = clamp_prob(expit(d.X.row(i).dot(beta)));
    dev -= 2.0 * (d.y(i) * std::log(mu) + (1.0 - d.y(i)) * std::log(1.0 - mu));
  }
  return dev;
}

/// Plain logistic maximum likelihood by Newton iterations with deviance
/// step-halving; equals the independence estimating equations. With the
/// halving, a coefficient passing the threshold means the likelihood keeps
/// improving as |beta| grows, i.e. genuine separation.
Eigen::VectorXd fit_independence(const DesignData& d, const ModelSpec& spec,
                                 int& n_iter) {
  const Eigen::Index p = d.X.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double deviance = binomial_deviance(d, beta);
  for (int it = 1; it <= spec.max_iter; ++it) {
    Eigen::VectorXd mu = (d.X * beta).unaryExpr([](double e) {
      return clamp_prob(expit(e));
    });
    Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    Eigen::MatrixXd h = d.X.transpose() * w.asDiagonal() * d.X;
    Eigen::VectorXd g = d.X.transpose() * (d.y - mu);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success) {
      throw EstimationError("independence fit: information matrix not PD");
    }
    Eigen::VectorXd step = ldlt.solve(g);
    Eigen::VectorXd candidate = beta + step;
    double new_deviance = binomial_deviance(d, candidate);
    for (int half = 0; half < 30 && new_deviance > deviance + 1e-10; ++half) {
      step *= 0.5;
      candidate = beta + step;
      new_deviance = binomial_deviance(d, candidate);
    }
    beta = candidate;
    deviance = new_deviance;
    check_separation(beta, spec.separation_threshold);
    if (step.lpNorm<Eigen::Infinity>() < spec.tol) {
      n_iter = it;
      return beta;
    }
  }
  throw ConvergenceError("independence fit did not converge in " +
                         std::to_string(spec.max_iter) + " iterations");
}

/// Pairwise-complete moment estimate of the working correlation: for each
/// visit pair, the non-centered correlation of Pearson residuals over the
/// subjects observed at both visits.
Eigen::MatrixXd estimate_working_corr(const DesignData& d,
                                      const std::vector<Cluster>& clusters,
                                      const Eigen::VectorXd& beta) {
  const auto m = static_cast<Eigen::Index>(d.n_visits - 1);
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd sq_j = Eigen::MatrixXd::Zero(m, m);  // sum e_j^2 on pair set
  Eigen::MatrixXd sq_k = Eigen::MatrixXd::Zero(m, m);

  std::vector<double> resid(m);
  std::vector<bool> seen(m);
  for (const auto& c : clusters) {
    std::fill(seen.begin(), seen.end(), false);
    for (Eigen::Index r = c.begin; r < c.begin + c.size; ++r) {
      const double mu = clamp_prob(expit(d.X.row(r).dot(beta)));
      const auto v = d.visit[r];
      resid[v] = (d.y(r) - mu) / std::sqrt(mu * (1.0 - mu));
      seen[v] = true;
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!seen[j]) continue;
      for (Eigen::Index k = j + 1; k < m; ++k) {
        if (!seen[k]) continue;
        num(j, k) += resid[j] * resid[k];
        sq_j(j, k) += resid[j] * resid[j];
        sq_k(j, k) += resid[k] * resid[k];
      }
    }
  }
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = j + 1; k < m; ++k) {
      const double denom = std::sqrt(sq_j(j, k) * sq_k(j, k));
      const double r = denom > 0.0 ? num(j, k) / denom : 0.0;
      corr(j, k) = r;
      corr(k, j) = r;
    }
  }
  return corr;
}

struct GeeMatrices {
  Eigen::MatrixXd bread;
  Eigen::VectorXd score;
  Eigen::MatrixXd meat;
};

/// Assemble bread, total score, and meat at the current beta for the given
/// working correlation (identity if r is 1x1-compatible identity).
GeeMatrices assemble(const DesignData& d, const std::vector<Cluster>& clusters,
                     const Eigen::VectorXd& beta, const Eigen::MatrixXd& r) {
  const Eigen::Index p = d.X.cols();
  GeeMatrices g{Eigen::MatrixXd::Zero(p, p), Eigen::VectorXd::Zero(p),
                Eigen::MatrixXd::Zero(p, p)};
  for (const auto& c : clusters) {
    const Eigen::Index ni = c.size;
    Eigen::MatrixXd dx(ni, p);   // A^{1/2} X_i
    Eigen::VectorXd rs(ni);      // A^{-1/2} (y_i - mu_i)
    Eigen::MatrixXd ro(ni, ni);  // working correlation on observed visits
    for (Eigen::Index a = 0; a < ni; ++a) {
      const Eigen::Index row = c.begin + a;
      const double mu = clamp_prob(expit(d.X.row(row).dot(beta)));
      const double sa = std::sqrt(mu * (1.0 - mu));
      dx.row(a) = d.X.row(row) * sa;
      rs(a) = (d.y(row) - mu) / sa;
      for (Eigen::Index b = 0; b < ni; ++b) {
        ro(a, b) = r(d.visit[c.begin + a], d.visit[c.begin + b]);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(ro);
    if (llt.info() != Eigen::Success) {
      throw EstimationError("working correlation submatrix not PD");
    }
    const Eigen::MatrixXd ri_dx = llt.solve(dx);
    g.bread.noalias() += dx.transpose() * ri_dx;
    const Eigen::VectorXd ui = ri_dx.transpose() * rs;
    g.score += ui;
    g.meat.noalias() += ui * ui.transpose();
  }
  return g;
}

void finalize_covariances(const DesignData& d,
                          const std::vector<Cluster>& clusters,
                          const Eigen::MatrixXd& r, FitResult& fit) {
  const GeeMatrices g = assemble(d, clusters, fit.beta, r);
  Eigen::LDLT<Eigen::MatrixXd> bread(g.bread);
  if (bread.info() != Eigen::Success) {
    throw EstimationError("bread matrix not PD at the solution");
  }
  const Eigen::Index p = d.X.cols();
  const Eigen::MatrixXd binv =
      bread.solve(Eigen::MatrixXd::Identity(p, p));
  fit.cov_model = 0.5 * (binv + binv.transpose());
  const Eigen::MatrixXd sw = binv * g.meat * binv;
  fit.cov_sandwich = 0.5 * (sw + sw.transpose());
  fit.working_corr = r;
}

}  // namespace

DesignData build_design(const BinaryPanel& panel, const TrialDataset& dataset) {
  if (panel.n_rows != dataset.n_subjects() ||
      panel.n_visits != dataset.n_visits()) {
    throw EstimationError("build_design: panel does not match dataset");
  }
  const std::size_t J = dataset.n_visits();
  // intercept + baseline + (J-2) visit dummies + treatment + (J-2) interactions
  const std::size_t p = 2 * J - 1;

  std::size_t n_rows = 0;
  for (std::size_t i = 0; i < panel.n_rows; ++i) {
    for (std::size_t j = 1; j < J; ++j) {
      if (panel.at(i, j).has_value()) ++n_rows;
    }
  }
  if (n_rows == 0) {
    throw EstimationError("build_design: no observed post-baseline rows");
  }

  DesignData d;
  d.X = Eigen::MatrixXd::Zero(n_rows, p);
  d.y.resize(n_rows);
  d.subject.reserve(n_rows);
  d.visit.reserve(n_rows);
  d.n_visits = J;
  d.n_subjects = dataset.n_subjects();

  Eigen::Index row = 0;
  for (std::size_t i = 0; i < panel.n_rows; ++i) {
    const auto& subj = dataset.subjects()[i];
    for (std::size_t j = 1; j < J; ++j) {
      if (!panel.at(i, j).has_value()) continue;
      d.X(row, 0) = 1.0;
      d.X(row, 1) = *subj.outcomes[0];
      if (j >= 2) d.X(row, 2 + j - 2) = 1.0;
      d.X(row, J) = subj.arm;
      if (j >= 2) d.X(row, J + 1 + j - 2) = subj.arm;
      d.y(row) = *panel.at(i, j);
      d.subject.push_back(static_cast<std::int32_t>(i));
      d.visit.push_back(static_cast<std::int32_t>(j - 1));
      ++row;
    }
  }
  return d;
}

FitResult fit_marginal_logistic(const DesignData& design,
                                const ModelSpec& spec) {
  if (design.X.rows() == 0) {
    throw EstimationError("fit: empty design");
  }
  if (design.X.rows() < design.X.cols()) {
    throw RankError("fit: fewer rows than parameters");
  }
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
    if (qr.rank() < design.X.cols()) {
      throw RankError("fit: design matrix is rank deficient");
    }
  }
  const auto clusters = collect_clusters(design);
  const auto m = static_cast<Eigen::Index>(design.n_visits - 1);

  FitResult fit;
  int indep_iters = 0;
  const Eigen::VectorXd beta_indep =
      fit_independence(design, spec, indep_iters);

  const bool single_visit = m <= 1;
  if (spec.working == WorkingStructure::independence || single_visit) {
    fit.beta = beta_indep;
    fit.converged = true;
    fit.used_fallback = false;
    fit.n_iter = indep_iters;
    finalize_covariances(design, clusters, Eigen::MatrixXd::Identity(m, m),
                         fit);
    return fit;
  }

  // Unstructured loop: re-estimate R from Pearson residuals, then one Fisher
  // scoring step, until the step is below tolerance.
  Eigen::VectorXd beta = beta_indep;
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(m, m);
  bool converged = false;
  bool pd_failure = false;
  int iters = 0;
  for (int it = 1; it <= spec.max_iter; ++it) {
    r = estimate_working_corr(design, clusters, beta);
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success) {
      pd_failure = true;
      break;
    }
    GeeMatrices g;
    try {
      g = assemble(design, clusters, beta, r);
    } catch (const EstimationError&) {
      pd_failure = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> bread(g.bread);
    if (bread.info() != Eigen::Success) {
      pd_failure = true;
      break;
    }
    const Eigen::VectorXd step = bread.solve(g.score);
    beta += step;
    if (beta.lpNorm<Eigen::Infinity>() > spec.separation_threshold) {
      // The estimating-equation iteration wandered off although the maximum
      // likelihood fit was fine; treat as non-convergence, not separation.
      break;
    }
    if (step.lpNorm<Eigen::Infinity>() < spec.tol) {
      converged = true;
      iters = it;
      break;
    }
  }

  if (converged && !pd_failure) {
    fit.beta = beta;
    fit.converged = true;
    fit.used_fallback = false;
    fit.n_iter = iters;
    finalize_covariances(design, clusters, r, fit);
    return fit;
  }

  // Fallback: independence working structure (already converged above).
  fit.beta = beta_indep;
  fit.converged = true;
  fit.used_fallback = true;
  fit.n_iter = indep_iters;
  finalize_covariances(design, clusters, Eigen::MatrixXd::Identity(m, m), fit);
  return fit;
}

double predict_prob(const FitResult& fit, const Eigen::VectorXd& row) {
  if (row.size() != fit.beta.size()) {
    throw EstimationError("predict_prob: row dimension mismatch");
  }
  return expit(row.dot(fit.beta));
}

}  // namespace dichot
