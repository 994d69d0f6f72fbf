#include "dichot/scenario.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "dichot/csv.hpp"

namespace dichot {

std::string to_string(Family f) {
  switch (f) {
    case Family::mvnormal: return "mvnormal";
    case Family::mvt3: return "mvt3";
    case Family::mvlognormal: return "mvlognormal";
    case Family::empirical: return "empirical";
  }
  return "?";
}

std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::none: return "none";
    case Mechanism::mcar: return "mcar";
    case Mechanism::mar: return "mar";
  }
  return "?";
}

DropoutConfig DropoutConfig::defaults(Mechanism mechanism) {
  DropoutConfig c;
  c.mechanism = mechanism;
  c.conditional_retention = {0.97, 0.969, 0.958, 0.967, 0.977};
  c.mar_base = {0.99, 0.969, 0.958, 0.967, 0.977};
  c.mar_coeff_trt = {0.12, 0.5, 0.51, 0.52, 0.53};
  c.mar_coeff_ctl = {0.14, 0.7, 0.72, 0.74, 0.76};
  return c;
}

void DropoutConfig::validate(std::size_t n_visits) const {
  if (mechanism == Mechanism::none) return;
  const std::size_t steps = n_visits - 1;
  auto check_probs = [&](const std::vector<double>& v, const char* name) {
    if (v.size() != steps) {
      throw ConfigError(std::string(name) + " must have length " +
                        std::to_string(steps));
    }
    for (double p : v) {
      if (!(p > 0.0 && p <= 1.0)) {
        throw ConfigError(std::string(name) + " entries must lie in (0, 1]");
      }
    }
  };
  if (mechanism == Mechanism::mcar) {
    check_probs(conditional_retention, "conditional_retention");
  } else {
    check_probs(mar_base, "mar_base");
    if (mar_coeff_trt.size() != steps || mar_coeff_ctl.size() != steps) {
      throw ConfigError("mar_coeff_trt / mar_coeff_ctl must have length " +
                        std::to_string(steps));
    }
  }
}

double ScenarioSpec::treated_probability() const {
  const double t = randomization_ratio.first;
  const double c = randomization_ratio.second;
  return t / (t + c);
}

void ScenarioSpec::validate() const {
  const std::size_t J = mu0.size();
  if (J < 2) throw ConfigError("mu0 must have length >= 2");
  if (mu1.size() != J) throw ConfigError("mu0 and mu1 must have equal length");
  const bool parametric = family != Family::empirical;
  if (parametric) {
    if (sigma.size() != J) {
      throw ConfigError("sigma must have the same length as mu0");
    }
    for (double s : sigma) {
      if (!(s > 0.0)) throw ConfigError("sigma entries must be positive");
    }
    if (!(corr_decay > 0.0 && corr_decay < 1.0)) {
      throw ConfigError("corr_decay must lie in (0, 1)");
    }
  } else if (!sigma.empty() && sigma.size() != J) {
    throw ConfigError("sigma must be empty or match mu0 length");
  }
  if ((n_per_arm == 0) == (n_total == 0)) {
    throw ConfigError("specify exactly one of n_per_arm or n_total");
  }
  if (randomization_ratio.first <= 0 || randomization_ratio.second <= 0) {
    throw ConfigError("randomization_ratio entries must be positive");
  }
  if (!std::isfinite(threshold.lambda)) {
    throw ConfigError("threshold lambda must be finite");
  }
  missingness.validate(J);
  if (family == Family::empirical) {
    if (!source_data.has_value()) {
      throw ConfigError("empirical family requires source_data");
    }
    if (source_data->n_visits() != J) {
      throw ConfigError("source_data visit count does not match mu0 length");
    }
    if (!source_data->complete()) {
      throw ConfigError("empirical source_data must be complete");
    }
  }
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in " + context);
    }
  }
}

std::vector<double> get_double_vector(const json& j, const std::string& key) {
  if (!j.at(key).is_array()) {
    throw ConfigError("'" + key + "' must be an array of numbers");
  }
  std::vector<double> v;
  for (const auto& x : j.at(key)) {
    if (!x.is_number()) {
      throw ConfigError("'" + key + "' must be an array of numbers");
    }
    v.push_back(x.get<double>());
  }
  return v;
}

Threshold threshold_from_json(const json& j) {
  reject_unknown_keys(j, {"lambda", "comparison"}, "threshold");
  Threshold t;
  t.lambda = j.at("lambda").get<double>();
  if (j.contains("comparison")) {
    const auto s = j.at("comparison").get<std::string>();
    if (s == "strict_less") {
      t.comparison = Comparison::strict_less;
    } else if (s == "less_or_equal") {
      t.comparison = Comparison::less_or_equal;
    } else {
      throw ConfigError("comparison must be strict_less or less_or_equal");
    }
  }
  return t;
}

DropoutConfig dropout_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"mechanism", "conditional_retention", "mar_base",
                       "mar_coeff_trt", "mar_coeff_ctl"},
                      "missingness");
  const auto mech = j.at("mechanism").get<std::string>();
  Mechanism m;
  if (mech == "none") {
    m = Mechanism::none;
  } else if (mech == "mcar") {
    m = Mechanism::mcar;
  } else if (mech == "mar") {
    m = Mechanism::mar;
  } else {
    throw ConfigError("mechanism must be none, mcar, or mar");
  }
  DropoutConfig c = DropoutConfig::defaults(m);
  if (j.contains("conditional_retention")) {
    c.conditional_retention = get_double_vector(j, "conditional_retention");
  }
  if (j.contains("mar_base")) c.mar_base = get_double_vector(j, "mar_base");
  if (j.contains("mar_coeff_trt")) {
    c.mar_coeff_trt = get_double_vector(j, "mar_coeff_trt");
  }
  if (j.contains("mar_coeff_ctl")) {
    c.mar_coeff_ctl = get_double_vector(j, "mar_coeff_ctl");
  }
  return c;
}

}  // namespace

ScenarioSpec scenario_from_json(const nlohmann::json& j,
                                const std::filesystem::path& base_dir) {
  reject_unknown_keys(j,
                      {"family", "mu0", "mu1", "sigma", "corr_decay",
                       "n_per_arm", "n_total", "randomization_ratio",
                       "threshold", "missingness", "source_data"},
                      "scenario");
  ScenarioSpec spec;
  const auto fam = j.at("family").get<std::string>();
  if (fam == "mvnormal") {
    spec.family = Family::mvnormal;
  } else if (fam == "mvt3") {
    spec.family = Family::mvt3;
  } else if (fam == "mvlognormal") {
    spec.family = Family::mvlognormal;
  } else if (fam == "empirical") {
    spec.family = Family::empirical;
  } else {
    throw ConfigError("unknown family '" + fam + "'");
  }
  spec.mu0 = get_double_vector(j, "mu0");
  spec.mu1 = get_double_vector(j, "mu1");
  if (j.contains("sigma")) spec.sigma = get_double_vector(j, "sigma");
  if (j.contains("corr_decay")) {
    spec.corr_decay = j.at("corr_decay").get<double>();
  }
  if (j.contains("n_per_arm")) {
    spec.n_per_arm = j.at("n_per_arm").get<std::size_t>();
  }
  if (j.contains("n_total")) spec.n_total = j.at("n_total").get<std::size_t>();
  if (j.contains("randomization_ratio")) {
    const auto& r = j.at("randomization_ratio");
    if (!r.is_array() || r.size() != 2) {
      throw ConfigError("randomization_ratio must be [treated, control]");
    }
    spec.randomization_ratio = {r[0].get<int>(), r[1].get<int>()};
  }
  spec.threshold = threshold_from_json(j.at("threshold"));
  if (j.contains("missingness")) {
    spec.missingness = dropout_from_json(j.at("missingness"));
  }
  if (j.contains("source_data")) {
    spec.source_path = j.at("source_data").get<std::string>();
    std::filesystem::path p(spec.source_path);
    if (p.is_relative()) p = base_dir / p;
    spec.source_data = read_wide_csv(p);
  }
  spec.validate();
  return spec;
}

nlohmann::json scenario_to_json(const ScenarioSpec& spec) {
  json j;
  j["family"] = to_string(spec.family);
  j["mu0"] = spec.mu0;
  j["mu1"] = spec.mu1;
  if (!spec.sigma.empty()) j["sigma"] = spec.sigma;
  j["corr_decay"] = spec.corr_decay;
  if (spec.n_per_arm > 0) j["n_per_arm"] = spec.n_per_arm;
  if (spec.n_total > 0) j["n_total"] = spec.n_total;
  j["randomization_ratio"] = {spec.randomization_ratio.first,
                              spec.randomization_ratio.second};
  j["threshold"] = {
      {"lambda", spec.threshold.lambda},
      {"comparison", spec.threshold.comparison == Comparison::strict_less
                         ? "strict_less"
                         : "less_or_equal"}};
  json m;
  m["mechanism"] = to_string(spec.missingness.mechanism);
  if (spec.missingness.mechanism == Mechanism::mcar) {
    m["conditional_retention"] = spec.missingness.conditional_retention;
  } else if (spec.missingness.mechanism == Mechanism::mar) {
    m["mar_base"] = spec.missingness.mar_base;
    m["mar_coeff_trt"] = spec.missingness.mar_coeff_trt;
    m["mar_coeff_ctl"] = spec.missingness.mar_coeff_ctl;
  }
  j["missingness"] = m;
  if (!spec.source_path.empty()) j["source_data"] = spec.source_path;
  return j;
}

}  // namespace dichot
