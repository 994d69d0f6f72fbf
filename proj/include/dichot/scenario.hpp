#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dichot/dataset.hpp"

namespace dichot {

enum class Family { mvnormal, mvt3, mvlognormal, empirical };
enum class Mechanism { none, mcar, mar };

std::string to_string(Family f);
std::string to_string(Mechanism m);

/// Monotone dropout configuration. The retention/coefficient vectors have one
/// entry per post-baseline visit (length J-1); the shipped defaults target
/// cumulative missing rates of roughly 3/6/10/13/15% over five visits.
struct DropoutConfig {
  Mechanism mechanism = Mechanism::none;
  std::vector<double> conditional_retention;  // MCAR
  std::vector<double> mar_base;
  std::vector<double> mar_coeff_trt;
  std::vector<double> mar_coeff_ctl;

  /// Default constants for a six-visit schedule.
  static DropoutConfig defaults(Mechanism mechanism);

  void validate(std::size_t n_visits) const;
};

/// Full description of a data-generating process.
struct ScenarioSpec {
  Family family = Family::mvnormal;
  std::vector<double> mu0;
  std::vector<double> mu1;
  std::vector<double> sigma;
  double corr_decay = 0.8;
  // Exactly one sizing mode: fixed per-arm counts, or a total with a
  // treated:control randomization ratio drawn per subject.
  std::size_t n_per_arm = 0;
  std::size_t n_total = 0;
  std::pair<int, int> randomization_ratio{1, 1};
  Threshold threshold;
  DropoutConfig missingness;
  std::optional<TrialDataset> source_data;  // empirical family only
  std::string source_path;

  std::size_t n_visits() const { return mu0.size(); }
  double treated_probability() const;
  void validate() const;
};

/// True estimand values at the final visit.
struct TrueValues {
  double p0 = 0;
  double p1 = 0;
  double rd = 0;
  double log_or = 0;
  std::size_t visit = 0;  // 1-based
};

/// Parse a scenario from JSON. Unknown keys raise ConfigError naming the key.
/// `base_dir` resolves a relative source_data path.
ScenarioSpec scenario_from_json(const nlohmann::json& j,
                                const std::filesystem::path& base_dir);

nlohmann::json scenario_to_json(const ScenarioSpec& spec);

}  // namespace dichot
