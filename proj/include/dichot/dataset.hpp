#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dichot/errors.hpp"

namespace dichot {

// Visits are indexed 0..J-1 internally; visit 0 is baseline. The CSV format
// and all user-facing labels use the 1-based names y1..yJ.

struct SubjectRecord {
  std::string id;
  int arm = 0;  // 0 = control, 1 = experimental
  std::vector<std::optional<double>> outcomes;  // length J; slot 0 never missing
};

enum class Comparison { strict_less, less_or_equal };

/// Clinical threshold turning a continuous value into a success indicator.
/// Lower outcome values are the favorable direction.
struct Threshold {
  double lambda = 7.0;
  Comparison comparison = Comparison::strict_less;

  bool success(double value) const {
    return comparison == Comparison::strict_less ? value < lambda
                                                 : value <= lambda;
  }
};

/// Wide-format longitudinal dataset with monotone missingness.
///
/// Invariants, enforced at construction:
///   - every subject has exactly J outcome slots and an arm in {0, 1}
///   - baseline (slot 0) is never missing
///   - missingness is monotone: a missing visit implies all later ones missing
class TrialDataset {
 public:
  TrialDataset(std::vector<SubjectRecord> subjects, std::size_t n_visits);

  const std::vector<SubjectRecord>& subjects() const { return subjects_; }
  std::size_t n_visits() const { return n_visits_; }
  std::size_t n_subjects() const { return subjects_.size(); }

  /// Number of leading observed visits for subject i (J when complete).
  std::size_t observed_visits(std::size_t i) const;

  bool complete() const;

  /// Fraction of subjects missing the given 0-based visit.
  double missing_fraction(std::size_t visit) const;

 private:
  std::vector<SubjectRecord> subjects_;
  std::size_t n_visits_ = 0;
};

/// Dichotomized view of a dataset: optional 0/1 per (subject, visit) with the
/// same missingness mask as the source.
struct BinaryPanel {
  std::size_t n_rows = 0;
  std::size_t n_visits = 0;
  std::vector<std::optional<std::uint8_t>> cells;  // row-major

  std::optional<std::uint8_t>& at(std::size_t i, std::size_t j) {
    return cells[i * n_visits + j];
  }
  const std::optional<std::uint8_t>& at(std::size_t i, std::size_t j) const {
    return cells[i * n_visits + j];
  }
};

/// Apply the threshold to every observed cell; missing maps to missing.
BinaryPanel dichotomize(const TrialDataset& dataset, const Threshold& threshold);

}  // namespace dichot
