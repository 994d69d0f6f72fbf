#include "dichot/dataset.hpp"

#include <utility>

namespace dichot {

TrialDataset::TrialDataset(std::vector<SubjectRecord> subjects,
                           std::size_t n_visits)
    : subjects_(std::move(subjects)), n_visits_(n_visits) {
  if (n_visits_ < 2) {
    throw ValidationError("dataset needs at least two visits (baseline + 1)");
  }
  if (subjects_.empty()) {
    throw ValidationError("no subjects");
  }
  for (const auto& s : subjects_) {
    if (s.arm != 0 && s.arm != 1) {
      throw ValidationError("subject " + s.id + ": arm must be 0 or 1");
    }
    if (s.outcomes.size() != n_visits_) {
      throw ValidationError("subject " + s.id + ": expected " +
                            std::to_string(n_visits_) + " outcome slots");
    }
    if (!s.outcomes[0].has_value()) {
      throw ValidationError("subject " + s.id + ": baseline is missing");
    }
    bool seen_missing = false;
    for (std::size_t j = 0; j < n_visits_; ++j) {
      if (!s.outcomes[j].has_value()) {
        seen_missing = true;
      } else if (seen_missing) {
        throw ValidationError("subject " + s.id +
                              ": non-monotone missingness at visit y" +
                              std::to_string(j + 1));
      }
    }
  }
}

std::size_t TrialDataset::observed_visits(std::size_t i) const {
  const auto& out = subjects_[i].outcomes;
  std::size_t k = 0;
  while (k < n_visits_ && out[k].has_value()) ++k;
  return k;
}

bool TrialDataset::complete() const {
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    if (observed_visits(i) != n_visits_) return false;
  }
  return true;
}

double TrialDataset::missing_fraction(std::size_t visit) const {
  std::size_t missing = 0;
  for (const auto& s : subjects_) {
    if (!s.outcomes[visit].has_value()) ++missing;
  }
  return static_cast<double>(missing) / static_cast<double>(subjects_.size());
}

BinaryPanel dichotomize(const TrialDataset& dataset,
                        const Threshold& threshold) {
  BinaryPanel panel;
  panel.n_rows = dataset.n_subjects();
  panel.n_visits = dataset.n_visits();
  panel.cells.resize(panel.n_rows * panel.n_visits);
  for (std::size_t i = 0; i < panel.n_rows; ++i) {
    const auto& out = dataset.subjects()[i].outcomes;
    for (std::size_t j = 0; j < panel.n_visits; ++j) {
      if (out[j].has_value()) {
        panel.at(i, j) = threshold.success(*out[j]) ? std::uint8_t{1}
                                                    : std::uint8_t{0};
      }
    }
  }
  return panel;
}

}  // namespace dichot
