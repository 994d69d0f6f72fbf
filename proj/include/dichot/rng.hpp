#pragma once

#include <cstdint>
#include <random>

namespace dichot {

// Every random quantity in the toolkit is drawn from an explicitly keyed
// stream. Streams are derived by hashing (master seed, replicate index,
// stage, ...) so a replicate's data is a pure function of its key and the
// results do not depend on thread scheduling.

/// Stage tags keeping the per-replicate sub-streams disjoint.
enum class Stage : std::uint64_t {
  datagen = 1,
  arms = 2,
  dropout = 3,
  imputation = 4,
  bootstrap = 5,
  analysis = 6,
};

/// SplitMix64-style key mixing.
std::uint64_t mix_key(std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0, std::uint64_t d = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t key);
  Rng(std::uint64_t master_seed, std::uint64_t replicate, Stage stage)
      : Rng(mix_key(master_seed, replicate,
                    static_cast<std::uint64_t>(stage))) {}

  /// Independent child stream; deterministic in (key, i) and unaffected by
  /// draws already consumed from this stream.
  Rng fork(std::uint64_t i) const { return Rng(mix_key(key_, 0x5b4d, i)); }

  double uniform() { return unif_(engine_); }
  double normal() { return normal_(engine_); }
  double chi_squared(double df);
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

  std::uint64_t key() const { return key_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dichot
