#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace irsmd {

/// Seeded scenario stream. Index draws use a fixed multiply-shift mapping of
/// the raw 64-bit engine output so sequences do not depend on the standard
/// library's distribution implementations.
class SampleSource {
 public:
  explicit SampleSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform index in [0, n).
  std::size_t uniform_index(std::size_t n);
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  std::uint64_t raw() { return engine_(); }

  std::uint64_t draws() const { return draws_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Discrete distribution over scenarios; uniform when constructed from a size.
class ScenarioDistribution {
 public:
  explicit ScenarioDistribution(std::size_t n = 1);
  explicit ScenarioDistribution(std::vector<double> probabilities);

  std::size_t size() const { return n_; }
  bool uniform() const { return cumulative_.empty(); }
  double probability(std::size_t i) const;
  std::size_t draw(SampleSource& src) const;

 private:
  std::size_t n_;
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
};

}  // namespace irsmd
