#include "irsmd/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "irsmd/error.hpp"

namespace irsmd {

std::size_t SampleSource::uniform_index(std::size_t n) {
  ++draws_;
  const unsigned __int128 wide = static_cast<unsigned __int128>(engine_()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

double SampleSource::uniform() {
  ++draws_;
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SampleSource::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

ScenarioDistribution::ScenarioDistribution(std::size_t n) : n_(n) {
  if (n == 0) fail(ErrorCode::invalid_argument, "scenario distribution needs at least one outcome");
}

ScenarioDistribution::ScenarioDistribution(std::vector<double> probabilities)
    : n_(probabilities.size()), probabilities_(std::move(probabilities)) {
  if (n_ == 0) fail(ErrorCode::invalid_argument, "scenario distribution needs at least one outcome");
  double total = 0.0;
  for (double p : probabilities_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      fail(ErrorCode::invalid_argument, "scenario probabilities must be nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorCode::invalid_argument, "scenario probabilities must sum to one");
  }
  cumulative_.resize(n_);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    acc += probabilities_[i];
    cumulative_[i] = acc;
  }
  cumulative_.back() = 1.0;
}

double ScenarioDistribution::probability(std::size_t i) const {
  if (cumulative_.empty()) return 1.0 / static_cast<double>(n_);
  return probabilities_[i];
}

std::size_t ScenarioDistribution::draw(SampleSource& src) const {
  if (n_ == 1) return 0;
  if (cumulative_.empty()) return src.uniform_index(n_);
  const double u = src.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  return i < n_ ? i : n_ - 1;
}

}  // namespace irsmd
