#include "graphgrpo/categorical.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace graphgrpo {

CategoricalDistribution::CategoricalDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw std::invalid_argument("categorical distribution has no labels");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("categorical entry is negative or not finite");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument("categorical entries sum to " +
                                std::to_string(sum));
  }
}

CategoricalDistribution CategoricalDistribution::uniform(int size) {
  if (size <= 0) throw std::invalid_argument("uniform: size must be positive");
  return CategoricalDistribution(std::vector<double>(size, 1.0 / size));
}

CategoricalDistribution CategoricalDistribution::onehot(int size, Label label) {
  if (label < 0 || label >= size) throw std::domain_error("onehot: label out of range");
  std::vector<double> p(size, 0.0);
  p[label] = 1.0;
  return CategoricalDistribution(std::move(p));
}

CategoricalDistribution CategoricalDistribution::from_weights(
    std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("from_weights: negative or non-finite weight");
    }
    sum += w;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("from_weights: all weights are zero");
  for (double& w : weights) w /= sum;
  return CategoricalDistribution(std::move(weights));
}

CategoricalDistribution CategoricalDistribution::with_floor(double floor) const {
  bool raise = false;
  for (double p : probs_) raise = raise || p < floor;
  if (!raise) return *this;
  std::vector<double> w(probs_);
  for (double& p : w) p = std::max(p, floor);
  return from_weights(std::move(w));
}

bool CategoricalDistribution::has_full_support() const {
  for (double p : probs_) {
    if (!(p > 0.0)) return false;
  }
  return true;
}

void TimePoint::validate() const {
  if (!(dt > 0.0)) throw std::domain_error("time step must be positive");
  if (!(t >= 0.0) || t + dt > 1.0 + 1e-12) {
    throw std::domain_error("transition time outside [0, 1 - dt]");
  }
}

CategoricalDistribution noising_path(Label z1, double t,
                                     const CategoricalDistribution& prior) {
  if (!prior.contains(z1)) throw std::domain_error("noising_path: label out of range");
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("noising_path: t outside [0, 1]");
  std::vector<double> p(prior.size());
  for (int z = 0; z < prior.size(); ++z) {
    p[z] = (1.0 - t) * prior[z] + (z == z1 ? t : 0.0);
  }
  return CategoricalDistribution(std::move(p));
}

double path_time_derivative(Label z, Label z1,
                            const CategoricalDistribution& prior) {
  if (!prior.contains(z) || !prior.contains(z1)) {
    throw std::domain_error("path_time_derivative: label out of range");
  }
  return (z == z1 ? 1.0 : 0.0) - prior[z];
}

Label sample_categorical(std::span<const double> probs, RandomStream& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  Label last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    last_positive = static_cast<Label>(i);
    if (u < cumulative) return last_positive;
  }
  // u landed in the rounding gap above the cumulative sum
  return last_positive;
}

Label sample_categorical(const CategoricalDistribution& dist,
                         RandomStream& rng) {
  return sample_categorical(dist.probs(), rng);
}

}  // namespace graphgrpo
