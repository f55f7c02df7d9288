#pragma once

#include <span>
#include <vector>

#include "graphgrpo/random.hpp"

namespace graphgrpo {

using Label = int;

// Floor applied to priors so that every state keeps positive mass on the
// noising path (the rate formulas divide by p_0).
inline constexpr double kPriorFloor = 1e-6;
inline constexpr double kSimplexTolerance = 1e-9;

// Probability vector over labels 0..S-1.
class CategoricalDistribution {
 public:
  CategoricalDistribution() = default;
  // Throws std::invalid_argument unless entries are >= 0 and sum to 1.
  explicit CategoricalDistribution(std::vector<double> probs);

  static CategoricalDistribution uniform(int size);
  static CategoricalDistribution onehot(int size, Label label);
  // Normalizes non-negative weights; throws if they are all zero.
  static CategoricalDistribution from_weights(std::vector<double> weights);

  // Raises every entry to at least `floor` and renormalizes. Entries already
  // above the floor are left bit-identical when no raise is needed.
  CategoricalDistribution with_floor(double floor = kPriorFloor) const;

  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](Label label) const { return probs_[label]; }
  std::span<const double> probs() const { return probs_; }
  bool has_full_support() const;
  bool contains(Label label) const { return label >= 0 && label < size(); }

  friend bool operator==(const CategoricalDistribution&,
                         const CategoricalDistribution&) = default;

 private:
  std::vector<double> probs_;
};

// Process time and step size of one discrete transition.
struct TimePoint {
  double t = 0.0;
  double dt = 0.0;

  // Throws std::domain_error unless dt > 0 and 0 <= t <= 1 - dt.
  void validate() const;
};

// p_{t|1}(. | z1) = t * onehot(z1) + (1 - t) * prior.
CategoricalDistribution noising_path(Label z1, double t,
                                     const CategoricalDistribution& prior);

// d/dt p_{t|1}(z | z1) = delta(z, z1) - prior[z]; independent of t.
double path_time_derivative(Label z, Label z1,
                            const CategoricalDistribution& prior);

// Inverse-CDF draw. The span form skips validation for hot loops.
Label sample_categorical(std::span<const double> probs, RandomStream& rng);
Label sample_categorical(const CategoricalDistribution& dist,
                         RandomStream& rng);

}  // namespace graphgrpo
