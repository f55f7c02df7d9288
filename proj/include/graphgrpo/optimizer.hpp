#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace graphgrpo {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  // Global gradient-norm clip; <= 0 disables.
  double grad_clip = 5.0;
};

// AdamW with decoupled weight decay and global-norm gradient clipping.
class AdamW {
 public:
  AdamW(Eigen::Index num_params, AdamWConfig config);

  // Applies one update in place and returns the gradient norm before clipping.
  double step(Eigen::VectorXd& params, Eigen::VectorXd grad);

  double lr() const { return config_.lr; }
  void set_lr(double lr) { config_.lr = lr; }
  const AdamWConfig& config() const { return config_; }

  std::uint64_t steps() const { return steps_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }
  void restore(std::uint64_t steps, Eigen::VectorXd m, Eigen::VectorXd v);

 private:
  AdamWConfig config_;
  std::uint64_t steps_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

}  // namespace graphgrpo
