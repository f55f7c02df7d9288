#include "graphgrpo/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace graphgrpo {

AdamW::AdamW(Eigen::Index num_params, AdamWConfig config)
    : config_(config),
      m_(Eigen::VectorXd::Zero(num_params)),
      v_(Eigen::VectorXd::Zero(num_params)) {}

double AdamW::step(Eigen::VectorXd& params, Eigen::VectorXd grad) {
  if (grad.size() != params.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("AdamW: parameter and gradient sizes differ");
  }
  const double norm = grad.norm();
  if (config_.grad_clip > 0.0 && norm > config_.grad_clip) {
    grad *= config_.grad_clip / norm;
  }
  ++steps_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  params.array() -= config_.lr * config_.weight_decay * params.array();
  params.array() -= config_.lr * (m_.array() / bc1) /
                    ((v_.array() / bc2).sqrt() + config_.eps);
  return norm;
}

void AdamW::restore(std::uint64_t steps, Eigen::VectorXd m, Eigen::VectorXd v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw std::invalid_argument("AdamW::restore: state size mismatch");
  }
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace graphgrpo
