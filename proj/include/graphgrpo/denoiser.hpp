#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphgrpo/graph.hpp"
#include "graphgrpo/optimizer.hpp"
#include "graphgrpo/random.hpp"

namespace graphgrpo {

// Architecture descriptor of the graph denoiser f_theta(G_t, t).
//
// Node input: onehot(node label), mean and max of the onehot labels of all
// incident pairs, and a sinusoidal time embedding. Two tanh layers give a
// node encoding h_i that feeds the node head. Pair input: h_i + h_j,
// onehot(pair label) and the time embedding, through two tanh layers and the
// pair head. All weights are shared across nodes and pairs, so the map is
// permutation-equivariant.
struct DenoiserConfig {
  int node_classes = 1;
  int edge_classes = 2;
  int hidden = 128;
  int time_dim = 8;
  // Scale of the output-layer weights at initialization.
  double output_init_scale = 0.01;

  LabelSpace labels() const { return {node_classes, edge_classes}; }
  int node_input_dim() const { return node_classes + 2 * edge_classes + time_dim; }
  int edge_input_dim() const { return hidden + edge_classes + time_dim; }
  void validate() const;

  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

// Forward activations kept for the backward pass.
struct ForwardTape {
  RowMatrix node_in;
  RowMatrix node_h1;
  RowMatrix node_h2;
  RowMatrix edge_in;
  RowMatrix edge_h1;
  RowMatrix edge_h2;
  GraphDistribution out;
};

class Denoiser {
 public:
  // Random initialization from `seed`.
  Denoiser(const DenoiserConfig& config, std::uint64_t seed);
  Denoiser(const DenoiserConfig& config, Eigen::VectorXd params);

  const DenoiserConfig& config() const { return config_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& mutable_params() { return params_; }
  Eigen::Index num_params() const { return params_.size(); }

  // Per-dimension softmax predictions of the clean graph. Pure function of
  // (params, g, t); fills `tape` when given.
  GraphDistribution forward(const GraphState& g, double t,
                            ForwardTape* tape = nullptr) const;

  // Accumulates dL/dtheta into `grad` given dL/dlogits for every row.
  void backward_from_logits(const ForwardTape& tape, const RowMatrix& d_node_logits,
                            const RowMatrix& d_edge_logits, Eigen::VectorXd& grad) const;
  // Same, starting from dL/dprobs (the softmax Jacobian is applied here).
  void backward_from_probs(const ForwardTape& tape, const RowMatrix& d_node_probs,
                           const RowMatrix& d_edge_probs, Eigen::VectorXd& grad) const;

  // Named parameter blocks, in storage order.
  struct Block {
    std::string name;
    Eigen::Index offset;
    Eigen::Index rows;
    Eigen::Index cols;
  };
  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  void build_layout();

  DenoiserConfig config_;
  std::vector<Block> blocks_;
  Eigen::VectorXd params_;
};

std::vector<double> time_embedding(double t, int dim);

// dL/dlogits = p .* (g - <g, p>) per row.
RowMatrix softmax_backward(const RowMatrix& probs, const RowMatrix& d_probs);

struct PretrainOptions {
  // Forces every graph's corruption time (t = 1 gives clean inputs).
  std::optional<double> fixed_t;
};

// One cross-entropy step: per graph t ~ U(0,1), G_t ~ p_{t|1} dimension-wise,
// loss = mean CE per dimension over the batch. Returns the loss before the
// update.
double pretrain_step(Denoiser& model, AdamW& optimizer,
                     std::span<const GraphState> batch, const GraphPriors& priors,
                     RandomStream& rng, const PretrainOptions& options = {});

// Loss and gradient without the optimizer step (used for gradient checks).
double pretrain_loss(const Denoiser& model, std::span<const GraphState> batch,
                     const GraphPriors& priors, RandomStream& rng,
                     const PretrainOptions& options, Eigen::VectorXd* grad);

// Versioned binary checkpoint: architecture, parameters, and optionally the
// priors and optimizer state of a run. Floats are stored as their IEEE-754
// bytes, so save/load is bit-exact.
struct Checkpoint {
  DenoiserConfig config;
  Eigen::VectorXd params;
  std::optional<GraphPriors> priors;
  struct OptimizerState {
    std::uint64_t steps = 0;
    double lr = 0.0;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
  };
  std::optional<OptimizerState> optimizer;
  // Training iterations completed when the checkpoint was written.
  std::uint64_t iteration = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace graphgrpo
