#include "graphgrpo/denoiser.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <tuple>
#include <stdexcept>

#include "graphgrpo/categorical.hpp"

namespace graphgrpo {
namespace {

using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;

enum BlockId { kW1, kB1, kW2, kB2, kWn, kBn, kU1, kC1, kU2, kC2, kWe, kBe };

RowMatrix softmax_rows(const RowMatrix& logits) {
  RowMatrix p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - mx).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

RowMatrix tanh_layer(const RowMatrix& in, const ConstMatMap& w, const ConstVecMap& b) {
  RowMatrix z = in * w.transpose();
  z.rowwise() += b;
  return z.array().tanh().matrix();
}

}  // namespace

void DenoiserConfig::validate() const {
  if (node_classes < 1 || edge_classes < 2) {
    throw std::invalid_argument("denoiser needs >= 1 node class and >= 2 edge classes");
  }
  if (hidden < 1 || time_dim < 0 || time_dim % 2 != 0) {
    throw std::invalid_argument("denoiser hidden width or time embedding size invalid");
  }
}

std::vector<double> time_embedding(double t, int dim) {
  std::vector<double> out(dim);
  for (int k = 0; k < dim / 2; ++k) {
    const double w = std::numbers::pi * std::ldexp(1.0, k);
    out[2 * k] = std::sin(w * t);
    out[2 * k + 1] = std::cos(w * t);
  }
  return out;
}

void Denoiser::build_layout() {
  config_.validate();
  const int H = config_.hidden;
  const int X = config_.node_classes;
  const int E = config_.edge_classes;
  const std::vector<std::tuple<const char*, int, int>> shapes = {
      {"node.w1", H, config_.node_input_dim()}, {"node.b1", 1, H},
      {"node.w2", H, H},                        {"node.b2", 1, H},
      {"node.head.w", X, H},                    {"node.head.b", 1, X},
      {"edge.w1", H, config_.edge_input_dim()}, {"edge.b1", 1, H},
      {"edge.w2", H, H},                        {"edge.b2", 1, H},
      {"edge.head.w", E, H},                    {"edge.head.b", 1, E},
  };
  blocks_.clear();
  Eigen::Index offset = 0;
  for (const auto& [name, rows, cols] : shapes) {
    blocks_.push_back({name, offset, rows, cols});
    offset += static_cast<Eigen::Index>(rows) * cols;
  }
}

Denoiser::Denoiser(const DenoiserConfig& config, std::uint64_t seed) : config_(config) {
  build_layout();
  const Block& last = blocks_.back();
  params_ = Eigen::VectorXd::Zero(last.offset + last.rows * last.cols);
  RandomStream rng(seed);
  for (int id : {kW1, kW2, kWn, kU1, kU2, kWe}) {
    const Block& b = blocks_[id];
    double scale = 1.0 / std::sqrt(static_cast<double>(b.cols));
    if (id == kWn || id == kWe) scale *= config_.output_init_scale;
    for (Eigen::Index i = 0; i < b.rows * b.cols; ++i) {
      params_[b.offset + i] = scale * rng.normal();
    }
  }
}

Denoiser::Denoiser(const DenoiserConfig& config, Eigen::VectorXd params)
    : config_(config), params_(std::move(params)) {
  build_layout();
  const Block& last = blocks_.back();
  if (params_.size() != last.offset + last.rows * last.cols) {
    throw std::invalid_argument("parameter vector does not match architecture");
  }
  if (!params_.allFinite()) throw std::invalid_argument("parameters are not finite");
}

GraphDistribution Denoiser::forward(const GraphState& g, double t,
                                    ForwardTape* tape) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("denoiser time outside [0, 1]");
  g.validate(config_.labels());
  const int n = g.num_nodes();
  const int m = g.num_pairs();
  const int X = config_.node_classes;
  const int E = config_.edge_classes;
  const int H = config_.hidden;
  const int Td = config_.time_dim;
  const std::vector<double> tau = time_embedding(t, Td);

  auto mat = [&](int id) {
    const Block& b = blocks_[id];
    return ConstMatMap(params_.data() + b.offset, b.rows, b.cols);
  };
  auto vec = [&](int id) {
    const Block& b = blocks_[id];
    return ConstVecMap(params_.data() + b.offset, b.cols);
  };

  RowMatrix node_in = RowMatrix::Zero(n, config_.node_input_dim());
  for (int i = 0; i < n; ++i) {
    node_in(i, g.node(i)) = 1.0;
    if (n > 1) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const Label e = g.edge(i, j);
        node_in(i, X + e) += 1.0 / (n - 1);
        node_in(i, X + E + e) = 1.0;
      }
    }
    for (int k = 0; k < Td; ++k) node_in(i, X + 2 * E + k) = tau[k];
  }
  RowMatrix node_h1 = tanh_layer(node_in, mat(kW1), vec(kB1));
  RowMatrix node_h2 = tanh_layer(node_h1, mat(kW2), vec(kB2));
  RowMatrix node_logits = node_h2 * mat(kWn).transpose();
  node_logits.rowwise() += vec(kBn);

  RowMatrix edge_in = RowMatrix::Zero(m, config_.edge_input_dim());
  {
    int p = 0;
    const auto edges = g.edge_labels();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j, ++p) {
        edge_in.row(p).head(H) = node_h2.row(i) + node_h2.row(j);
        edge_in(p, H + edges[p]) = 1.0;
        for (int k = 0; k < Td; ++k) edge_in(p, H + E + k) = tau[k];
      }
    }
  }
  RowMatrix edge_h1 = tanh_layer(edge_in, mat(kU1), vec(kC1));
  RowMatrix edge_h2 = tanh_layer(edge_h1, mat(kU2), vec(kC2));
  RowMatrix edge_logits = edge_h2 * mat(kWe).transpose();
  edge_logits.rowwise() += vec(kBe);

  GraphDistribution out{softmax_rows(node_logits), softmax_rows(edge_logits)};
  if (tape != nullptr) {
    tape->node_in = std::move(node_in);
    tape->node_h1 = std::move(node_h1);
    tape->node_h2 = std::move(node_h2);
    tape->edge_in = std::move(edge_in);
    tape->edge_h1 = std::move(edge_h1);
    tape->edge_h2 = std::move(edge_h2);
    tape->out = out;
  }
  return out;
}

RowMatrix softmax_backward(const RowMatrix& probs, const RowMatrix& d_probs) {
  RowMatrix out(probs.rows(), probs.cols());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double inner = probs.row(r).dot(d_probs.row(r));
    out.row(r) = probs.row(r).array() * (d_probs.row(r).array() - inner);
  }
  return out;
}

void Denoiser::backward_from_probs(const ForwardTape& tape, const RowMatrix& d_node_probs,
                                   const RowMatrix& d_edge_probs,
                                   Eigen::VectorXd& grad) const {
  backward_from_logits(tape, softmax_backward(tape.out.node_probs, d_node_probs),
                       softmax_backward(tape.out.edge_probs, d_edge_probs), grad);
}

void Denoiser::backward_from_logits(const ForwardTape& tape, const RowMatrix& d_node_logits,
                                    const RowMatrix& d_edge_logits,
                                    Eigen::VectorXd& grad) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient size mismatch");
  const int H = config_.hidden;
  const int n = static_cast<int>(tape.node_h2.rows());
  auto mat = [&](int id) {
    const Block& b = blocks_[id];
    return ConstMatMap(params_.data() + b.offset, b.rows, b.cols);
  };
  auto gmat = [&](int id) {
    const Block& b = blocks_[id];
    return MatMap(grad.data() + b.offset, b.rows, b.cols);
  };
  auto gvec = [&](int id) {
    const Block& b = blocks_[id];
    return VecMap(grad.data() + b.offset, b.cols);
  };

  RowMatrix d_node_h2 = d_node_logits * mat(kWn);
  gmat(kWn) += d_node_logits.transpose() * tape.node_h2;
  gvec(kBn) += d_node_logits.colwise().sum();

  if (tape.edge_h2.rows() > 0) {
    // pair branch, which feeds back into the node encodings
    RowMatrix d = d_edge_logits * mat(kWe);
    gmat(kWe) += d_edge_logits.transpose() * tape.edge_h2;
    gvec(kBe) += d_edge_logits.colwise().sum();

    d.array() *= 1.0 - tape.edge_h2.array().square();
    gmat(kU2) += d.transpose() * tape.edge_h1;
    gvec(kC2) += d.colwise().sum();
    RowMatrix d_h1 = d * mat(kU2);

    d_h1.array() *= 1.0 - tape.edge_h1.array().square();
    gmat(kU1) += d_h1.transpose() * tape.edge_in;
    gvec(kC1) += d_h1.colwise().sum();
    const RowMatrix d_in = d_h1 * mat(kU1).leftCols(H);
    int p = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j, ++p) {
        d_node_h2.row(i) += d_in.row(p);
        d_node_h2.row(j) += d_in.row(p);
      }
    }
  }

  // node branch
  d_node_h2.array() *= 1.0 - tape.node_h2.array().square();
  gmat(kW2) += d_node_h2.transpose() * tape.node_h1;
  gvec(kB2) += d_node_h2.colwise().sum();
  RowMatrix d_h1 = d_node_h2 * mat(kW2);
  d_h1.array() *= 1.0 - tape.node_h1.array().square();
  gmat(kW1) += d_h1.transpose() * tape.node_in;
  gvec(kB1) += d_h1.colwise().sum();
}

double pretrain_loss(const Denoiser& model, std::span<const GraphState> batch,
                     const GraphPriors& priors, RandomStream& rng,
                     const PretrainOptions& options, Eigen::VectorXd* grad) {
  if (batch.empty()) throw std::invalid_argument("pretraining batch is empty");
  long total_dims = 0;
  for (const auto& g : batch) total_dims += g.num_dims();
  if (total_dims == 0) return 0.0;

  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const GraphState& clean = batch[b];
    RandomStream rs = rng.split(b);
    const double t = options.fixed_t ? *options.fixed_t : rs.uniform();
    GraphState noisy = clean;
    if (t < 1.0) {
      for (int d = 0; d < clean.num_dims(); ++d) {
        const auto& prior = d < clean.num_nodes() ? priors.node : priors.edge;
        noisy.set_dim(d, sample_categorical(noising_path(clean.dim(d), t, prior), rs));
      }
    }
    ForwardTape tape;
    const GraphDistribution pred = model.forward(noisy, t, grad ? &tape : nullptr);
    RowMatrix d_node = pred.node_probs;
    RowMatrix d_edge = pred.edge_probs;
    for (int i = 0; i < clean.num_nodes(); ++i) {
      loss -= std::log(pred.node_probs(i, clean.node(i)));
      d_node(i, clean.node(i)) -= 1.0;
    }
    const auto edges = clean.edge_labels();
    for (int p = 0; p < clean.num_pairs(); ++p) {
      loss -= std::log(pred.edge_probs(p, edges[p]));
      d_edge(p, edges[p]) -= 1.0;
    }
    if (grad != nullptr) {
      d_node /= static_cast<double>(total_dims);
      d_edge /= static_cast<double>(total_dims);
      model.backward_from_logits(tape, d_node, d_edge, *grad);
    }
  }
  return loss / static_cast<double>(total_dims);
}

double pretrain_step(Denoiser& model, AdamW& optimizer, std::span<const GraphState> batch,
                     const GraphPriors& priors, RandomStream& rng,
                     const PretrainOptions& options) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.num_params());
  const double loss = pretrain_loss(model, batch, priors, rng, options, &grad);
  optimizer.step(model.mutable_params(), std::move(grad));
  return loss;
}

// ---- checkpoint file ----

namespace {

constexpr char kMagic[8] = {'G', 'G', 'R', 'P', 'O', 'C', 'K', 'P'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void put(const T& value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void put_vector(const Eigen::VectorXd& v) {
    put<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void put_dist(const CategoricalDistribution& d) {
    put<std::uint64_t>(static_cast<std::uint64_t>(d.size()));
    for (double p : d.probs()) put(p);
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  explicit Reader(std::ifstream& in) : in_(in) {}
  template <typename T>
  T get() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) throw std::runtime_error("checkpoint is truncated");
    return value;
  }
  Eigen::VectorXd get_vector() {
    const auto n = get<std::uint64_t>();
    if (n > (1ULL << 32)) throw std::runtime_error("checkpoint vector size is implausible");
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in_) throw std::runtime_error("checkpoint is truncated");
    return v;
  }
  CategoricalDistribution get_dist() {
    const auto n = get<std::uint64_t>();
    if (n > (1ULL << 24)) throw std::runtime_error("checkpoint distribution size is implausible");
    std::vector<double> p(n);
    for (auto& x : p) x = get<double>();
    return CategoricalDistribution(std::move(p));
  }

 private:
  std::ifstream& in_;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  Writer w(out);
  out.write(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::int32_t>(ckpt.config.node_classes);
  w.put<std::int32_t>(ckpt.config.edge_classes);
  w.put<std::int32_t>(ckpt.config.hidden);
  w.put<std::int32_t>(ckpt.config.time_dim);
  w.put<double>(ckpt.config.output_init_scale);
  w.put_vector(ckpt.params);
  w.put<std::uint8_t>(ckpt.priors ? 1 : 0);
  if (ckpt.priors) {
    w.put_dist(ckpt.priors->node);
    w.put_dist(ckpt.priors->edge);
    w.put_dist(ckpt.priors->size);
  }
  w.put<std::uint8_t>(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    w.put<std::uint64_t>(ckpt.optimizer->steps);
    w.put<double>(ckpt.optimizer->lr);
    w.put_vector(ckpt.optimizer->m);
    w.put_vector(ckpt.optimizer->v);
  }
  w.put<std::uint64_t>(ckpt.iteration);
  if (!out) throw std::runtime_error("error while writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("'" + path + "' is not a checkpoint");
  }
  Reader r(in);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config.node_classes = r.get<std::int32_t>();
  ckpt.config.edge_classes = r.get<std::int32_t>();
  ckpt.config.hidden = r.get<std::int32_t>();
  ckpt.config.time_dim = r.get<std::int32_t>();
  ckpt.config.output_init_scale = r.get<double>();
  ckpt.config.validate();
  ckpt.params = r.get_vector();
  if (r.get<std::uint8_t>() != 0) {
    GraphPriors priors;
    priors.node = r.get_dist();
    priors.edge = r.get_dist();
    priors.size = r.get_dist();
    ckpt.priors = std::move(priors);
  }
  if (r.get<std::uint8_t>() != 0) {
    Checkpoint::OptimizerState opt;
    opt.steps = r.get<std::uint64_t>();
    opt.lr = r.get<double>();
    opt.m = r.get_vector();
    opt.v = r.get_vector();
    ckpt.optimizer = std::move(opt);
  }
  ckpt.iteration = r.get<std::uint64_t>();
  // validates the parameter count against the architecture
  Denoiser check(ckpt.config, ckpt.params);
  return ckpt;
}

}  // namespace graphgrpo
