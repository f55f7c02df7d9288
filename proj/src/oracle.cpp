#include "graphgrpo/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "graphgrpo/policy.hpp"
#include "graphgrpo/rates.hpp"
#include "graphgrpo/rollout.hpp"

namespace graphgrpo::oracle {

std::vector<double> path_marginal(int z1, double t, const std::vector<double>& prior) {
  std::vector<double> p(prior.size());
  for (std::size_t z = 0; z < prior.size(); ++z) {
    p[z] = (1.0 - t) * prior[z] + (static_cast<int>(z) == z1 ? t : 0.0);
  }
  return p;
}

double cond_rate(int zt, int ztarget, int z1, double t, const std::vector<double>& prior) {
  // d/dt of the path at each label.
  auto deriv = [&](int z) { return (z == z1 ? 1.0 : 0.0) - prior[z]; };
  const double diff = deriv(ztarget) - deriv(zt);
  if (diff <= 0.0) return 0.0;
  const auto p = path_marginal(z1, t, prior);
  int support = 0;
  for (double v : p) support += v > 0.0;
  return diff / (support * p[zt]);
}

double enumerate_expectation_rate(int zt, int ztarget, const std::vector<double>& ptheta,
                                  double t, const std::vector<double>& prior) {
  double total = 0.0;
  for (std::size_t z1 = 0; z1 < ptheta.size(); ++z1) {
    total += ptheta[z1] * cond_rate(zt, ztarget, static_cast<int>(z1), t, prior);
  }
  return total;
}

MarginalCheck marginal_evolution_check(int z1, const std::vector<double>& prior, int t_fine) {
  const int s = static_cast<int>(prior.size());
  const double dt = 1.0 / t_fine;
  MarginalCheck out;
  std::vector<double> p = path_marginal(z1, 0.0, prior);
  for (int k = 0; k < t_fine; ++k) {
    const double t = k * dt;
    std::vector<double> next(s, 0.0);
    for (int i = 0; i < s; ++i) {
      std::vector<double> row(s, 0.0);
      double off = 0.0;
      for (int j = 0; j < s; ++j) {
        if (j == i) continue;
        row[j] = cond_rate(i, j, z1, t, prior) * dt;
        off += row[j];
      }
      if (off > 1.0) {
        for (double& v : row) v /= off;
        row[i] = 0.0;
        ++out.saturated_rows;
      } else {
        row[i] = 1.0 - off;
      }
      for (int j = 0; j < s; ++j) next[j] += p[i] * row[j];
    }
    p = std::move(next);
    const auto exact = path_marginal(z1, (k + 1) * dt, prior);
    double tv = 0.0;
    for (int j = 0; j < s; ++j) tv += std::abs(p[j] - exact[j]);
    out.max_tv = std::max(out.max_tv, 0.5 * tv);
  }
  return out;
}

namespace {

std::vector<double> random_simplex(int size, RandomStream& rng, double min_entry) {
  std::vector<double> w(size);
  double sum = 0.0;
  for (double& v : w) {
    v = min_entry - std::log(1.0 - rng.uniform());
    sum += v;
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

GradCase random_grad_case(const Denoiser& model, int max_nodes, RandomStream& rng) {
  const auto& cfg = model.config();
  GradCase c;
  const int n = 1 + static_cast<int>(rng.uniform_index(max_nodes));
  std::vector<double> size(n + 1, 0.0);
  size[n] = 1.0;
  c.priors = GraphPriors{
      CategoricalDistribution(random_simplex(cfg.node_classes, rng, 0.2)),
      CategoricalDistribution(random_simplex(cfg.edge_classes, rng, 0.2)),
      CategoricalDistribution(size)};
  const int steps = 50;
  const int k = static_cast<int>(rng.uniform_index(steps - 1));
  c.t = static_cast<double>(k) / steps;
  c.dt = 1.0 / steps;
  c.current = sample_noise_graph(c.priors, rng);
  c.next = sample_step(model, c.current, TimePoint{c.t, c.dt}, c.priors, rng).next;
  return c;
}

GradCheck finite_diff_grad_check(const Denoiser& model, const GradCase& c, int coordinates,
                                 RandomStream& rng, double h, double denom_floor) {
  const TimePoint tp{c.t, c.dt};
  const LogTransitionGrad analytic = grad_log_transition(model, c.current, c.next, tp, c.priors);
  if (!analytic.finite) throw std::runtime_error("gradient case has zero probability");
  Denoiser probe = model;
  GradCheck out;
  const Eigen::Index p = model.num_params();
  for (int i = 0; i < coordinates; ++i) {
    const Eigen::Index j = static_cast<Eigen::Index>(rng.uniform_index(p));
    const double base = probe.params()[j];
    probe.mutable_params()[j] = base + h;
    const double up = log_transition(probe, c.current, c.next, tp, c.priors);
    probe.mutable_params()[j] = base - h;
    const double down = log_transition(probe, c.current, c.next, tp, c.priors);
    probe.mutable_params()[j] = base;
    const double fd = (up - down) / (2.0 * h);
    const double a = analytic.grad[j];
    const double denom = std::max({std::abs(a), std::abs(fd), denom_floor});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(a - fd) / denom);
    ++out.coordinates;
  }
  return out;
}

std::vector<double> exact_chain_distribution(const NodePredictor& predict,
                                             const std::vector<double>& prior, int steps) {
  const int s = static_cast<int>(prior.size());
  std::vector<double> dist = prior;
  if (steps == 0) return dist;
  const double dt = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    std::vector<double> next(s, 0.0);
    for (int z = 0; z < s; ++z) {
      if (dist[z] == 0.0) continue;
      const auto pt = predict(z, t);
      // Expected rate by explicit enumeration over the predicted clean label.
      std::vector<double> row(s, 0.0);
      double off = 0.0;
      for (int j = 0; j < s; ++j) {
        if (j == z) continue;
        row[j] = enumerate_expectation_rate(z, j, pt, t, prior) * dt;
        off += row[j];
      }
      if (off > 1.0) {
        for (double& v : row) v /= off;
        row[z] = 0.0;
      } else {
        row[z] = 1.0 - off;
      }
      for (int j = 0; j < s; ++j) next[j] += dist[z] * row[j];
    }
    dist = std::move(next);
  }
  return dist;
}

std::vector<double> exact_chain_distribution(const Denoiser& model,
                                             const std::vector<double>& prior, int steps) {
  if (model.config().node_classes != static_cast<int>(prior.size())) {
    throw std::invalid_argument("prior size does not match the node classes");
  }
  return exact_chain_distribution(
      [&model](int z, double t) {
        GraphState g(1);
        g.set_node(0, z);
        const auto out = model.forward(g, t);
        const auto row = out.node_row(0);
        return std::vector<double>(row.begin(), row.end());
      },
      prior, steps);
}

std::vector<GateResult> run_verify_suite(std::uint64_t seed) {
  std::vector<GateResult> results;
  RandomStream rng(seed);

  {
    RandomStream r = rng.split(1);
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
      const int s = 2 + static_cast<int>(r.uniform_index(5));
      const auto prior = random_simplex(s, r, 0.01);
      const auto pt = random_simplex(s, r, 0.0);
      const double t = 0.05 + 0.9 * r.uniform();
      const auto stats = precompute_stats(CategoricalDistribution(prior), t);
      for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
          if (i == j) continue;
          const double a = analytical_rate(i, j, pt, stats);
          worst = std::max(worst, std::abs(a - enumerate_expectation_rate(i, j, pt, t, prior)));
        }
      }
    }
    results.push_back({"analytical rate equals enumerated expectation", worst < 1e-9, worst,
                       1e-9, true});
  }

  {
    RandomStream r = rng.split(2);
    const std::vector<double> prior = {0.5, 0.3, 0.2};
    const CategoricalDistribution p0(prior);
    const CategoricalDistribution pt(std::vector<double>{0.2, 0.5, 0.3});
    const TimePoint tp{0.5, 0.02};
    const auto exact = transition_row(0, pt, tp, p0, Provenance::kAnalytical).probs;
    std::vector<double> mean(3, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const auto row = transition_row(0, pt, tp, p0, Provenance::kConditionalMC, &r).probs;
      for (int j = 0; j < 3; ++j) mean[j] += row[j] / n;
    }
    double dev = 0.0;
    for (int j = 0; j < 3; ++j) dev = std::max(dev, std::abs(mean[j] - exact[j]));
    results.push_back({"conditional MC rows converge to the analytical row", dev < 0.01, dev,
                       0.01, true});
  }

  {
    const std::vector<double> prior = {0.5, 0.3, 0.2};
    const auto coarse = marginal_evolution_check(0, prior, 100);
    const auto fine = marginal_evolution_check(0, prior, 200);
    results.push_back({"marginal evolution error at T=100", coarse.max_tv < 5e-3, coarse.max_tv,
                       5e-3, true});
    results.push_back({"marginal evolution halving ratio (0.2..0.35 expected)",
                       fine.max_tv / coarse.max_tv >= 0.2 && fine.max_tv / coarse.max_tv <= 0.35,
                       fine.max_tv / coarse.max_tv, 0.35, false});
  }

  {
    RandomStream r = rng.split(3);
    DenoiserConfig cfg;
    cfg.node_classes = 2;
    cfg.edge_classes = 3;
    cfg.hidden = 16;
    cfg.output_init_scale = 1.0;
    double worst = 0.0;
    for (int c = 0; c < 5; ++c) {
      const Denoiser model(cfg, r.split(c).key());
      RandomStream cr = r.split(100 + c);
      const GradCase gc = random_grad_case(model, 4, cr);
      worst = std::max(worst, finite_diff_grad_check(model, gc, 100, cr).max_rel_error);
    }
    results.push_back({"finite-difference gradient check", worst < 1e-4, worst, 1e-4, true});
  }
  return results;
}

}  // namespace graphgrpo::oracle
