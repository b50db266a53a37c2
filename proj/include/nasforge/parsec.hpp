#pragma once

// Probabilistic architecture search over a SearchSpace. A categorical
// distribution per axis (block type, channels, expansion, attention; one
// quadruple per group) is parameterized by logits. Each step samples K
// architectures, scores them by data log-likelihood minus a weighted hinge
// cost, reweights the samples through a softmax posterior, and follows the
// score-function gradient of the reweighted log-likelihood.
//
// Numerical conventions: posterior scores are centered on their maximum and
// then floored at -30 before exponentiation, which keeps the weights exactly
// shift-invariant while bounding them away from 0/0. Derivation takes the
// per-axis argmax with ties resolved to the lowest index.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "nasforge/arch_space.hpp"
#include "nasforge/rng.hpp"
#include "nasforge/tensor.hpp"

namespace nasforge {

// Axes in walk order: for each group, type, channels, expansion, attention.
struct ArchParams {
  std::vector<Tensor> logits;
};

inline constexpr int kAxesPerGroup = 4;

// Schedule and optimizer settings for a full search. target_flops <= 0 lets
// the driver pick its default (median cost of uniform samples). Warm-up
// epochs train shared weights only; the distribution moves afterwards.
struct SearchConfig {
  int samples_per_step = 13;
  double target_flops = 0.0;
  double cost_weight = 1.0;
  // Entropy bonus on the categorical distribution. Keeps a little sampling
  // diversity alive; a fully collapsed axis yields identical samples, whose
  // posterior carries no contrast and freezes the distribution for good.
  double entropy_weight = 0.01;
  int warmup_epochs = 60;
  int total_epochs = 200;
  AdamConfig arch_optimizer{};
  SgdConfig weight_optimizer{0.1, 0.9, 0.0};
  std::uint64_t seed = 0;
};

inline std::vector<int> axis_sizes(const SearchSpace& space) {
  std::vector<int> sizes;
  for (const GroupAxes& g : space.groups) {
    sizes.push_back(static_cast<int>(g.types.size()));
    sizes.push_back(g.channels.size());
    sizes.push_back(g.expansion.size());
    sizes.push_back(static_cast<int>(g.attention.size()));
  }
  return sizes;
}

inline ArchParams init_params(const SearchSpace& space) {
  ArchParams p;
  for (int n : axis_sizes(space)) p.logits.emplace_back(Tensor({n}));
  return p;
}

namespace detail {

inline std::vector<double> softmax_vec(const Tensor& logits) {
  double mx = logits.v[0];
  for (double x : logits.v) mx = std::max(mx, x);
  std::vector<double> p(logits.v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits.v[i] - mx);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

inline void check_params(const SearchSpace& space, const ArchParams& params) {
  const std::vector<int> sizes = axis_sizes(space);
  if (params.logits.size() != sizes.size()) {
    throw std::invalid_argument("arch params: axis count mismatch");
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (params.logits[i].numel() != sizes[i]) {
      throw std::invalid_argument("arch params: axis " + std::to_string(i) + " size mismatch");
    }
  }
}

}  // namespace detail

// Per-axis choice indices of an architecture, in the same walk order as
// ArchParams.logits.
inline std::vector<int> choice_indices(const SearchSpace& space, const ArchitectureSpec& arch) {
  if (arch.choices.size() != space.groups.size()) {
    throw std::invalid_argument("choice_indices: arch/space group count mismatch");
  }
  std::vector<int> idx;
  for (std::size_t g = 0; g < space.groups.size(); ++g) {
    const GroupAxes& ax = space.groups[g];
    const GroupChoice& ch = arch.choices[g];
    int t = -1;
    for (std::size_t i = 0; i < ax.types.size(); ++i) {
      if (ax.types[i] == ch.type) t = static_cast<int>(i);
    }
    int a = -1;
    for (std::size_t i = 0; i < ax.attention.size(); ++i) {
      if (ax.attention[i] == ch.attention) a = static_cast<int>(i);
    }
    const int c = ax.channels.index_of(ch.channels);
    const int e = ax.expansion.index_of(ch.expansion);
    if (t < 0 || c < 0 || e < 0 || a < 0) {
      throw std::invalid_argument("choice_indices: choice off axis in group " + std::to_string(g));
    }
    idx.push_back(t);
    idx.push_back(c);
    idx.push_back(e);
    idx.push_back(a);
  }
  return idx;
}

inline ArchitectureSpec arch_from_indices(const SearchSpace& space, const std::vector<int>& idx) {
  if (idx.size() != space.groups.size() * kAxesPerGroup) {
    throw std::invalid_argument("arch_from_indices: index count mismatch");
  }
  ArchitectureSpec arch;
  for (std::size_t g = 0; g < space.groups.size(); ++g) {
    const GroupAxes& ax = space.groups[g];
    const int* q = idx.data() + g * kAxesPerGroup;
    GroupChoice ch;
    ch.type = ax.types[static_cast<std::size_t>(q[0])];
    ch.channels = ax.channels.member(q[1]);
    ch.expansion = ax.expansion.member(q[2]);
    ch.attention = ax.attention[static_cast<std::size_t>(q[3])];
    arch.choices.push_back(ch);
  }
  return arch;
}

struct SampledArch {
  ArchitectureSpec arch;
  double logp = 0.0;
};

inline double log_prob(const SearchSpace& space, const ArchParams& params,
                       const ArchitectureSpec& arch) {
  detail::check_params(space, params);
  const std::vector<int> idx = choice_indices(space, arch);
  double lp = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const std::vector<double> p = detail::softmax_vec(params.logits[a]);
    lp += std::log(p[static_cast<std::size_t>(idx[a])]);
  }
  return lp;
}

// One independent categorical draw per axis; log-probability is the sum of
// the chosen log-softmax entries.
inline SampledArch sample_architecture(const SearchSpace& space, const ArchParams& params,
                                       Rng& rng) {
  detail::check_params(space, params);
  std::vector<int> idx;
  double lp = 0.0;
  for (const Tensor& logits : params.logits) {
    const std::vector<double> p = detail::softmax_vec(logits);
    const std::size_t k = rng.categorical(p);
    idx.push_back(static_cast<int>(k));
    lp += std::log(p[k]);
  }
  return {arch_from_indices(space, idx), lp};
}

// w_k = softmax_k(loglik_k - lambda * cost_k), centered then floored at -30.
inline std::vector<double> posterior_weights(const std::vector<double>& logliks,
                                             const std::vector<double>& costs, double lambda) {
  if (logliks.size() != costs.size()) {
    throw std::invalid_argument("posterior_weights: loglik/cost length mismatch");
  }
  if (logliks.empty()) throw std::invalid_argument("posterior_weights: empty input");
  if (lambda < 0.0) throw std::invalid_argument("posterior_weights: lambda must be >= 0");
  std::vector<double> score(logliks.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (std::isnan(logliks[i]) || std::isnan(costs[i])) {
      throw std::invalid_argument("posterior_weights: NaN input");
    }
    score[i] = logliks[i] - lambda * costs[i];
    mx = std::max(mx, score[i]);
  }
  if (!std::isfinite(mx)) {
    throw std::invalid_argument("posterior_weights: all scores are -inf");
  }
  double total = 0.0;
  for (double& s : score) {
    s = std::exp(std::max(s - mx, -30.0));
    total += s;
  }
  for (double& s : score) s /= total;
  return score;
}

// Descent direction for the logits: minus the posterior-weighted score
// gradient sum_k w_k (onehot(choice_k) - softmax(logits)). Each axis's
// entries sum to zero.
inline std::vector<Tensor> alpha_gradient(const SearchSpace& space,
                                          const std::vector<ArchitectureSpec>& samples,
                                          const std::vector<double>& weights,
                                          const ArchParams& params) {
  detail::check_params(space, params);
  if (samples.size() != weights.size()) {
    throw std::invalid_argument("alpha_gradient: sample/weight length mismatch");
  }
  std::vector<Tensor> grad;
  for (const Tensor& logits : params.logits) grad.emplace_back(Tensor(logits.shape));
  double wsum = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const std::vector<int> idx = choice_indices(space, samples[k]);
    for (std::size_t a = 0; a < grad.size(); ++a) {
      grad[a].v[static_cast<std::size_t>(idx[a])] -= weights[k];
    }
    wsum += weights[k];
  }
  for (std::size_t a = 0; a < grad.size(); ++a) {
    const std::vector<double> p = detail::softmax_vec(params.logits[a]);
    for (std::size_t i = 0; i < p.size(); ++i) grad[a].v[i] += wsum * p[i];
  }
  return grad;
}

// Per-axis argmax; ties resolve to the lowest index.
inline ArchitectureSpec most_probable(const SearchSpace& space, const ArchParams& params) {
  detail::check_params(space, params);
  std::vector<int> idx;
  for (const Tensor& logits : params.logits) {
    int best = 0;
    for (int i = 1; i < logits.numel(); ++i) {
      if (logits.v[static_cast<std::size_t>(i)] > logits.v[static_cast<std::size_t>(best)]) {
        best = i;
      }
    }
    idx.push_back(best);
  }
  return arch_from_indices(space, idx);
}

inline std::vector<double> axis_entropies(const ArchParams& params) {
  std::vector<double> h;
  for (const Tensor& logits : params.logits) {
    const std::vector<double> p = detail::softmax_vec(logits);
    double e = 0.0;
    for (double x : p) {
      if (x > 0.0) e -= x * std::log(x);
    }
    h.push_back(e);
  }
  return h;
}

struct ArchAdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  int t = 0;
};

inline void adam_step(ArchParams& params, const std::vector<Tensor>& grad, ArchAdamState& state,
                      const AdamConfig& cfg) {
  if (grad.size() != params.logits.size()) {
    throw std::invalid_argument("adam_step: gradient axis count mismatch");
  }
  if (state.m.empty()) {
    for (const Tensor& l : params.logits) {
      state.m.emplace_back(Tensor(l.shape));
      state.v.emplace_back(Tensor(l.shape));
    }
  }
  ++state.t;
  for (std::size_t a = 0; a < params.logits.size(); ++a) {
    adam_update(params.logits[a], grad[a], state.m[a], state.v[a], state.t, cfg);
  }
}

}  // namespace nasforge
