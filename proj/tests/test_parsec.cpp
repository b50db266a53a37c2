#include <gtest/gtest.h>

#include <cmath>

#include "nasforge/cost_model.hpp"
#include "nasforge/parsec.hpp"

namespace {

using namespace nasforge;

// One group, one searchable axis (two block types), everything else pinned.
SearchSpace two_arch_space() {
  SearchSpace s;
  s.input = {2, 4, 8};
  s.stem_channels = 4;
  GroupAxes g;
  g.types = {BlockType::t1_s3, BlockType::t3_s3};
  g.channels = {8, 8, 8};
  g.expansion = {Rational(1), Rational(1), Rational(1)};
  g.attention = {AttentionKind::PassThrough};
  g.blocks = 1;
  g.stride = 1;
  s.groups = {g};
  s.head = {8, 8, 2};
  return s;
}

TEST(Parsec, InitIsUniformPerAxis) {
  const SearchSpace s = toy_space();
  ArchParams p = init_params(s);
  ASSERT_EQ(p.logits.size(), s.groups.size() * 4);
  const std::vector<int> sizes = axis_sizes(s);
  for (std::size_t a = 0; a < p.logits.size(); ++a) {
    ASSERT_EQ(p.logits[a].numel(), sizes[a]);
    const std::vector<double> probs = detail::softmax_vec(p.logits[a]);
    double total = 0.0;
    for (double x : probs) {
      EXPECT_NEAR(x, 1.0 / sizes[a], 1e-12);
      total += x;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Parsec, FreshParamsDeriveLowestIndexArch) {
  const SearchSpace s = toy_space();
  ArchitectureSpec a = most_probable(s, init_params(s));
  for (std::size_t g = 0; g < s.groups.size(); ++g) {
    EXPECT_EQ(a.choices[g].type, s.groups[g].types[0]);
    EXPECT_EQ(a.choices[g].channels, s.groups[g].channels.min);
    EXPECT_TRUE(a.choices[g].expansion == s.groups[g].expansion.min);
    EXPECT_EQ(a.choices[g].attention, s.groups[g].attention[0]);
  }
}

TEST(Parsec, OneHotLogitsForceTheChoice) {
  const SearchSpace s = toy_space();
  ArchParams p = init_params(s);
  p.logits[1].v[2] = 50.0;  // group 0 channel axis, option 2
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    SampledArch sa = sample_architecture(s, p, rng);
    ASSERT_EQ(sa.arch.choices[0].channels, s.groups[0].channels.member(2));
  }
}

TEST(Parsec, UniformSamplingFrequencies) {
  const SearchSpace s = toy_space();
  ArchParams p = init_params(s);
  Rng rng(5);
  // Group 3 attention axis has 2 options; group 0 channels has 5.
  std::vector<int> chan_hits(5, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    SampledArch sa = sample_architecture(s, p, rng);
    ++chan_hits[static_cast<std::size_t>(s.groups[0].channels.index_of(sa.arch.choices[0].channels))];
  }
  const double expect = draws / 5.0;
  const double sigma = std::sqrt(draws * 0.2 * 0.8);
  for (int h : chan_hits) EXPECT_NEAR(h, expect, 3.0 * sigma);
}

TEST(Parsec, LogProbMatchesDirectProduct) {
  const SearchSpace s = toy_space();
  ArchParams p = init_params(s);
  Rng lrng(7);
  for (Tensor& l : p.logits) l.fill_normal(lrng, 0.7);
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    SampledArch sa = sample_architecture(s, p, rng);
    double direct = 1.0;
    const std::vector<int> idx = choice_indices(s, sa.arch);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      direct *= detail::softmax_vec(p.logits[a])[static_cast<std::size_t>(idx[a])];
    }
    EXPECT_NEAR(sa.logp, std::log(direct), 1e-9);
    EXPECT_NEAR(log_prob(s, p, sa.arch), sa.logp, 1e-12);
  }
}

TEST(Parsec, PosteriorWeightsHandValues) {
  std::vector<double> w = posterior_weights({-1.0, -1.0, -1.0}, {0.0, 0.0, 0.0}, 1.0);
  for (double x : w) EXPECT_NEAR(x, 1.0 / 3.0, 1e-12);

  w = posterior_weights({0.0, std::log(2.0)}, {5.0, 5.0}, 0.0);
  EXPECT_NEAR(w[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-12);

  w = posterior_weights({-2.0, -2.0}, {0.0, 0.5}, 1.0);
  EXPECT_NEAR(w[0], 0.6225, 1e-4);
  EXPECT_NEAR(w[1], 0.3775, 1e-4);
}

TEST(Parsec, PosteriorWeightsShiftInvariant) {
  // Inputs on a coarse binary grid keep every shifted sum exact, so the
  // invariance holds bit for bit, not just to rounding.
  std::vector<double> logliks = {-1.0, -2.5, -0.25, -4.0};
  std::vector<double> costs = {0.0, 0.5, 1.0, 0.25};
  std::vector<double> base = posterior_weights(logliks, costs, 1.0);
  for (double shift : {64.0, -128.0, 0.5}) {
    std::vector<double> shifted = logliks;
    for (double& x : shifted) x += shift;
    std::vector<double> w = posterior_weights(shifted, costs, 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(w[i], base[i]);
  }
}

TEST(Parsec, PosteriorWeightsRejectsDegenerateInput) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(posterior_weights({-inf, -inf}, {0.0, 0.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(posterior_weights({0.0}, {0.0, 0.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(posterior_weights({std::nan("")}, {0.0}, 1.0), std::invalid_argument);
  // A single -inf among finite scores is floored, not fatal.
  std::vector<double> w = posterior_weights({0.0, -inf}, {0.0, 0.0}, 1.0);
  EXPECT_NEAR(w[0] + w[1], 1.0, 1e-12);
  EXPECT_GT(w[0], 0.99);
}

TEST(Parsec, AlphaGradientHandValue) {
  const SearchSpace s = two_arch_space();
  ArchParams p = init_params(s);
  ArchitectureSpec a = most_probable(s, p);  // type index 0
  std::vector<Tensor> g = alpha_gradient(s, {a}, {1.0}, p);
  // Ascent is onehot - softmax = (+0.5, -0.5); returned descent negates it.
  EXPECT_NEAR(g[0].v[0], -0.5, 1e-12);
  EXPECT_NEAR(g[0].v[1], 0.5, 1e-12);
  // Pinned axes have a single option: gradient identically zero.
  EXPECT_EQ(g[1].numel(), 1);
  EXPECT_DOUBLE_EQ(g[1].v[0], 0.0);
}

TEST(Parsec, AlphaGradientZeroWhenSamplesMatchDistribution) {
  const SearchSpace s = two_arch_space();
  ArchParams p = init_params(s);
  std::vector<int> idx0 = {0, 0, 0, 0};
  std::vector<int> idx1 = {1, 0, 0, 0};
  std::vector<ArchitectureSpec> samples = {arch_from_indices(s, idx0), arch_from_indices(s, idx1)};
  std::vector<Tensor> g = alpha_gradient(s, samples, {0.5, 0.5}, p);
  for (const Tensor& t : g) {
    for (double x : t.v) EXPECT_NEAR(x, 0.0, 1e-12);
  }
}

TEST(Parsec, AlphaGradientAxesSumToZero) {
  const SearchSpace s = toy_space();
  ArchParams p = init_params(s);
  Rng lrng(13);
  for (Tensor& l : p.logits) l.fill_normal(lrng, 1.0);
  Rng rng(17);
  std::vector<ArchitectureSpec> samples;
  std::vector<double> weights;
  double total = 0.0;
  for (int k = 0; k < 13; ++k) {
    samples.push_back(sample_architecture(s, p, rng).arch);
    const double w = 0.3 + rng.uniform();
    weights.push_back(w);
    total += w;
  }
  for (double& w : weights) w /= total;
  std::vector<Tensor> g = alpha_gradient(s, samples, weights, p);
  for (const Tensor& t : g) {
    double sum = 0.0;
    for (double x : t.v) sum += x;
    EXPECT_NEAR(sum, 0.0, 1e-12);
  }
  EXPECT_THROW(alpha_gradient(s, samples, {0.5}, p), std::invalid_argument);
}

// Exact enumeration of a two-architecture problem: the surrogate objective
// J(alpha) = log sum_a P(a|alpha) exp(s_a) has gradient
// sum_a omega_a (onehot_a - softmax) with omega the exact posterior. The
// descent output of alpha_gradient must match -dJ/dlogit by central
// differences.
TEST(Parsec, AlphaGradientMatchesFiniteDifferenceObjective) {
  const SearchSpace s = two_arch_space();
  const std::vector<double> scores = {-1.3, -0.4};  // frozen loglik - lambda*cost
  auto objective = [&](const ArchParams& p) {
    const std::vector<double> probs = detail::softmax_vec(p.logits[0]);
    return std::log(probs[0] * std::exp(scores[0]) + probs[1] * std::exp(scores[1]));
  };
  ArchParams p = init_params(s);
  p.logits[0].v[0] = 0.3;
  p.logits[0].v[1] = -0.7;

  const std::vector<double> probs = detail::softmax_vec(p.logits[0]);
  std::vector<double> omega = {probs[0] * std::exp(scores[0]), probs[1] * std::exp(scores[1])};
  const double z = omega[0] + omega[1];
  omega[0] /= z;
  omega[1] /= z;
  std::vector<ArchitectureSpec> samples = {arch_from_indices(s, {0, 0, 0, 0}),
                                           arch_from_indices(s, {1, 0, 0, 0})};
  std::vector<Tensor> g = alpha_gradient(s, samples, omega, p);

  const double eps = 1e-5;
  for (int i = 0; i < 2; ++i) {
    ArchParams hi = p, lo = p;
    hi.logits[0].v[static_cast<std::size_t>(i)] += eps;
    lo.logits[0].v[static_cast<std::size_t>(i)] -= eps;
    const double fd = (objective(hi) - objective(lo)) / (2.0 * eps);
    EXPECT_NEAR(g[0].v[static_cast<std::size_t>(i)], -fd, 1e-5) << "logit " << i;
  }
}

TEST(Parsec, MostProbableArgmaxAndShiftInvariance) {
  const SearchSpace s = toy_space();
  ArchParams p = init_params(s);
  p.logits[1].v[3] = 2.0;
  p.logits[14].v[1] = 5.0;  // group 3 expansion axis
  ArchitectureSpec a = most_probable(s, p);
  EXPECT_EQ(a.choices[0].channels, s.groups[0].channels.member(3));
  EXPECT_TRUE(a.choices[3].expansion == s.groups[3].expansion.member(1));
  for (Tensor& l : p.logits) {
    for (double& x : l.v) x += 17.25;
  }
  ArchitectureSpec b = most_probable(s, p);
  EXPECT_EQ(arch_to_json(a), arch_to_json(b));
}

TEST(Parsec, EntropyTracksConcentration) {
  const SearchSpace s = two_arch_space();
  ArchParams p = init_params(s);
  std::vector<double> h = axis_entropies(p);
  EXPECT_NEAR(h[0], std::log(2.0), 1e-12);
  EXPECT_NEAR(h[1], 0.0, 1e-12);
  p.logits[0].v[0] = 30.0;
  EXPECT_LT(axis_entropies(p)[0], 1e-9);
}

// Synthetic bandit: loglik is minus the squared index distance to a planted
// target. With K=13 posterior reweighting the distribution must concentrate
// on the target on every axis.
TEST(Parsec, BanditConvergesToPlantedOptimum) {
  const SearchSpace s = toy_space();
  const std::vector<int> sizes = axis_sizes(s);
  for (std::uint64_t seed : {101u, 202u, 303u}) {
    Rng rng(seed);
    std::vector<int> target;
    for (int n : sizes) target.push_back(static_cast<int>(rng.uniform_int(n)));
    ArchParams p = init_params(s);
    ArchAdamState adam;
    const AdamConfig cfg{0.05, 0.9, 0.999, 1e-8};
    const int K = 13;
    int converged_at = -1;
    for (int step = 0; step < 500; ++step) {
      std::vector<ArchitectureSpec> samples;
      std::vector<double> logliks;
      for (int k = 0; k < K; ++k) {
        SampledArch sa = sample_architecture(s, p, rng);
        const std::vector<int> idx = choice_indices(s, sa.arch);
        double d2 = 0.0;
        for (std::size_t a = 0; a < idx.size(); ++a) {
          const double d = idx[a] - target[a];
          d2 += d * d;
        }
        samples.push_back(sa.arch);
        logliks.push_back(-d2);
      }
      std::vector<double> w = posterior_weights(logliks, std::vector<double>(K, 0.0), 0.0);
      adam_step(p, alpha_gradient(s, samples, w, p), adam, cfg);
      bool all = true;
      for (std::size_t a = 0; a < p.logits.size(); ++a) {
        const std::vector<double> probs = detail::softmax_vec(p.logits[a]);
        if (probs[static_cast<std::size_t>(target[a])] <= 0.9) all = false;
      }
      if (all) {
        converged_at = step;
        break;
      }
    }
    EXPECT_GE(converged_at, 0) << "seed " << seed;
    const std::vector<int> derived = choice_indices(s, most_probable(s, p));
    EXPECT_EQ(derived, target) << "seed " << seed;
  }
}

// Constant likelihoods leave only the hinge term: probability mass on the
// channel axes must drift toward cheaper widths.
TEST(Parsec, CostSteeringLowersExpectedChannels) {
  const SearchSpace s = toy_space();
  ArchParams p = init_params(s);
  ArchAdamState adam;
  const AdamConfig cfg{0.05, 0.9, 0.999, 1e-8};
  Rng rng(29);
  // Just under the cheapest toy architecture (~2.5e5 FLOPs): every sample
  // pays a hinge of O(1), so the posterior spreads over the cheaper draws
  // instead of collapsing onto one winner.
  const double target_flops = 2.5e5;
  auto expected_channels = [&]() {
    double total = 0.0;
    for (std::size_t g = 0; g < s.groups.size(); ++g) {
      const std::vector<double> probs = detail::softmax_vec(p.logits[4 * g + 1]);
      for (std::size_t i = 0; i < probs.size(); ++i) {
        total += probs[i] * s.groups[g].channels.member(static_cast<int>(i));
      }
    }
    return total;
  };
  std::vector<double> window_means;
  double acc = 0.0;
  const int K = 13;
  for (int step = 0; step < 200; ++step) {
    std::vector<ArchitectureSpec> samples;
    std::vector<double> costs;
    for (int k = 0; k < K; ++k) {
      SampledArch sa = sample_architecture(s, p, rng);
      samples.push_back(sa.arch);
      costs.push_back(hinge_cost(static_cast<double>(cost_report(s, sa.arch).flops_total),
                                 target_flops));
    }
    std::vector<double> w = posterior_weights(std::vector<double>(K, 0.0), costs, 1.0);
    adam_step(p, alpha_gradient(s, samples, w, p), adam, cfg);
    acc += expected_channels();
    if ((step + 1) % 50 == 0) {
      window_means.push_back(acc / 50.0);
      acc = 0.0;
    }
  }
  ASSERT_EQ(window_means.size(), 4u);
  for (std::size_t i = 1; i < window_means.size(); ++i) {
    EXPECT_LT(window_means[i], window_means[i - 1]) << "window " << i;
  }
}

}  // namespace
