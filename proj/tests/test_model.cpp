#include <chrono>
#include <cmath>

#include <gtest/gtest.h>

#include "nasforge/cost_model.hpp"
#include "nasforge/model.hpp"
#include "nasforge/rng.hpp"

using namespace nasforge;

namespace {

Tensor random_batch(const SearchSpace& s, int n, int frames, int spatial, Rng& rng) {
  Tensor b({n, s.input.channels, frames, spatial, spatial});
  b.fill_normal(rng, 1.0);
  return b;
}

// One group with a global-reasoning unit on a small frame; the core block
// structure under gradient test.
SearchSpace mini_glore_space() {
  SearchSpace s;
  s.input = {2, 3, 8};
  s.stem_channels = 4;
  GroupAxes g;
  g.types = {BlockType::t3_s3};
  g.channels = {4, 8, 4};
  g.expansion = {Rational{2, 1}, Rational{2, 1}, Rational{1, 1}};
  g.attention = {AttentionKind::PassThrough, AttentionKind::GloRe, AttentionKind::NonLocal};
  g.blocks = 1;
  g.stride = 2;
  s.groups.push_back(g);
  s.head = {8, 8, 3};
  return s;
}

ArchitectureSpec mini_arch(AttentionKind att) {
  ArchitectureSpec a;
  a.space_id = "mini";
  a.choices.push_back({BlockType::t3_s3, 8, Rational{2, 1}, att});
  return a;
}

}  // namespace

TEST(Model, ParamScalarsMatchCostModel) {
  // The cost model is the independent count: every learnable array the
  // builder emits must be accounted for, scalar for scalar.
  const SearchSpace paper = paper_space();
  for (const ArchitectureSpec& a : {preset_x3d_s(), preset_autox3d_s()}) {
    const ParamSet p = build_params(paper, a, 1);
    EXPECT_EQ(p.total_scalars(), cost_report(paper, a).params_total);
  }
  const SearchSpace toy = toy_space();
  Rng rng(42);
  for (int i = 0; i < 25; ++i) {
    const ArchitectureSpec a = sample_uniform(toy, rng, "toy");
    const ParamSet p = build_params(toy, a, 7);
    EXPECT_EQ(p.total_scalars(), cost_report(toy, a).params_total);
  }
  for (AttentionKind att :
       {AttentionKind::PassThrough, AttentionKind::GloRe, AttentionKind::NonLocal}) {
    const SearchSpace mini = mini_glore_space();
    const ArchitectureSpec a = mini_arch(att);
    EXPECT_EQ(build_params(mini, a, 3).total_scalars(), cost_report(mini, a).params_total);
  }
}

TEST(Model, DeterministicInit) {
  const SearchSpace toy = toy_space();
  Rng rng(9);
  const ArchitectureSpec a = sample_uniform(toy, rng, "toy");
  const ParamSet p1 = build_params(toy, a, 123);
  const ParamSet p2 = build_params(toy, a, 123);
  const ParamSet p3 = build_params(toy, a, 124);
  ASSERT_EQ(p1.names(), p2.names());
  bool any_diff = false;
  for (const std::string& n : p1.names()) {
    const Tensor& t1 = p1.at(n);
    ASSERT_EQ(t1.shape, p2.at(n).shape);
    for (std::size_t i = 0; i < t1.v.size(); ++i) {
      EXPECT_EQ(t1.v[i], p2.at(n).v[i]);
      if (t1.v[i] != p3.at(n).v[i]) any_diff = true;
    }
  }
  EXPECT_TRUE(any_diff);
}

TEST(Model, ForwardShapesAndEvalDeterminism) {
  const SearchSpace toy = toy_space();
  Rng rng(21);
  const ArchitectureSpec a = sample_uniform(toy, rng, "toy");
  const ParamSet p = build_params(toy, a, 5);
  RunningStats running;
  Tensor batch = random_batch(toy, 3, toy.input.frames, toy.input.spatial, rng);

  ForwardOptions train_opts;
  train_opts.running = &running;
  {
    Tape tape;
    BoundModel bm = model_forward(tape, toy, a, p, batch, train_opts);
    const std::vector<int> want{3, toy.head.num_classes};
    EXPECT_EQ(tape.value(bm.logits).shape, want);
    EXPECT_FALSE(running.empty());
  }

  ForwardOptions eval_opts;
  eval_opts.train = false;
  eval_opts.running = &running;
  Tensor l1, l2;
  {
    Tape tape;
    l1 = tape.value(model_forward(tape, toy, a, p, batch, eval_opts).logits);
  }
  {
    Tape tape;
    l2 = tape.value(model_forward(tape, toy, a, p, batch, eval_opts).logits);
  }
  ASSERT_EQ(l1.shape, l2.shape);
  for (std::size_t i = 0; i < l1.v.size(); ++i) EXPECT_EQ(l1.v[i], l2.v[i]);
}

TEST(Model, EvalIsPerSample) {
  // With fixed statistics each sample's logits cannot depend on the rest of
  // the batch.
  const SearchSpace toy = toy_space();
  Rng rng(33);
  const ArchitectureSpec a = sample_uniform(toy, rng, "toy");
  const ParamSet p = build_params(toy, a, 5);
  RunningStats running;
  Tensor batch = random_batch(toy, 4, toy.input.frames, toy.input.spatial, rng);
  ForwardOptions train_opts;
  train_opts.running = &running;
  {
    Tape tape;
    model_forward(tape, toy, a, p, batch, train_opts);
  }
  ForwardOptions eval_opts;
  eval_opts.train = false;
  eval_opts.running = &running;
  Tensor full, single;
  {
    Tape tape;
    full = tape.value(model_forward(tape, toy, a, p, batch, eval_opts).logits);
  }
  const std::int64_t per = batch.numel() / 4;
  Tensor one({1, batch.dim(1), batch.dim(2), batch.dim(3), batch.dim(4)});
  for (std::int64_t i = 0; i < per; ++i) {
    one.v[static_cast<std::size_t>(i)] = batch.v[static_cast<std::size_t>(2 * per + i)];
  }
  {
    Tape tape;
    single = tape.value(model_forward(tape, toy, a, p, one, eval_opts).logits);
  }
  const int K = toy.head.num_classes;
  for (int k = 0; k < K; ++k) {
    EXPECT_NEAR(full.v[static_cast<std::size_t>(2 * K + k)], single.v[static_cast<std::size_t>(k)],
                1e-9);
  }
}

TEST(Model, EvalWithoutStatsThrows) {
  const SearchSpace toy = toy_space();
  Rng rng(3);
  const ArchitectureSpec a = sample_uniform(toy, rng, "toy");
  const ParamSet p = build_params(toy, a, 5);
  Tensor batch = random_batch(toy, 2, toy.input.frames, toy.input.spatial, rng);
  ForwardOptions opts;
  opts.train = false;
  Tape tape;
  EXPECT_THROW(model_forward(tape, toy, a, p, batch, opts), std::invalid_argument);
}

TEST(Model, GradientsThroughBlockAndAttention) {
  // Full-network finite-difference check, one variant per attention kind.
  for (AttentionKind att :
       {AttentionKind::PassThrough, AttentionKind::GloRe, AttentionKind::NonLocal}) {
    const SearchSpace mini = mini_glore_space();
    const ArchitectureSpec a = mini_arch(att);
    Rng rng(61);
    const ParamSet base = build_params(mini, a, 11);
    Tensor batch = random_batch(mini, 2, mini.input.frames, mini.input.spatial, rng);
    const std::vector<int> labels{1, 2};

    std::vector<Tensor> inputs;
    for (const std::string& n : base.names()) inputs.push_back(base.at(n));

    auto rebuild = [&](const std::vector<Tensor>& ins) {
      ParamSet p;
      for (std::size_t i = 0; i < ins.size(); ++i) p.emplace(base.names()[i], ins[i]);
      return p;
    };
    auto run = [&](const std::vector<Tensor>& ins, std::vector<Tensor>* grads) {
      const ParamSet p = rebuild(ins);
      Tape tape;
      ForwardOptions opts;  // train mode, batch statistics
      BoundModel bm = model_forward(tape, mini, a, p, batch, opts);
      LossResult lr = tape.softmax_cross_entropy(bm.logits, labels);
      tape.backward(lr.loss);
      if (grads) {
        grads->clear();
        for (Var v : bm.vars) grads->push_back(tape.grad(v));
      }
      return tape.value(lr.loss).v[0];
    };

    std::vector<Tensor> analytic;
    run(inputs, &analytic);
    const double worst = finite_diff_check(
        [&](const std::vector<Tensor>& ins) { return run(ins, nullptr); }, inputs, analytic, rng,
        1e-4, 5);
    EXPECT_LT(worst, 1e-4) << "attention " << attention_name(att);
  }
}

TEST(Model, FewStepsReduceLoss) {
  const SearchSpace toy = toy_space();
  Rng rng(77);
  ArchitectureSpec a = sample_uniform(toy, rng, "toy");
  ParamSet p = build_params(toy, a, 19);
  Tensor batch = random_batch(toy, 6, toy.input.frames, toy.input.spatial, rng);
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    labels.push_back(static_cast<int>(rng.uniform_int(toy.head.num_classes)));
  }

  ParamSet vel;
  for (const std::string& n : p.names()) vel.emplace(n, Tensor(p.at(n).shape));
  const SgdConfig cfg{0.2, 0.9, 0.0};

  double first = 0.0, last = 0.0;
  for (int step = 0; step < 20; ++step) {
    Tape tape;
    ForwardOptions opts;
    BoundModel bm = model_forward(tape, toy, a, p, batch, opts);
    LossResult lr = tape.softmax_cross_entropy(bm.logits, labels);
    tape.backward(lr.loss);
    if (step == 0) first = tape.value(lr.loss).v[0];
    last = tape.value(lr.loss).v[0];
    for (std::size_t i = 0; i < bm.names.size(); ++i) {
      sgd_update(p.at(bm.names[i]), tape.grad(bm.vars[i]), vel.at(bm.names[i]), cfg);
    }
  }
  EXPECT_LT(last, first * 0.7) << "first " << first << " last " << last;
}
