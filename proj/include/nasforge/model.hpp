#pragma once

// Builds and runs a standalone network for one ArchitectureSpec. The layer
// walk mirrors cost_model exactly, so the parameter count of a built network
// equals cost_report(...).params_total scalar for scalar.
//
// Parameter names are the contract shared with checkpoints and the
// weight-sharing trainer:
//   stem.w stem.bn.{g,b}
//   g{i}.b{j}.{expand,dw,proj}.w  g{i}.b{j}.bn{1,2,3}.{g,b}
//   g{i}.att.reduce.w .reduce_bn.{g,b} .nodeproj.w .gcn_node.w .gcn_state.w
//        .expand.w .expand_bn.{g,b}               (glore)
//   g{i}.att.{theta,phi,gmap,out}.w .out_bn.{g,b}  (non_local)
//   head.proj.w head.bn.{g,b} head.fc1.{w,b} head.fc2.{w,b}

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "nasforge/arch_space.hpp"
#include "nasforge/checkpoint.hpp"
#include "nasforge/cost_model.hpp"
#include "nasforge/rng.hpp"
#include "nasforge/tensor.hpp"

namespace nasforge {

struct BnState {
  Tensor mean;
  Tensor var;
};

using RunningStats = std::unordered_map<std::string, BnState>;

struct ForwardOptions {
  bool train = true;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  // Updated each train forward; required source of statistics in eval.
  RunningStats* running = nullptr;
};

struct BoundModel {
  std::vector<std::string> names;
  std::vector<Var> vars;
  Var logits;
};

namespace detail {

inline Tensor he_conv(std::vector<int> shape, Rng rng) {
  const std::int64_t fan_in =
      static_cast<std::int64_t>(shape[1]) * shape[2] * shape[3] * shape[4];
  Tensor t(std::move(shape));
  t.fill_normal(rng, std::sqrt(2.0 / static_cast<double>(fan_in)));
  return t;
}

inline Tensor dense_init(std::vector<int> shape, double scale, Rng rng) {
  const int fan_in = shape.back();
  Tensor t(std::move(shape));
  t.fill_normal(rng, std::sqrt(scale / static_cast<double>(fan_in)));
  return t;
}

inline void add_bn(ParamSet& p, const std::string& base, int channels) {
  Tensor g({channels});
  for (double& x : g.v) x = 1.0;
  p.emplace(base + ".g", std::move(g));
  p.emplace(base + ".b", Tensor({channels}));
}

}  // namespace detail

// Walks the arch in the same order as cost_report and emits one named tensor
// per learnable array. Initialization is derived per name from the seed, so
// two builds of the same (space, arch, seed) agree bit for bit and adding a
// parameter elsewhere shifts nothing.
inline ParamSet build_params(const SearchSpace& space, const ArchitectureSpec& arch,
                             std::uint64_t seed, const GloReConfig& glore_cfg = {}) {
  if (arch.choices.size() != space.groups.size()) {
    throw std::invalid_argument("build_params: arch/space group count mismatch");
  }
  const Rng root(seed);
  ParamSet p;
  auto conv = [&](const std::string& name, std::vector<int> shape) {
    p.emplace(name, detail::he_conv(std::move(shape), root.split(name)));
  };

  conv("stem.w", {space.stem_channels, space.input.channels, 1, 3, 3});
  detail::add_bn(p, "stem.bn", space.stem_channels);

  int prev = space.stem_channels;
  for (std::size_t g = 0; g < space.groups.size(); ++g) {
    const GroupAxes& ax = space.groups[g];
    const GroupChoice& ch = arch.choices[g];
    const int kt = temporal_kernel(ch.type);
    const int ks = spatial_kernel(ch.type);
    for (int b = 0; b < ax.blocks; ++b) {
      const int c_in = b == 0 ? prev : ch.channels;
      const int c_mid = mid_channels(ch.expansion, c_in);
      const std::string base = "g" + std::to_string(g) + ".b" + std::to_string(b);
      conv(base + ".expand.w", {c_mid, c_in, 1, 1, 1});
      detail::add_bn(p, base + ".bn1", c_mid);
      conv(base + ".dw.w", {c_mid, 1, kt, ks, ks});
      detail::add_bn(p, base + ".bn2", c_mid);
      conv(base + ".proj.w", {ch.channels, c_mid, 1, 1, 1});
      detail::add_bn(p, base + ".bn3", ch.channels);
    }
    if (ch.attention != AttentionKind::PassThrough) {
      const std::string base = "g" + std::to_string(g) + ".att";
      const int c = ch.channels;
      if (ch.attention == AttentionKind::GloRe) {
        const int cr = glore_reduced(c, glore_cfg);
        const int nn = glore_nodes(c, glore_cfg);
        conv(base + ".reduce.w", {cr, c, 1, 1, 1});
        detail::add_bn(p, base + ".reduce_bn", cr);
        conv(base + ".nodeproj.w", {nn, c, 1, 1, 1});
        p.emplace(base + ".gcn_node.w",
                  detail::dense_init({nn, nn}, 1.0, root.split(base + ".gcn_node.w")));
        p.emplace(base + ".gcn_state.w",
                  detail::dense_init({cr, cr}, 2.0, root.split(base + ".gcn_state.w")));
        conv(base + ".expand.w", {c, cr, 1, 1, 1});
        detail::add_bn(p, base + ".expand_bn", c);
      } else {
        const int chn = glore_reduced(c, GloReConfig{2, 4});
        conv(base + ".theta.w", {chn, c, 1, 1, 1});
        conv(base + ".phi.w", {chn, c, 1, 1, 1});
        conv(base + ".gmap.w", {chn, c, 1, 1, 1});
        conv(base + ".out.w", {c, chn, 1, 1, 1});
        detail::add_bn(p, base + ".out_bn", c);
      }
    }
    prev = ch.channels;
  }

  conv("head.proj.w", {space.head.pool_dim, prev, 1, 1, 1});
  detail::add_bn(p, "head.bn", space.head.pool_dim);
  p.emplace("head.fc1.w",
            detail::dense_init({space.head.fc_dim, space.head.pool_dim}, 2.0,
                               root.split("head.fc1.w")));
  p.emplace("head.fc1.b", Tensor({space.head.fc_dim}));
  p.emplace("head.fc2.w",
            detail::dense_init({space.head.num_classes, space.head.fc_dim}, 1.0,
                               root.split("head.fc2.w")));
  p.emplace("head.fc2.b", Tensor({space.head.num_classes}));
  return p;
}

inline BoundModel model_forward(Tape& tape, const SearchSpace& space,
                                const ArchitectureSpec& arch, const ParamSet& params,
                                const Tensor& batch, const ForwardOptions& opts,
                                const GloReConfig& glore_cfg = {}) {
  if (batch.ndim() != 5) throw std::invalid_argument("model_forward: batch rank must be 5");
  if (batch.dim(1) != space.input.channels) {
    throw std::invalid_argument("model_forward: batch channels mismatch");
  }
  if (arch.choices.size() != space.groups.size()) {
    throw std::invalid_argument("model_forward: arch/space group count mismatch");
  }
  BoundModel bm;
  auto bind = [&](const std::string& name) {
    Var v = tape.input(params.at(name), true);
    bm.names.push_back(name);
    bm.vars.push_back(v);
    return v;
  };
  auto bn = [&](Var x, const std::string& base) {
    Var g = bind(base + ".g");
    Var b = bind(base + ".b");
    if (opts.train) {
      BatchStats stats;
      Var y = tape.batchnorm3d(x, g, b, opts.bn_eps, opts.running ? &stats : nullptr);
      if (opts.running) {
        auto it = opts.running->find(base);
        const int c = static_cast<int>(stats.mean.size());
        if (it == opts.running->end()) {
          BnState st{Tensor({c}, stats.mean), Tensor({c}, stats.var)};
          opts.running->emplace(base, std::move(st));
        } else {
          for (int i = 0; i < c; ++i) {
            it->second.mean.v[static_cast<std::size_t>(i)] =
                (1.0 - opts.bn_momentum) * it->second.mean.v[static_cast<std::size_t>(i)] +
                opts.bn_momentum * stats.mean[static_cast<std::size_t>(i)];
            it->second.var.v[static_cast<std::size_t>(i)] =
                (1.0 - opts.bn_momentum) * it->second.var.v[static_cast<std::size_t>(i)] +
                opts.bn_momentum * stats.var[static_cast<std::size_t>(i)];
          }
        }
      }
      return y;
    }
    if (!opts.running || !opts.running->count(base)) {
      throw std::invalid_argument("model_forward: eval needs running stats for " + base);
    }
    const BnState& st = opts.running->at(base);
    return tape.batchnorm3d_eval(x, g, b, st.mean, st.var, opts.bn_eps);
  };

  Var x = tape.input(batch, false);
  x = tape.relu(bn(tape.conv3d(x, bind("stem.w"), 2, 1), "stem.bn"));

  int prev = space.stem_channels;
  for (std::size_t g = 0; g < space.groups.size(); ++g) {
    const GroupAxes& ax = space.groups[g];
    const GroupChoice& ch = arch.choices[g];
    for (int b = 0; b < ax.blocks; ++b) {
      const int stride = b == 0 ? ax.stride : 1;
      const int c_in = b == 0 ? prev : ch.channels;
      const int c_mid = mid_channels(ch.expansion, c_in);
      const std::string base = "g" + std::to_string(g) + ".b" + std::to_string(b);
      Var in = x;
      x = tape.relu(bn(tape.conv3d(x, bind(base + ".expand.w"), 1, 1), base + ".bn1"));
      x = tape.relu(bn(tape.conv3d(x, bind(base + ".dw.w"), stride, c_mid), base + ".bn2"));
      x = bn(tape.conv3d(x, bind(base + ".proj.w"), 1, 1), base + ".bn3");
      if (c_in == ch.channels && stride == 1) x = tape.add(x, in);
    }
    if (ch.attention != AttentionKind::PassThrough) {
      const std::string base = "g" + std::to_string(g) + ".att";
      // Copy: references into the tape go stale as ops append nodes.
      const std::vector<int> cs = tape.value(x).shape;
      const int N = cs[0], C = cs[1];
      const int L = cs[2] * cs[3] * cs[4];
      Var in = x;
      if (ch.attention == AttentionKind::GloRe) {
        const int cr = glore_reduced(C, glore_cfg);
        const int nn = glore_nodes(C, glore_cfg);
        Var xr = tape.relu(
            bn(tape.conv3d(x, bind(base + ".reduce.w"), 1, 1), base + ".reduce_bn"));
        Var bmap = tape.conv3d(x, bind(base + ".nodeproj.w"), 1, 1);
        Var xr2 = tape.reshape(xr, {N, cr, L});
        Var b2 = tape.reshape(bmap, {N, nn, L});
        // Nodes carry state: z = b x_r^T, graph update (I - A) z W.
        Var z = tape.bmm(b2, tape.transpose12(xr2));
        Var zg = tape.add(z, tape.mul_scalar(tape.matmul_w_left(bind(base + ".gcn_node.w"), z),
                                             -1.0));
        Var zs = tape.relu(tape.matmul_w(zg, bind(base + ".gcn_state.w")));
        Var back = tape.bmm(tape.transpose12(zs), b2);           // [N, cr, L]
        Var back5 = tape.reshape(back, {N, cr, cs[2], cs[3], cs[4]});
        Var ex = bn(tape.conv3d(back5, bind(base + ".expand.w"), 1, 1), base + ".expand_bn");
        x = tape.add(in, ex);
      } else {
        const int chn = glore_reduced(C, GloReConfig{2, 4});
        Var th = tape.reshape(tape.conv3d(x, bind(base + ".theta.w"), 1, 1), {N, chn, L});
        Var ph = tape.reshape(tape.conv3d(x, bind(base + ".phi.w"), 1, 1), {N, chn, L});
        Var gm = tape.reshape(tape.conv3d(x, bind(base + ".gmap.w"), 1, 1), {N, chn, L});
        Var attn = tape.softmax_lastdim(tape.bmm(tape.transpose12(th), ph));  // [N, L, L]
        Var y = tape.bmm(gm, tape.transpose12(attn));                          // [N, chn, L]
        Var y5 = tape.reshape(y, {N, chn, cs[2], cs[3], cs[4]});
        Var ex = bn(tape.conv3d(y5, bind(base + ".out.w"), 1, 1), base + ".out_bn");
        x = tape.add(in, ex);
      }
    }
    prev = ch.channels;
  }

  x = tape.relu(bn(tape.conv3d(x, bind("head.proj.w"), 1, 1), "head.bn"));
  Var pooled = tape.global_avg_pool(x);
  // Bind order must follow build_params order; argument evaluation order is
  // unspecified, so two binds never share one call expression.
  Var fc1w = bind("head.fc1.w");
  Var fc1b = bind("head.fc1.b");
  Var h = tape.relu(tape.linear(pooled, fc1w, fc1b));
  Var fc2w = bind("head.fc2.w");
  Var fc2b = bind("head.fc2.b");
  bm.logits = tape.linear(h, fc2w, fc2b);
  return bm;
}

}  // namespace nasforge
