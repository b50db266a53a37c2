#pragma once

// Analytical FLOPs and parameter accounting for architectures drawn from a
// SearchSpace. One multiply-accumulate counts as one FLOP. Convolution cost
// is kernel size times output positions, including positions that read
// zero padding. Normalization and activation FLOPs are excluded;
// normalization parameters are included. Biases exist only on head fc layers.

#include <cstdint>
#include <string>
#include <vector>

#include "nasforge/arch_space.hpp"

namespace nasforge {

struct TensorShape {
  int c = 0;
  int t = 0;
  int h = 0;
  int w = 0;

  std::int64_t positions() const {
    return static_cast<std::int64_t>(t) * h * w;
  }
};

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Mid width follows the block input; 2.25 * 24 = 54 exactly.
inline int mid_channels(const Rational& expansion, int c_in) {
  return static_cast<int>(expansion.round_half_up_times(c_in));
}

inline void check_mbconv3d(const GroupChoice& choice, const TensorShape& in, int out_channels,
                           int stride) {
  if (in.c < 1 || in.t < 1 || in.h < 1 || in.w < 1) {
    throw std::invalid_argument("mbconv3d: zero-sized input shape");
  }
  if (out_channels < 1) throw std::invalid_argument("mbconv3d: out_channels must be positive");
  if (stride != 1 && stride != 2) throw std::invalid_argument("mbconv3d: stride must be 1 or 2");
  if (mid_channels(choice.expansion, in.c) < 1) {
    throw std::invalid_argument("mbconv3d: expansion " + choice.expansion.str() +
                                " yields zero mid channels at width " + std::to_string(in.c));
  }
}

// Inverted bottleneck: pointwise expand, depthwise t x s^2, pointwise
// project. The spatial stride lives in the depthwise convolution, so the
// expand output is still at the input resolution; the temporal dimension is
// never strided.
inline std::int64_t flops_mbconv3d(const GroupChoice& choice, const TensorShape& in,
                                   int out_channels, int stride) {
  check_mbconv3d(choice, in, out_channels, stride);
  const int c_mid = mid_channels(choice.expansion, in.c);
  const int h2 = ceil_div(in.h, stride);
  const int w2 = ceil_div(in.w, stride);
  const std::int64_t pos_in = in.positions();
  const std::int64_t pos_out = static_cast<std::int64_t>(in.t) * h2 * w2;
  const std::int64_t k = static_cast<std::int64_t>(temporal_kernel(choice.type)) *
                         spatial_kernel(choice.type) * spatial_kernel(choice.type);
  return static_cast<std::int64_t>(in.c) * c_mid * pos_in +
         static_cast<std::int64_t>(c_mid) * k * pos_out +
         static_cast<std::int64_t>(c_mid) * out_channels * pos_out;
}

inline std::int64_t params_mbconv3d(const GroupChoice& choice, int c_in, int out_channels) {
  check_mbconv3d(choice, TensorShape{c_in, 1, 1, 1}, out_channels, 1);
  const int c_mid = mid_channels(choice.expansion, c_in);
  const std::int64_t k = static_cast<std::int64_t>(temporal_kernel(choice.type)) *
                         spatial_kernel(choice.type) * spatial_kernel(choice.type);
  return static_cast<std::int64_t>(c_in) * c_mid + static_cast<std::int64_t>(c_mid) * k +
         static_cast<std::int64_t>(c_mid) * out_channels +
         2LL * (2LL * c_mid + out_channels);
}

// Internal sizing of the global-reasoning unit: channel reduction C/reduce_div
// and C/node_div graph nodes.
struct GloReConfig {
  int reduce_div = 2;
  int node_div = 4;
};

inline int glore_reduced(int c, const GloReConfig& cfg = {}) {
  if (c % cfg.reduce_div != 0) {
    throw std::invalid_argument("glore: channels " + std::to_string(c) +
                                " not divisible by " + std::to_string(cfg.reduce_div));
  }
  return c / cfg.reduce_div;
}

inline int glore_nodes(int c, const GloReConfig& cfg = {}) {
  const int n = c / cfg.node_div;
  return n > 0 ? n : 1;
}

// glore: reduce 1x1 (C -> Cr), node projection 1x1 (C -> N), projection into
// node space (N x Cr x L), two node-space 1d convolutions (N x N over nodes,
// Cr x Cr over states), reverse projection, expand 1x1 (Cr -> C).
// non_local: embedded-gaussian with a C/2 bottleneck; the two L x L terms
// dominate at video resolutions.
inline std::int64_t flops_attention(AttentionKind kind, const TensorShape& shape,
                                    const GloReConfig& cfg = {}) {
  if (kind == AttentionKind::PassThrough) return 0;
  const std::int64_t L = shape.positions();
  const int c = shape.c;
  if (kind == AttentionKind::GloRe) {
    const std::int64_t cr = glore_reduced(c, cfg);
    const std::int64_t n = glore_nodes(c, cfg);
    return static_cast<std::int64_t>(c) * cr * L + static_cast<std::int64_t>(c) * n * L +
           2LL * n * cr * L + n * n * cr + n * cr * cr + cr * c * L;
  }
  const std::int64_t ch = glore_reduced(c, GloReConfig{2, 4});
  return 3LL * c * ch * L + 2LL * L * L * ch + ch * c * L;
}

inline std::int64_t params_attention(AttentionKind kind, int c, const GloReConfig& cfg = {}) {
  if (kind == AttentionKind::PassThrough) return 0;
  if (kind == AttentionKind::GloRe) {
    const std::int64_t cr = glore_reduced(c, cfg);
    const std::int64_t n = glore_nodes(c, cfg);
    return static_cast<std::int64_t>(c) * cr + 2 * cr + static_cast<std::int64_t>(c) * n +
           n * n + cr * cr + cr * c + 2 * c;
  }
  const std::int64_t ch = glore_reduced(c, GloReConfig{2, 4});
  return 4LL * c * ch + 2 * c;
}

struct CostLine {
  std::string name;
  std::int64_t flops = 0;
  std::int64_t params = 0;
  TensorShape out;
};

struct CostReport {
  std::vector<CostLine> lines;
  std::int64_t flops_total = 0;
  std::int64_t params_total = 0;
};

// Walks stem, groups (attention applied at each group output), and head for
// a single clip of the given shape. Costs are defined for any structurally
// sound arch: one choice per group, positive widths, attention channel
// divisibility. Grid membership is validate_spec's concern, left to the
// caller, so off-grid widths (a hand-edited arch, a searched result on a
// finer grid) still cost out. Structural violations throw, every one listed
// with its group name.
inline CostReport cost_report(const SearchSpace& space, const ArchitectureSpec& arch,
                              const TensorShape& input, const GloReConfig& glore_cfg = {}) {
  if (arch.choices.size() != space.groups.size()) {
    throw std::invalid_argument("cost_report: arch has " + std::to_string(arch.choices.size()) +
                                " choices for " + std::to_string(space.groups.size()) +
                                " groups");
  }
  if (input.c <= 0 || input.t <= 0 || input.h <= 0 || input.w <= 0) {
    throw std::invalid_argument("cost_report: input dimensions must be positive");
  }
  {
    std::vector<std::string> errs;
    int prev = space.stem_channels;
    for (std::size_t g = 0; g < space.groups.size(); ++g) {
      const GroupChoice& ch = arch.choices[g];
      const std::string tag = "group " + std::to_string(g) + ": ";
      if (ch.channels < 1) {
        errs.push_back(tag + "channels must be positive");
        prev = 1;
        continue;
      }
      if (mid_channels(ch.expansion, prev) < 1 ||
          (space.groups[g].blocks > 1 && mid_channels(ch.expansion, ch.channels) < 1)) {
        errs.push_back(tag + "expansion " + ch.expansion.str() + " yields zero mid channels");
      }
      if (ch.attention != AttentionKind::PassThrough) {
        const int div = ch.attention == AttentionKind::GloRe ? glore_cfg.reduce_div : 2;
        if (ch.channels % div != 0) {
          errs.push_back(tag + "channels " + std::to_string(ch.channels) +
                         " not divisible by " + std::to_string(div) + " for " +
                         attention_name(ch.attention));
        }
      }
      prev = ch.channels;
    }
    if (!errs.empty()) {
      std::string msg = "cost_report: unbuildable architecture:";
      for (const std::string& e : errs) msg += "\n  " + e;
      throw std::invalid_argument(msg);
    }
  }
  CostReport rep;
  auto push = [&rep](const std::string& name, std::int64_t flops, std::int64_t params,
                     TensorShape out) {
    rep.lines.push_back({name, flops, params, out});
    rep.flops_total += flops;
    rep.params_total += params;
  };

  // Stem: 1x3^2 conv, spatial stride 2, batchnorm.
  TensorShape cur{space.stem_channels, input.t, ceil_div(input.h, 2), ceil_div(input.w, 2)};
  push("stem",
       static_cast<std::int64_t>(input.c) * space.stem_channels * 9 * cur.positions(),
       static_cast<std::int64_t>(input.c) * space.stem_channels * 9 + 2LL * space.stem_channels,
       cur);

  for (std::size_t g = 0; g < space.groups.size(); ++g) {
    const GroupAxes& ax = space.groups[g];
    const GroupChoice& ch = arch.choices[g];
    for (int b = 0; b < ax.blocks; ++b) {
      const int stride = b == 0 ? ax.stride : 1;
      const TensorShape in = cur;
      cur = TensorShape{ch.channels, in.t, ceil_div(in.h, stride), ceil_div(in.w, stride)};
      push("g" + std::to_string(g) + ".b" + std::to_string(b),
           flops_mbconv3d(ch, in, ch.channels, stride),
           params_mbconv3d(ch, in.c, ch.channels), cur);
    }
    if (ch.attention != AttentionKind::PassThrough) {
      try {
        push("g" + std::to_string(g) + ".att", flops_attention(ch.attention, cur, glore_cfg),
             params_attention(ch.attention, cur.c, glore_cfg), cur);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("group " + std::to_string(g) + ": " + e.what());
      }
    }
  }

  // Head: pointwise projection to pool_dim, global average pool, two fc
  // layers with biases. Fc cost is per clip.
  const TensorShape pre = cur;
  cur = TensorShape{space.head.pool_dim, pre.t, pre.h, pre.w};
  push("head.proj",
       static_cast<std::int64_t>(pre.c) * space.head.pool_dim * pre.positions(),
       static_cast<std::int64_t>(pre.c) * space.head.pool_dim + 2LL * space.head.pool_dim, cur);
  cur = TensorShape{space.head.pool_dim, 1, 1, 1};
  push("head.pool", 0, 0, cur);
  cur = TensorShape{space.head.fc_dim, 1, 1, 1};
  push("head.fc1",
       static_cast<std::int64_t>(space.head.pool_dim) * space.head.fc_dim,
       static_cast<std::int64_t>(space.head.pool_dim) * space.head.fc_dim + space.head.fc_dim,
       cur);
  cur = TensorShape{space.head.num_classes, 1, 1, 1};
  push("head.fc2",
       static_cast<std::int64_t>(space.head.fc_dim) * space.head.num_classes,
       static_cast<std::int64_t>(space.head.fc_dim) * space.head.num_classes +
           space.head.num_classes,
       cur);
  return rep;
}

inline CostReport cost_report(const SearchSpace& space, const ArchitectureSpec& arch) {
  return cost_report(space, arch,
                     TensorShape{space.input.channels, space.input.frames, space.input.spatial,
                                 space.input.spatial});
}

// Linear penalty above the budget, zero below: max(flops - target, 0) / target.
inline double hinge_cost(double flops, double target) {
  if (!(target > 0.0)) throw std::invalid_argument("hinge_cost: target must be positive");
  if (flops < 0.0) throw std::invalid_argument("hinge_cost: flops must be nonnegative");
  const double over = flops - target;
  return over > 0.0 ? over / target : 0.0;
}

}  // namespace nasforge
