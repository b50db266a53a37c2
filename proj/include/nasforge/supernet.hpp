#pragma once

// Weight-shared network over a SearchSpace. One super tensor per standalone
// parameter name, sized to the per-axis maxima of its group; a forward pass
// activates exactly one candidate by slicing, so memory stays within 2x of
// the largest single architecture.
//
// Slicing geometry. Channel and expansion grids must be uniform with
// min == step, so option i (0-based) spans exactly i+1 equal parts and any
// part subset of the right cardinality reproduces the standalone shape.
// Part subsets come from the group's FairPattern (fair mode balances per-part
// update rates; naive mode degenerates to prefix slices). Kernel axes slice
// centered: a t3_s3 choice reads the middle 3x3^2 of a 5x5^2 super kernel.
// Attention parameters are kept per kind with no cross-kind sharing; their
// internal widths (reduction, node count) slice as prefixes while the block
// width axes follow the channel part map. Norm parameters slice like the
// convolution axis they normalize.
//
// Execution is gather-based: activation materializes standalone-shaped
// tensors, runs the ordinary model forward, and scatter-adds gradients back
// into super-shaped accumulators. Extraction for a derived architecture is
// the same gather, which makes activated and extracted forwards agree
// exactly. Norm running statistics live at super width next to the weights:
// training forwards refresh only the activated positions, so a part's
// statistics are exactly as fresh as its update rate, and eval-mode scoring
// against those statistics feels the difference.

#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nasforge/arch_space.hpp"
#include "nasforge/checkpoint.hpp"
#include "nasforge/cost_model.hpp"
#include "nasforge/fair_select.hpp"
#include "nasforge/model.hpp"
#include "nasforge/rng.hpp"
#include "nasforge/tensor.hpp"

namespace nasforge {

enum class PatternMode { Fair, Naive };

inline std::string pattern_mode_name(PatternMode m) {
  return m == PatternMode::Fair ? "fair" : "naive";
}

inline PatternMode parse_pattern_mode(const std::string& s) {
  if (s == "fair") return PatternMode::Fair;
  if (s == "naive") return PatternMode::Naive;
  throw std::invalid_argument("unknown pattern mode: " + s);
}

struct Supernet {
  SearchSpace space;
  PatternMode mode = PatternMode::Fair;
  GloReConfig glore_cfg;
  std::uint64_t seed = 0;
  ParamSet weights;
  // One pattern per group and axis, fixed for the whole search.
  std::vector<FairPattern> channel_patterns;
  std::vector<FairPattern> expansion_patterns;
};

// One standalone tensor: its shared super tensor (same name) plus, per axis,
// the super-axis row picked for each standalone index.
struct SliceSpec {
  std::string name;
  std::vector<std::vector<int>> axis_maps;
};

struct ActivationPlan {
  ArchitectureSpec arch;
  std::vector<SliceSpec> slices;  // in standalone parameter order
  std::unordered_map<std::string, std::size_t> by_name;
};

namespace detail {

inline std::vector<int> identity_map(int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i;
  return m;
}

inline std::vector<int> centered_map(int k, int super_k) {
  const int off = (super_k - k) / 2;
  std::vector<int> m(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) m[static_cast<std::size_t>(i)] = off + i;
  return m;
}

// Option index i owns rows[i] of the pattern; each part is a contiguous run
// of part_size super rows, concatenated in ascending part order.
inline std::vector<int> parts_map(const FairPattern& pat, int option, int part_size) {
  std::vector<int> m;
  for (int part : candidate_parts(pat, option)) {
    for (int r = 0; r < part_size; ++r) m.push_back(part * part_size + r);
  }
  return m;
}

inline int max_mid_channels(const GroupAxes& ax, int max_c_in) {
  return mid_channels(ax.expansion.max, max_c_in);
}

inline bool axis_has(const std::vector<AttentionKind>& axis, AttentionKind k) {
  for (AttentionKind a : axis) {
    if (a == k) return true;
  }
  return false;
}

}  // namespace detail

// Rejects spaces whose grids cannot tile into equal parts. Both modes share
// the part machinery, so the geometry requirement applies to both.
inline void check_sliceable(const SearchSpace& space, const GloReConfig& cfg = {}) {
  int prev_max = space.stem_channels;
  std::vector<int> prev_values = {space.stem_channels};
  for (std::size_t g = 0; g < space.groups.size(); ++g) {
    const GroupAxes& ax = space.groups[g];
    const std::string tag = "supernet: group " + std::to_string(g) + ": ";
    if (ax.channels.min != ax.channels.step) {
      throw std::invalid_argument(tag + "channel grid needs min == step, got min=" +
                                  std::to_string(ax.channels.min) +
                                  " step=" + std::to_string(ax.channels.step));
    }
    if (!(ax.expansion.min == ax.expansion.step)) {
      throw std::invalid_argument(tag + "expansion grid needs min == step, got min=" +
                                  ax.expansion.min.str() + " step=" + ax.expansion.step.str());
    }
    const Rational e1 = ax.expansion.min;
    auto check_inputs = [&](const std::vector<int>& c_ins) {
      for (int c_in : c_ins) {
        if ((e1.num * c_in) % e1.den != 0) {
          throw std::invalid_argument(tag + "expansion step " + e1.str() +
                                      " times input width " + std::to_string(c_in) +
                                      " is not an integer part size");
        }
      }
    };
    check_inputs(prev_values);
    if (ax.blocks > 1) check_inputs(ax.channels.members());
    for (AttentionKind k : ax.attention) {
      if (k == AttentionKind::PassThrough) continue;
      const int div = k == AttentionKind::GloRe
                          ? cfg.reduce_div * cfg.node_div / std::gcd(cfg.reduce_div, cfg.node_div)
                          : 2;
      for (int c : ax.channels.members()) {
        if (c % div != 0) {
          throw std::invalid_argument(tag + "channel " + std::to_string(c) +
                                      " not divisible by " + std::to_string(div) + " for " +
                                      attention_name(k));
        }
      }
    }
    prev_max = ax.channels.max;
    prev_values = ax.channels.members();
  }
  (void)prev_max;
}

inline Supernet build_supernet(const SearchSpace& space, PatternMode mode, std::uint64_t seed,
                               const GloReConfig& glore_cfg = {}) {
  check_sliceable(space, glore_cfg);
  Supernet sn;
  sn.space = space;
  sn.mode = mode;
  sn.glore_cfg = glore_cfg;
  sn.seed = seed;

  const Rng root(seed);
  ParamSet& p = sn.weights;
  auto conv = [&](const std::string& name, std::vector<int> shape) {
    p.emplace(name, detail::he_conv(std::move(shape), root.split(name)));
  };

  conv("stem.w", {space.stem_channels, space.input.channels, 1, 3, 3});
  detail::add_bn(p, "stem.bn", space.stem_channels);

  int prev_max = space.stem_channels;
  for (std::size_t g = 0; g < space.groups.size(); ++g) {
    const GroupAxes& ax = space.groups[g];
    const int max_c = ax.channels.max;
    sn.channel_patterns.push_back(mode == PatternMode::Fair ? fair_pattern(ax.channels.size())
                                                            : naive_pattern(ax.channels.size()));
    sn.expansion_patterns.push_back(mode == PatternMode::Fair
                                        ? fair_pattern(ax.expansion.size())
                                        : naive_pattern(ax.expansion.size()));
    int max_kt = 1, max_ks = 1;
    for (BlockType t : ax.types) {
      max_kt = std::max(max_kt, temporal_kernel(t));
      max_ks = std::max(max_ks, spatial_kernel(t));
    }
    for (int b = 0; b < ax.blocks; ++b) {
      const int max_c_in = b == 0 ? prev_max : max_c;
      const int max_mid = detail::max_mid_channels(ax, max_c_in);
      const std::string base = "g" + std::to_string(g) + ".b" + std::to_string(b);
      conv(base + ".expand.w", {max_mid, max_c_in, 1, 1, 1});
      detail::add_bn(p, base + ".bn1", max_mid);
      conv(base + ".dw.w", {max_mid, 1, max_kt, max_ks, max_ks});
      detail::add_bn(p, base + ".bn2", max_mid);
      conv(base + ".proj.w", {max_c, max_mid, 1, 1, 1});
      detail::add_bn(p, base + ".bn3", max_c);
    }
    const std::string base = "g" + std::to_string(g) + ".att";
    if (detail::axis_has(ax.attention, AttentionKind::GloRe)) {
      const int cr = glore_reduced(max_c, glore_cfg);
      const int nn = glore_nodes(max_c, glore_cfg);
      conv(base + ".reduce.w", {cr, max_c, 1, 1, 1});
      detail::add_bn(p, base + ".reduce_bn", cr);
      conv(base + ".nodeproj.w", {nn, max_c, 1, 1, 1});
      p.emplace(base + ".gcn_node.w",
                detail::dense_init({nn, nn}, 1.0, root.split(base + ".gcn_node.w")));
      p.emplace(base + ".gcn_state.w",
                detail::dense_init({cr, cr}, 2.0, root.split(base + ".gcn_state.w")));
      conv(base + ".expand.w", {max_c, cr, 1, 1, 1});
      detail::add_bn(p, base + ".expand_bn", max_c);
    }
    if (detail::axis_has(ax.attention, AttentionKind::NonLocal)) {
      const int chn = glore_reduced(max_c, GloReConfig{2, 4});
      conv(base + ".theta.w", {chn, max_c, 1, 1, 1});
      conv(base + ".phi.w", {chn, max_c, 1, 1, 1});
      conv(base + ".gmap.w", {chn, max_c, 1, 1, 1});
      conv(base + ".out.w", {max_c, chn, 1, 1, 1});
      detail::add_bn(p, base + ".out_bn", max_c);
    }
    prev_max = max_c;
  }

  conv("head.proj.w", {space.head.pool_dim, prev_max, 1, 1, 1});
  detail::add_bn(p, "head.bn", space.head.pool_dim);
  p.emplace("head.fc1.w", detail::dense_init({space.head.fc_dim, space.head.pool_dim}, 2.0,
                                             root.split("head.fc1.w")));
  p.emplace("head.fc1.b", Tensor({space.head.fc_dim}));
  p.emplace("head.fc2.w", detail::dense_init({space.head.num_classes, space.head.fc_dim}, 1.0,
                                             root.split("head.fc2.w")));
  p.emplace("head.fc2.b", Tensor({space.head.num_classes}));
  return sn;
}

inline ActivationPlan activate(const Supernet& sn, const ArchitectureSpec& arch) {
  const ValidationResult vr = validate_spec(sn.space, arch);
  if (!vr.ok) {
    std::string msg = "activate: arch invalid:";
    for (const std::string& e : vr.errors) msg += " " + e + ";";
    throw std::invalid_argument(msg);
  }
  const SearchSpace& space = sn.space;
  ActivationPlan plan;
  plan.arch = arch;
  auto add = [&](const std::string& name, std::vector<std::vector<int>> maps) {
    plan.by_name.emplace(name, plan.slices.size());
    plan.slices.push_back(SliceSpec{name, std::move(maps)});
  };
  auto add_bn_slice = [&](const std::string& base, const std::vector<int>& width_map) {
    add(base + ".g", {width_map});
    add(base + ".b", {width_map});
  };

  const std::vector<int> one = detail::identity_map(1);
  add("stem.w", {detail::identity_map(space.stem_channels),
                 detail::identity_map(space.input.channels), one, detail::identity_map(3),
                 detail::identity_map(3)});
  add_bn_slice("stem.bn", detail::identity_map(space.stem_channels));

  std::vector<int> prev_map = detail::identity_map(space.stem_channels);
  for (std::size_t g = 0; g < space.groups.size(); ++g) {
    const GroupAxes& ax = space.groups[g];
    const GroupChoice& ch = arch.choices[g];
    const int c_idx = ax.channels.index_of(ch.channels);
    const int e_idx = ax.expansion.index_of(ch.expansion);
    const std::vector<int> chan_map =
        detail::parts_map(sn.channel_patterns[g], c_idx, ax.channels.step);
    const int kt = temporal_kernel(ch.type);
    const int ks = spatial_kernel(ch.type);
    int max_kt = 1, max_ks = 1;
    for (BlockType t : ax.types) {
      max_kt = std::max(max_kt, temporal_kernel(t));
      max_ks = std::max(max_ks, spatial_kernel(t));
    }
    for (int b = 0; b < ax.blocks; ++b) {
      const std::vector<int>& in_map = b == 0 ? prev_map : chan_map;
      const int c_in = static_cast<int>(in_map.size());
      const Rational e1 = ax.expansion.min;
      const int part = static_cast<int>((e1.num * c_in) / e1.den);
      const std::vector<int> mid_map = detail::parts_map(sn.expansion_patterns[g], e_idx, part);
      const std::string base = "g" + std::to_string(g) + ".b" + std::to_string(b);
      add(base + ".expand.w", {mid_map, in_map, one, one, one});
      add_bn_slice(base + ".bn1", mid_map);
      add(base + ".dw.w", {mid_map, one, detail::centered_map(kt, max_kt),
                           detail::centered_map(ks, max_ks), detail::centered_map(ks, max_ks)});
      add_bn_slice(base + ".bn2", mid_map);
      add(base + ".proj.w", {chan_map, mid_map, one, one, one});
      add_bn_slice(base + ".bn3", chan_map);
    }
    if (ch.attention != AttentionKind::PassThrough) {
      const std::string base = "g" + std::to_string(g) + ".att";
      const int c = ch.channels;
      if (ch.attention == AttentionKind::GloRe) {
        const int cr = glore_reduced(c, sn.glore_cfg);
        const int nn = glore_nodes(c, sn.glore_cfg);
        const std::vector<int> cr_map = detail::identity_map(cr);
        const std::vector<int> nn_map = detail::identity_map(nn);
        add(base + ".reduce.w", {cr_map, chan_map, one, one, one});
        add_bn_slice(base + ".reduce_bn", cr_map);
        add(base + ".nodeproj.w", {nn_map, chan_map, one, one, one});
        add(base + ".gcn_node.w", {nn_map, nn_map});
        add(base + ".gcn_state.w", {cr_map, cr_map});
        add(base + ".expand.w", {chan_map, cr_map, one, one, one});
        add_bn_slice(base + ".expand_bn", chan_map);
      } else {
        const int chn = glore_reduced(c, GloReConfig{2, 4});
        const std::vector<int> chn_map = detail::identity_map(chn);
        add(base + ".theta.w", {chn_map, chan_map, one, one, one});
        add(base + ".phi.w", {chn_map, chan_map, one, one, one});
        add(base + ".gmap.w", {chn_map, chan_map, one, one, one});
        add(base + ".out.w", {chan_map, chn_map, one, one, one});
        add_bn_slice(base + ".out_bn", chan_map);
      }
    }
    prev_map = chan_map;
  }

  add("head.proj.w",
      {detail::identity_map(space.head.pool_dim), prev_map, one, one, one});
  add_bn_slice("head.bn", detail::identity_map(space.head.pool_dim));
  add("head.fc1.w", {detail::identity_map(space.head.fc_dim),
                     detail::identity_map(space.head.pool_dim)});
  add("head.fc1.b", {detail::identity_map(space.head.fc_dim)});
  add("head.fc2.w", {detail::identity_map(space.head.num_classes),
                     detail::identity_map(space.head.fc_dim)});
  add("head.fc2.b", {detail::identity_map(space.head.num_classes)});
  return plan;
}

namespace detail {

// Walks every standalone index of a slice, pairing it with the flat index of
// the mapped super element. dims/strides come from the super tensor.
template <typename Fn>
inline void for_each_mapped(const SliceSpec& s, const Tensor& super_t, Fn&& fn) {
  const int rank = static_cast<int>(s.axis_maps.size());
  if (rank != super_t.ndim()) {
    throw std::invalid_argument("slice rank mismatch for " + s.name);
  }
  std::vector<std::int64_t> super_stride(static_cast<std::size_t>(rank), 1);
  for (int a = rank - 2; a >= 0; --a) {
    super_stride[static_cast<std::size_t>(a)] =
        super_stride[static_cast<std::size_t>(a) + 1] * super_t.dim(a + 1);
  }
  std::vector<int> idx(static_cast<std::size_t>(rank), 0);
  std::size_t flat = 0;
  for (;;) {
    std::int64_t super_flat = 0;
    for (int a = 0; a < rank; ++a) {
      super_flat += super_stride[static_cast<std::size_t>(a)] *
                    s.axis_maps[static_cast<std::size_t>(a)][static_cast<std::size_t>(
                        idx[static_cast<std::size_t>(a)])];
    }
    fn(flat, static_cast<std::size_t>(super_flat));
    ++flat;
    int a = rank - 1;
    for (; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] <
          static_cast<int>(s.axis_maps[static_cast<std::size_t>(a)].size())) {
        break;
      }
      idx[static_cast<std::size_t>(a)] = 0;
    }
    if (a < 0) break;
  }
}

}  // namespace detail

// Materializes the standalone-shaped parameters for one plan. Extraction for
// a derived architecture is exactly this gather.
inline ParamSet gather(const Supernet& sn, const ActivationPlan& plan) {
  ParamSet out;
  for (const SliceSpec& s : plan.slices) {
    const Tensor& super_t = sn.weights.at(s.name);
    std::vector<int> shape;
    for (const auto& m : s.axis_maps) shape.push_back(static_cast<int>(m.size()));
    Tensor t(std::move(shape));
    detail::for_each_mapped(s, super_t,
                            [&](std::size_t flat, std::size_t sflat) { t.v[flat] = super_t.v[sflat]; });
    out.emplace(s.name, std::move(t));
  }
  return out;
}

inline ParamSet extract_standalone(const Supernet& sn, const ArchitectureSpec& arch) {
  return gather(sn, activate(sn, arch));
}

// Super-shaped gradient accumulator. touched marks every index written by a
// scatter so the optimizer step can stay strictly local to activated slices.
struct GradAccum {
  std::map<std::string, Tensor> grads;
  std::map<std::string, std::vector<std::uint8_t>> touched;
};

inline void scatter_add(const Supernet& sn, const ActivationPlan& plan, const std::string& name,
                        const Tensor& grad, double weight, GradAccum& accum) {
  const SliceSpec& s = plan.slices[plan.by_name.at(name)];
  const Tensor& super_t = sn.weights.at(name);
  auto it = accum.grads.find(name);
  if (it == accum.grads.end()) {
    it = accum.grads.emplace(name, Tensor(super_t.shape)).first;
    accum.touched.emplace(name, std::vector<std::uint8_t>(super_t.v.size(), 0));
  }
  Tensor& acc = it->second;
  std::vector<std::uint8_t>& touched = accum.touched.at(name);
  detail::for_each_mapped(s, super_t, [&](std::size_t flat, std::size_t sflat) {
    acc.v[sflat] += weight * grad.v[flat];
    touched[sflat] = 1;
  });
}

struct ForwardLossResult {
  double loss = 0.0;
  std::vector<double> loglik;
  // Standalone-shaped gradients keyed by parameter name; empty without backward.
  std::map<std::string, Tensor> grads;
};

// Super-width running statistics, one entry per norm layer (every ".g"
// parameter marks one). Fresh buffers start at mean 0, variance 1, the same
// state a never-updated norm layer would report.
inline RunningStats init_running_stats(const Supernet& sn) {
  RunningStats stats;
  for (const std::string& name : sn.weights.names()) {
    if (name.size() < 2 || name.compare(name.size() - 2, 2, ".g") != 0) continue;
    const Tensor& t = sn.weights.at(name);
    Tensor var(t.shape);
    for (double& v : var.v) v = 1.0;
    stats.emplace(name.substr(0, name.size() - 2), BnState{Tensor(t.shape), std::move(var)});
  }
  return stats;
}

// Standalone-width statistics for one plan, read through the same channel
// maps as the norm scale parameters.
inline RunningStats gather_stats(const ActivationPlan& plan, const RunningStats& super_stats) {
  RunningStats out;
  for (const SliceSpec& s : plan.slices) {
    if (s.name.size() < 2 || s.name.compare(s.name.size() - 2, 2, ".g") != 0) continue;
    const std::string base = s.name.substr(0, s.name.size() - 2);
    const auto it = super_stats.find(base);
    if (it == super_stats.end()) continue;
    const std::vector<int>& map = s.axis_maps.at(0);
    BnState st{Tensor({static_cast<int>(map.size())}), Tensor({static_cast<int>(map.size())})};
    for (std::size_t i = 0; i < map.size(); ++i) {
      st.mean.v[i] = it->second.mean.v[static_cast<std::size_t>(map[i])];
      st.var.v[i] = it->second.var.v[static_cast<std::size_t>(map[i])];
    }
    out.emplace(base, std::move(st));
  }
  return out;
}

// Writes a plan's (updated) standalone statistics back to their super
// positions. Positions outside the plan are left untouched.
inline void scatter_stats(const ActivationPlan& plan, const RunningStats& updated,
                          RunningStats& super_stats) {
  for (const SliceSpec& s : plan.slices) {
    if (s.name.size() < 2 || s.name.compare(s.name.size() - 2, 2, ".g") != 0) continue;
    const std::string base = s.name.substr(0, s.name.size() - 2);
    const auto src = updated.find(base);
    const auto dst = super_stats.find(base);
    if (src == updated.end() || dst == super_stats.end()) continue;
    const std::vector<int>& map = s.axis_maps.at(0);
    for (std::size_t i = 0; i < map.size(); ++i) {
      dst->second.mean.v[static_cast<std::size_t>(map[i])] = src->second.mean.v[i];
      dst->second.var.v[static_cast<std::size_t>(map[i])] = src->second.var.v[i];
    }
  }
}

// Gather -> standalone forward -> softmax CE. with_grads additionally runs
// backward and returns per-parameter gradients ready for scatter_add.
// Without super_stats the forward always uses per-batch statistics. With
// super_stats, a training forward (eval_mode false) refreshes the activated
// positions' running statistics, and an eval_mode forward normalizes with the
// gathered running statistics instead of the batch, so candidates are scored
// by the statistics their parts have actually accumulated.
inline ForwardLossResult forward_loss(const Supernet& sn, const ActivationPlan& plan,
                                      const Tensor& batch, const std::vector<int>& labels,
                                      bool with_grads, RunningStats* super_stats = nullptr,
                                      bool eval_mode = false, double stats_momentum = 0.1) {
  if (eval_mode && super_stats == nullptr) {
    throw std::invalid_argument("forward_loss: eval_mode requires running statistics");
  }
  const ParamSet params = gather(sn, plan);
  Tape tape;
  ForwardOptions opts;
  opts.train = !eval_mode;
  opts.bn_momentum = stats_momentum;
  RunningStats local;
  if (super_stats != nullptr) {
    local = gather_stats(plan, *super_stats);
    opts.running = &local;
  }
  BoundModel bm = model_forward(tape, sn.space, plan.arch, params, batch, opts, sn.glore_cfg);
  LossResult lr = tape.softmax_cross_entropy(bm.logits, labels);
  if (super_stats != nullptr && !eval_mode) {
    scatter_stats(plan, local, *super_stats);
  }
  ForwardLossResult out;
  out.loss = tape.value(lr.loss).v[0];
  out.loglik = lr.loglik;
  if (with_grads) {
    tape.backward(lr.loss);
    for (std::size_t i = 0; i < bm.vars.size(); ++i) {
      out.grads.emplace(bm.names[i], tape.grad(bm.vars[i]));
    }
  }
  return out;
}

// Applies one SGD step at touched indices only; untouched weights and
// velocities are left bit-identical. velocity must be super-shaped and is
// created on first use.
inline void sgd_step_masked(Supernet& sn, const GradAccum& accum, const SgdConfig& cfg,
                            ParamSet& velocity) {
  for (const auto& [name, grad] : accum.grads) {
    Tensor& w = sn.weights.at(name);
    if (!velocity.has(name)) velocity.emplace(name, Tensor(w.shape));
    Tensor& vel = velocity.at(name);
    const std::vector<std::uint8_t>& touched = accum.touched.at(name);
    for (std::size_t i = 0; i < w.v.size(); ++i) {
      if (touched[i]) sgd_update_at(w.v[i], grad.v[i], vel.v[i], cfg);
    }
  }
}

inline std::map<std::string, std::string> supernet_meta(const Supernet& sn) {
  const std::string dump = space_to_json(sn.space).dump();
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump)));
  return {{"space_hash", hex},
          {"pattern_mode", pattern_mode_name(sn.mode)},
          {"seed", std::to_string(sn.seed)}};
}

}  // namespace nasforge
