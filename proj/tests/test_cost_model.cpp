#include <gtest/gtest.h>

#include "nasforge/cost_model.hpp"
#include "nasforge/rng.hpp"

using namespace nasforge;

// Brute-force MAC oracle: one count per kernel tap per output position, with
// nested loops and nothing clever. Padding taps count like interior taps.
static std::int64_t oracle_conv_macs(int c_in, int c_out, int groups, int kt, int ks, int T,
                                     int H, int W, int stride) {
  const int Ho = ceil_div(H, stride);
  const int Wo = ceil_div(W, stride);
  std::int64_t macs = 0;
  for (int co = 0; co < c_out; ++co) {
    for (int t = 0; t < T; ++t) {
      for (int y = 0; y < Ho; ++y) {
        for (int x = 0; x < Wo; ++x) {
          for (int ci = 0; ci < c_in / groups; ++ci) {
            for (int a = 0; a < kt; ++a) {
              for (int b = 0; b < ks; ++b) {
                for (int c = 0; c < ks; ++c) ++macs;
              }
            }
          }
        }
      }
    }
  }
  return macs;
}

static std::int64_t oracle_mbconv_macs(const GroupChoice& choice, const TensorShape& in,
                                       int out_channels, int stride) {
  const int c_mid = mid_channels(choice.expansion, in.c);
  const int kt = temporal_kernel(choice.type);
  const int ks = spatial_kernel(choice.type);
  const int Ho = ceil_div(in.h, stride);
  const int Wo = ceil_div(in.w, stride);
  // Expand runs before the stride; depthwise carries it; project follows.
  return oracle_conv_macs(in.c, c_mid, 1, 1, 1, in.t, in.h, in.w, 1) +
         oracle_conv_macs(c_mid, c_mid, c_mid, kt, ks, in.t, in.h, in.w, stride) +
         oracle_conv_macs(c_mid, out_channels, 1, 1, 1, in.t, Ho, Wo, 1);
}

TEST(CostModel, FrozenSingleTermExamples) {
  // Depthwise t3_s3 with 54 mid channels over 13x40^2, stride 1.
  GroupChoice ch;
  ch.type = BlockType::t3_s3;
  ch.expansion = Rational::parse("2.25");
  const TensorShape in{24, 13, 40, 40};
  EXPECT_EQ(mid_channels(ch.expansion, 24), 54);
  const std::int64_t expand = 24LL * 54 * 13 * 40 * 40;
  const std::int64_t dw = 54LL * 27 * 13 * 40 * 40;
  const std::int64_t proj = 54LL * 24 * 13 * 40 * 40;
  EXPECT_EQ(expand, 26956800);
  EXPECT_EQ(dw, 30326400);
  EXPECT_EQ(flops_mbconv3d(ch, in, 24, 1), expand + dw + proj);
}

TEST(CostModel, MatchesBruteForceOracle) {
  Rng rng(42);
  const int shapes = 24;
  for (int i = 0; i < shapes; ++i) {
    GroupChoice ch;
    ch.type = all_block_types()[rng.uniform_int(6)];
    ch.expansion = Rational(1 + rng.uniform_int(4), 1 + rng.uniform_int(2));
    const TensorShape in{static_cast<int>(2 + rng.uniform_int(6)),
                         static_cast<int>(1 + rng.uniform_int(4)),
                         static_cast<int>(3 + rng.uniform_int(8)),
                         static_cast<int>(3 + rng.uniform_int(8))};
    const int out_c = static_cast<int>(2 + rng.uniform_int(8));
    const int stride = rng.uniform_int(2) == 0 ? 1 : 2;
    EXPECT_EQ(flops_mbconv3d(ch, in, out_c, stride), oracle_mbconv_macs(ch, in, out_c, stride))
        << "shape " << i;
  }
}

TEST(CostModel, UniformBaselineCosts) {
  const SearchSpace s = paper_space();
  const CostReport rep = cost_report(s, preset_x3d_s());
  EXPECT_EQ(rep.flops_total, 1788223736);
  EXPECT_EQ(rep.params_total, 3514700);
  // Spot-check individual lines.
  ASSERT_GE(rep.lines.size(), 4u);
  EXPECT_EQ(rep.lines[0].name, "stem");
  EXPECT_EQ(rep.lines[0].flops, 53913600);
  EXPECT_EQ(rep.lines[0].params, 3 * 24 * 9 + 2 * 24);
  EXPECT_EQ(rep.lines[1].name, "g0.b0");
  EXPECT_EQ(rep.lines[1].flops, 165110400);
  EXPECT_EQ(rep.lines[1].params, 4314);
  const CostLine& fc2 = rep.lines.back();
  EXPECT_EQ(fc2.name, "head.fc2");
  EXPECT_EQ(fc2.flops, 2048LL * 400);
  EXPECT_EQ(fc2.params, 2048LL * 400 + 400);
  EXPECT_EQ(fc2.out.c, 400);
}

TEST(CostModel, SearchedPresetCosts) {
  const SearchSpace s = paper_space();
  const CostReport rep = cost_report(s, preset_autox3d_s());
  EXPECT_EQ(rep.params_total, 3597680);
  // The glore line sits after group 3's blocks.
  bool found = false;
  for (const CostLine& line : rep.lines) {
    if (line.name == "g3.att") {
      found = true;
      EXPECT_EQ(line.flops, 17981568);
      EXPECT_EQ(line.params, 3744);
      EXPECT_EQ(line.out.c, 48);
      EXPECT_EQ(line.out.h, 20);
    }
  }
  EXPECT_TRUE(found);
}

TEST(CostModel, AttentionFormulas) {
  // glore at 48x13x20^2, term-by-term.
  const TensorShape shape{48, 13, 20, 20};
  const std::int64_t L = shape.positions();
  const std::int64_t reduce = 48LL * 24 * L;
  const std::int64_t node_proj = 48LL * 12 * L;
  const std::int64_t project = 12LL * 24 * L;
  const std::int64_t gcn = 12LL * 12 * 24 + 12LL * 24 * 24;
  const std::int64_t reverse = 12LL * 24 * L;
  const std::int64_t expand = 24LL * 48 * L;
  EXPECT_EQ(flops_attention(AttentionKind::GloRe, shape),
            reduce + node_proj + project + gcn + reverse + expand);
  EXPECT_EQ(params_attention(AttentionKind::GloRe, 48),
            48LL * 24 + 2 * 24 + 48 * 12 + 144 + 576 + 24 * 48 + 2 * 48);
  EXPECT_EQ(flops_attention(AttentionKind::PassThrough, shape), 0);
  EXPECT_EQ(params_attention(AttentionKind::PassThrough, 48), 0);

  // non_local embedded-gaussian at the same shape.
  const std::int64_t nl = 3LL * 48 * 24 * L + 2LL * L * L * 24 + 24LL * 48 * L;
  EXPECT_EQ(flops_attention(AttentionKind::NonLocal, shape), nl);
  EXPECT_EQ(params_attention(AttentionKind::NonLocal, 48), 2LL * 48 * 48 + 2 * 48);
}

TEST(CostModel, NonLocalDominatesGloRe) {
  const TensorShape shape{28, 13, 40, 40};
  const std::int64_t nl = flops_attention(AttentionKind::NonLocal, shape);
  const std::int64_t gl = flops_attention(AttentionKind::GloRe, shape);
  EXPECT_GT(nl, gl);
  EXPECT_GT(static_cast<double>(nl) / static_cast<double>(gl), 10.0);
}

TEST(CostModel, OddChannelsRejectedWithGroupName) {
  SearchSpace s = toy_space();
  s.groups[3].channels = {13, 13, 1};
  ArchitectureSpec a;
  a.space_id = "custom";
  Rng rng(1);
  a = sample_uniform(s, rng);
  a.choices[3].channels = 13;
  a.choices[3].attention = AttentionKind::GloRe;
  try {
    cost_report(s, a);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("group 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("13"), std::string::npos);
  }
}

TEST(CostModel, UnbuildableArchListsEveryViolation) {
  const SearchSpace s = paper_space();
  ArchitectureSpec a = preset_x3d_s();
  a.choices[0].channels = 0;
  a.choices[7].expansion = Rational{0, 1};
  try {
    cost_report(s, a);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("group 0"), std::string::npos);
    EXPECT_NE(msg.find("group 7"), std::string::npos);
  }

  ArchitectureSpec short_arch = preset_x3d_s();
  short_arch.choices.pop_back();
  EXPECT_THROW(cost_report(s, short_arch), std::invalid_argument);
}

// Off-grid widths still cost out; membership is validate_spec's concern.
TEST(CostModel, OffGridWidthsStillCost) {
  const SearchSpace s = paper_space();
  ArchitectureSpec a = preset_x3d_s();
  a.choices[0].channels = 26;  // between grid points 24 and 28
  EXPECT_FALSE(validate_spec(s, a).ok);
  const CostReport rep = cost_report(s, a);
  EXPECT_GT(rep.flops_total, 0);
  EXPECT_GT(rep.params_total, cost_report(s, preset_x3d_s()).params_total);
}

TEST(CostModel, MonotoneInEveryAxis) {
  const SearchSpace s = paper_space();
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    ArchitectureSpec a = sample_uniform(s, rng, "paper");
    const CostReport base = cost_report(s, a);
    const int g = static_cast<int>(rng.uniform_int(static_cast<std::int64_t>(s.groups.size())));
    const GroupAxes& ax = s.groups[g];
    ArchitectureSpec bumped = a;
    const int axis = static_cast<int>(rng.uniform_int(4));
    bool changed = false;
    if (axis == 0) {
      // Larger joint kernel volume.
      const int k = temporal_kernel(a.choices[g].type) * spatial_kernel(a.choices[g].type) *
                    spatial_kernel(a.choices[g].type);
      for (BlockType t : ax.types) {
        const int k2 = temporal_kernel(t) * spatial_kernel(t) * spatial_kernel(t);
        if (k2 > k) {
          bumped.choices[g].type = t;
          changed = true;
          break;
        }
      }
    } else if (axis == 1) {
      const int idx = ax.channels.index_of(a.choices[g].channels);
      if (idx + 1 < ax.channels.size()) {
        bumped.choices[g].channels = ax.channels.member(idx + 1);
        changed = true;
      }
    } else if (axis == 2) {
      const int idx = ax.expansion.index_of(a.choices[g].expansion);
      if (idx + 1 < ax.expansion.size()) {
        bumped.choices[g].expansion = ax.expansion.member(idx + 1);
        changed = true;
      }
    } else {
      if (a.choices[g].attention == AttentionKind::PassThrough) {
        bumped.choices[g].attention = AttentionKind::GloRe;
        changed = true;
      } else if (a.choices[g].attention == AttentionKind::GloRe) {
        bumped.choices[g].attention = AttentionKind::NonLocal;
        changed = true;
      }
    }
    if (!changed) continue;
    const CostReport after = cost_report(s, bumped);
    EXPECT_GE(after.flops_total, base.flops_total) << "trial " << trial << " axis " << axis;
    EXPECT_GE(after.params_total, base.params_total) << "trial " << trial << " axis " << axis;
  }
}

TEST(CostModel, LineSumsAndResolutionIndependence) {
  const SearchSpace s = paper_space();
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const ArchitectureSpec a = sample_uniform(s, rng, "paper");
    const CostReport rep = cost_report(s, a);
    std::int64_t fsum = 0, psum = 0;
    for (const CostLine& line : rep.lines) {
      fsum += line.flops;
      psum += line.params;
      EXPECT_GE(line.flops, 0);
      EXPECT_GE(line.params, 0);
    }
    EXPECT_EQ(fsum, rep.flops_total);
    EXPECT_EQ(psum, rep.params_total);
  }
  // Params do not depend on the input resolution; flops do.
  const ArchitectureSpec a = preset_x3d_s();
  const CostReport small = cost_report(s, a, TensorShape{3, 4, 64, 64});
  const CostReport big = cost_report(s, a, TensorShape{3, 13, 160, 160});
  EXPECT_EQ(small.params_total, big.params_total);
  EXPECT_LT(small.flops_total, big.flops_total);
}

TEST(CostModel, HingeFrozenValues) {
  EXPECT_DOUBLE_EQ(hinge_cost(2.5e9, 2.0e9), 0.25);
  EXPECT_DOUBLE_EQ(hinge_cost(1.9e9, 2.0e9), 0.0);
  EXPECT_DOUBLE_EQ(hinge_cost(3.0e9, 2.0e9), 0.5);
  EXPECT_DOUBLE_EQ(hinge_cost(2.0e9, 2.0e9), 0.0);
  EXPECT_THROW(hinge_cost(1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(hinge_cost(1.0, -2.0), std::invalid_argument);
  EXPECT_THROW(hinge_cost(-1.0, 2.0), std::invalid_argument);
}

TEST(CostModel, HingeProperty) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double target = 0.5e9 + rng.uniform() * 3e9;
    const double flops = rng.uniform() * 6e9;
    const double h = hinge_cost(flops, target);
    if (flops <= target) {
      EXPECT_EQ(h, 0.0);
    } else {
      EXPECT_DOUBLE_EQ(h, (flops - target) / target);
      EXPECT_GT(h, 0.0);
    }
  }
}

TEST(CostModel, MidChannelsFollowBlockInput) {
  // First block of a group expands from the previous group's width.
  const SearchSpace s = paper_space();
  const ArchitectureSpec a = preset_autox3d_s();
  const CostReport rep = cost_report(s, a);
  // g2.b0: input 16 (group 1 output), expansion 4.5 -> mid 72.
  for (const CostLine& line : rep.lines) {
    if (line.name == "g2.b0") {
      // params = 16*72 + 72*27 + 72*48 + 2*(2*72 + 48)
      EXPECT_EQ(line.params, 16LL * 72 + 72 * 27 + 72 * 48 + 2 * (144 + 48));
    }
  }
}
