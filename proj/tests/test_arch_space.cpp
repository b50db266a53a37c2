#include <gtest/gtest.h>

#include <set>

#include "nasforge/arch_space.hpp"

using namespace nasforge;

TEST(Rational, ParseAndPrint) {
  EXPECT_EQ(Rational::parse("2.25"), Rational(9, 4));
  EXPECT_EQ(Rational::parse("0.75"), Rational(3, 4));
  EXPECT_EQ(Rational::parse("3"), Rational(3));
  EXPECT_EQ(Rational::parse("6.0"), Rational(6));
  EXPECT_EQ(Rational::parse("2.25").str(), "2.25");
  EXPECT_EQ(Rational::parse("3.0").str(), "3");
  EXPECT_EQ(Rational::parse("1.5").str(), "1.5");
  EXPECT_EQ(Rational(1, 3).str(), "1/3");
  EXPECT_EQ(Rational::parse("1/3"), Rational(1, 3));
}

TEST(Rational, RoundHalfUp) {
  EXPECT_EQ(Rational::parse("2.25").round_half_up_times(24), 54);
  EXPECT_EQ(Rational::parse("1.5").round_half_up_times(9), 14);   // 13.5 rounds up
  EXPECT_EQ(Rational::parse("2.25").round_half_up_times(2), 5);   // 4.5 rounds up
  EXPECT_EQ(Rational::parse("2.25").round_half_up_times(10), 23); // 22.5 rounds up
  EXPECT_EQ(Rational::parse("1.75").round_half_up_times(8), 14);  // exact
}

TEST(Rational, GridArithmetic) {
  ExpansionRange r{Rational::parse("1.5"), Rational::parse("6.0"), Rational::parse("0.75")};
  EXPECT_EQ(r.size(), 7);
  const auto m = r.members();
  ASSERT_EQ(m.size(), 7u);
  EXPECT_EQ(m[0], Rational::parse("1.5"));
  EXPECT_EQ(m[1], Rational::parse("2.25"));
  EXPECT_EQ(m[6], Rational::parse("6.0"));
  EXPECT_EQ(r.index_of(Rational::parse("3.75")), 3);
  EXPECT_EQ(r.index_of(Rational::parse("3.1")), -1);
}

TEST(ArchSpace, PaperSkeleton) {
  const SearchSpace s = paper_space();
  ASSERT_EQ(s.groups.size(), 11u);
  EXPECT_EQ(s.input.channels, 3);
  EXPECT_EQ(s.input.frames, 13);
  EXPECT_EQ(s.input.spatial, 160);
  EXPECT_EQ(s.stem_channels, 24);
  EXPECT_EQ(s.head.pool_dim, 432);
  EXPECT_EQ(s.head.fc_dim, 2048);
  const int blocks[] = {1, 2, 2, 3, 2, 3, 3, 3, 2, 2, 3};
  const int strides[] = {2, 1, 2, 1, 2, 1, 1, 1, 2, 1, 1};
  // Channel grids have 5, 5, 6, 6, 8x7 members across the four stage ranges.
  const int grid_sizes[] = {5, 5, 6, 6, 8, 8, 8, 8, 8, 8, 8};
  int total_blocks = 0;
  for (std::size_t g = 0; g < 11; ++g) {
    EXPECT_EQ(s.groups[g].blocks, blocks[g]) << g;
    EXPECT_EQ(s.groups[g].stride, strides[g]) << g;
    EXPECT_EQ(s.groups[g].channels.size(), grid_sizes[g]) << g;
    EXPECT_EQ(s.groups[g].types.size(), 6u) << g;
    EXPECT_EQ(s.groups[g].expansion.size(), 7) << g;
    EXPECT_EQ(s.groups[g].attention.size(), 3u) << g;
    total_blocks += s.groups[g].blocks;
  }
  EXPECT_EQ(total_blocks, 26);
  EXPECT_TRUE(validate_space(s).ok);
}

TEST(ArchSpace, PresetsValidate) {
  const SearchSpace s = paper_space();
  EXPECT_TRUE(validate_spec(s, preset_x3d_s()).ok);
  const SearchSpace toy = toy_space();
  EXPECT_TRUE(validate_space(toy).ok);
}

// The searched preset's two 88-wide stages sit off the published 48..132/12
// grid, so strict membership flags exactly those two groups and nothing
// else. The preset keeps the published widths; costing accepts them.
TEST(ArchSpace, SearchedPresetOffGridOnlyAt88) {
  const ValidationResult r = validate_spec(paper_space(), preset_autox3d_s());
  EXPECT_FALSE(r.ok);
  ASSERT_EQ(r.errors.size(), 2u);
  for (const std::string& e : r.errors) {
    EXPECT_NE(e.find("88"), std::string::npos) << e;
  }
  EXPECT_NE(r.errors[0].find("group 6"), std::string::npos) << r.errors[0];
  EXPECT_NE(r.errors[1].find("group 7"), std::string::npos) << r.errors[1];
}

TEST(ArchSpace, SearchedPresetShape) {
  const ArchitectureSpec a = preset_autox3d_s();
  ASSERT_EQ(a.choices.size(), 11u);
  EXPECT_EQ(a.choices[3].attention, AttentionKind::GloRe);
  for (std::size_t g = 0; g < 11; ++g) {
    if (g != 3) {
      EXPECT_EQ(a.choices[g].attention, AttentionKind::PassThrough) << g;
    }
    // The largest joint kernel never appears in the searched preset.
    EXPECT_NE(a.choices[g].type, BlockType::t5_s5) << g;
  }
  EXPECT_EQ(a.choices[0].channels, 16);
  EXPECT_EQ(a.choices[10].channels, 192);
  EXPECT_EQ(a.choices[1].expansion, Rational::parse("5.25"));
}

TEST(ArchSpace, ValidationCatchesEveryViolation) {
  const SearchSpace s = paper_space();
  ArchitectureSpec a = preset_x3d_s();
  a.choices[2].channels = 13;                        // off grid
  a.choices[5].expansion = Rational::parse("7.5");   // above range
  const ValidationResult r = validate_spec(s, a);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.errors.size(), 2u);

  ArchitectureSpec short_arch = preset_x3d_s();
  short_arch.choices.pop_back();
  EXPECT_FALSE(validate_spec(s, short_arch).ok);
}

TEST(ArchSpace, CardinalitySmallSpaceMatchesEnumeration) {
  // Two groups with 420 and 504 options each.
  SearchSpace s;
  s.input = {3, 4, 16};
  s.stem_channels = 8;
  GroupAxes g1;
  g1.types = all_block_types();                                   // 6
  g1.channels = {4, 20, 4};                                       // 5
  g1.expansion = {Rational(1), Rational(7), Rational(1)};         // 7
  g1.attention = {AttentionKind::PassThrough, AttentionKind::GloRe};  // 2
  g1.blocks = 1;
  g1.stride = 2;
  GroupAxes g2 = g1;
  g2.channels = {4, 24, 4};                                       // 6
  s.groups = {g1, g2};
  s.head = {16, 16, 4};
  // g1: 6*5*7*2 = 420; g2: 6*6*7*2 = 504.
  const Cardinality c = cardinality(s);
  EXPECT_EQ(c.count, 211680);

  // Exhaustive enumeration agrees.
  std::int64_t brute = 0;
  for (const GroupAxes& ax : s.groups) {
    std::int64_t n = static_cast<std::int64_t>(ax.types.size()) * ax.channels.size() *
                     ax.expansion.size() * static_cast<std::int64_t>(ax.attention.size());
    brute = brute == 0 ? n : brute * n;
  }
  EXPECT_EQ(c.count, brute);
  EXPECT_NEAR(c.log10, std::log10(211680.0), 1e-9);
}

TEST(ArchSpace, PaperCardinalityOrderOfMagnitude) {
  const Cardinality c = cardinality(paper_space());
  EXPECT_GE(c.log10, 32.0);
  EXPECT_LE(c.log10, 32.7);
  // 630^2 * 756^2 * 1008^7
  boost::multiprecision::cpp_int expect = 1;
  for (int i = 0; i < 2; ++i) expect *= 630;
  for (int i = 0; i < 2; ++i) expect *= 756;
  for (int i = 0; i < 7; ++i) expect *= 1008;
  EXPECT_EQ(c.count, expect);
}

TEST(ArchSpace, UniformSamplesAlwaysValidate) {
  const SearchSpace s = paper_space();
  Rng rng(20240817);
  for (int i = 0; i < 100000; ++i) {
    const ArchitectureSpec a = sample_uniform(s, rng, "paper");
    const ValidationResult r = validate_spec(s, a);
    ASSERT_TRUE(r.ok) << (r.errors.empty() ? "" : r.errors[0]);
  }
}

TEST(ArchSpace, JsonRoundTrip) {
  const SearchSpace s = paper_space();
  const SearchSpace s2 = space_from_json(space_to_json(s));
  EXPECT_EQ(space_to_json(s), space_to_json(s2));

  const ArchitectureSpec a = preset_autox3d_s();
  const ArchitectureSpec a2 = arch_from_json(arch_to_json(a));
  EXPECT_EQ(arch_to_json(a), arch_to_json(a2));
  EXPECT_TRUE(validate_spec(s2, arch_from_json(arch_to_json(preset_x3d_s()))).ok);
}

TEST(ArchSpace, JsonRejectsWrongVersion) {
  nlohmann::json j = space_to_json(toy_space());
  j["version"] = "v2";
  EXPECT_THROW(space_from_json(j), std::invalid_argument);
  j.erase("version");
  EXPECT_THROW(space_from_json(j), std::invalid_argument);
}

TEST(ArchSpace, BuiltinSpaces) {
  EXPECT_TRUE(is_builtin_space("paper"));
  EXPECT_TRUE(is_builtin_space("toy"));
  EXPECT_FALSE(is_builtin_space("nope"));
  EXPECT_EQ(builtin_space("paper_glore").groups[0].attention.size(), 2u);
  EXPECT_THROW(builtin_space("nope"), std::invalid_argument);
}
