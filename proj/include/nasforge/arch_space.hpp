#pragma once

// Fine-grained 3D design space: per-group block type, output channels on an
// arithmetic grid, expansion ratio, and attention kind. A SearchSpace fixes
// the macro skeleton (stem, block counts, strides, head); an ArchitectureSpec
// picks one option per axis per group.

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"

#include "nasforge/rational.hpp"
#include "nasforge/rng.hpp"

namespace nasforge {

enum class BlockType { t1_s3, t1_s5, t3_s3, t3_s5, t5_s3, t5_s5 };

inline int temporal_kernel(BlockType t) {
  switch (t) {
    case BlockType::t1_s3:
    case BlockType::t1_s5:
      return 1;
    case BlockType::t3_s3:
    case BlockType::t3_s5:
      return 3;
    default:
      return 5;
  }
}

inline int spatial_kernel(BlockType t) {
  switch (t) {
    case BlockType::t1_s3:
    case BlockType::t3_s3:
    case BlockType::t5_s3:
      return 3;
    default:
      return 5;
  }
}

inline const std::vector<BlockType>& all_block_types() {
  static const std::vector<BlockType> kAll = {BlockType::t1_s3, BlockType::t1_s5,
                                              BlockType::t3_s3, BlockType::t3_s5,
                                              BlockType::t5_s3, BlockType::t5_s5};
  return kAll;
}

inline std::string block_type_name(BlockType t) {
  switch (t) {
    case BlockType::t1_s3: return "t1_s3";
    case BlockType::t1_s5: return "t1_s5";
    case BlockType::t3_s3: return "t3_s3";
    case BlockType::t3_s5: return "t3_s5";
    case BlockType::t5_s3: return "t5_s3";
    default: return "t5_s5";
  }
}

inline BlockType parse_block_type(const std::string& s) {
  for (BlockType t : all_block_types()) {
    if (block_type_name(t) == s) return t;
  }
  throw std::invalid_argument("unknown block type: " + s);
}

enum class AttentionKind { PassThrough, GloRe, NonLocal };

inline std::string attention_name(AttentionKind k) {
  switch (k) {
    case AttentionKind::PassThrough: return "pass_through";
    case AttentionKind::GloRe: return "glore";
    default: return "non_local";
  }
}

inline AttentionKind parse_attention(const std::string& s) {
  if (s == "pass_through") return AttentionKind::PassThrough;
  if (s == "glore") return AttentionKind::GloRe;
  if (s == "non_local") return AttentionKind::NonLocal;
  throw std::invalid_argument("unknown attention kind: " + s);
}

// Arithmetic grid {min, min+step, ..., max}; max - min must divide by step.
struct ChannelRange {
  int min = 0;
  int max = 0;
  int step = 1;

  int size() const { return (max - min) / step + 1; }
  int member(int idx) const { return min + idx * step; }
  std::vector<int> members() const {
    std::vector<int> out;
    for (int c = min; c <= max; c += step) out.push_back(c);
    return out;
  }
  int index_of(int value) const {
    if (value < min || value > max || (value - min) % step != 0) return -1;
    return (value - min) / step;
  }
};

struct ExpansionRange {
  Rational min;
  Rational max;
  Rational step;

  int size() const {
    const Rational span = max - min;
    return static_cast<int>((span.num * step.den) / (span.den * step.num)) + 1;
  }
  Rational member(int idx) const { return min + Rational(idx) * step; }
  std::vector<Rational> members() const {
    std::vector<Rational> out;
    const int n = size();
    for (int i = 0; i < n; ++i) out.push_back(member(i));
    return out;
  }
  int index_of(const Rational& value) const {
    const int n = size();
    for (int i = 0; i < n; ++i) {
      if (member(i) == value) return i;
    }
    return -1;
  }
};

struct GroupAxes {
  std::vector<BlockType> types;
  ChannelRange channels;
  ExpansionRange expansion;
  std::vector<AttentionKind> attention;
  int blocks = 1;  // block count in this group; the first block carries the stride
  int stride = 1;  // spatial stride, temporal is never strided
};

struct InputConfig {
  int channels = 3;
  int frames = 13;
  int spatial = 160;
};

struct HeadConfig {
  int pool_dim = 432;
  int fc_dim = 2048;
  int num_classes = 400;
};

struct SearchSpace {
  InputConfig input;
  int stem_channels = 24;
  std::vector<GroupAxes> groups;
  HeadConfig head;
};

struct GroupChoice {
  BlockType type = BlockType::t3_s3;
  int channels = 0;
  Rational expansion = Rational(1);
  AttentionKind attention = AttentionKind::PassThrough;
};

struct ArchitectureSpec {
  std::string space_id;
  std::vector<GroupChoice> choices;
};

struct ValidationResult {
  bool ok = true;
  std::vector<std::string> errors;

  void fail(const std::string& msg) {
    ok = false;
    errors.push_back(msg);
  }
};

inline ValidationResult validate_space(const SearchSpace& space) {
  ValidationResult r;
  if (space.input.channels <= 0 || space.input.frames <= 0 || space.input.spatial <= 0) {
    r.fail("input dimensions must be positive");
  }
  if (space.stem_channels <= 0) r.fail("stem channels must be positive");
  if (space.groups.empty()) r.fail("space has no groups");
  for (std::size_t g = 0; g < space.groups.size(); ++g) {
    const GroupAxes& ax = space.groups[g];
    const std::string tag = "group " + std::to_string(g) + ": ";
    if (ax.types.empty()) r.fail(tag + "empty block type axis");
    for (std::size_t i = 0; i < ax.types.size(); ++i) {
      for (std::size_t j = i + 1; j < ax.types.size(); ++j) {
        if (ax.types[i] == ax.types[j]) r.fail(tag + "duplicate block type");
      }
    }
    if (ax.channels.min <= 0 || ax.channels.step <= 0 || ax.channels.max < ax.channels.min ||
        (ax.channels.max - ax.channels.min) % ax.channels.step != 0) {
      r.fail(tag + "invalid channel grid");
    }
    if (!(ax.expansion.min > Rational(0)) || !(ax.expansion.step > Rational(0)) ||
        ax.expansion.max < ax.expansion.min) {
      r.fail(tag + "invalid expansion grid");
    } else {
      const Rational span = ax.expansion.max - ax.expansion.min;
      const Rational ratio(span.num * ax.expansion.step.den, span.den * ax.expansion.step.num);
      if (!ratio.is_integer()) r.fail(tag + "expansion span not divisible by step");
    }
    if (ax.attention.empty()) r.fail(tag + "empty attention axis");
    for (std::size_t i = 0; i < ax.attention.size(); ++i) {
      for (std::size_t j = i + 1; j < ax.attention.size(); ++j) {
        if (ax.attention[i] == ax.attention[j]) r.fail(tag + "duplicate attention kind");
      }
    }
    if (ax.blocks < 1) r.fail(tag + "block count must be >= 1");
    if (ax.stride != 1 && ax.stride != 2) r.fail(tag + "stride must be 1 or 2");
  }
  if (space.head.pool_dim <= 0 || space.head.fc_dim <= 0 || space.head.num_classes <= 1) {
    r.fail("head dimensions invalid (classes must be >= 2)");
  }
  return r;
}

// Success iff every GroupChoice is drawn from its group's axis lists and the
// choice count matches the group count.
inline ValidationResult validate_spec(const SearchSpace& space, const ArchitectureSpec& arch) {
  ValidationResult r = validate_space(space);
  if (!r.ok) return r;
  if (arch.choices.size() != space.groups.size()) {
    r.fail("choice count " + std::to_string(arch.choices.size()) + " != group count " +
           std::to_string(space.groups.size()));
    return r;
  }
  for (std::size_t g = 0; g < space.groups.size(); ++g) {
    const GroupAxes& ax = space.groups[g];
    const GroupChoice& ch = arch.choices[g];
    const std::string tag = "group " + std::to_string(g) + ": ";
    bool type_ok = false;
    for (BlockType t : ax.types) type_ok = type_ok || t == ch.type;
    if (!type_ok) r.fail(tag + "block type " + block_type_name(ch.type) + " not on axis");
    if (ax.channels.index_of(ch.channels) < 0) {
      r.fail(tag + "channels " + std::to_string(ch.channels) + " not on grid");
    }
    if (ax.expansion.index_of(ch.expansion) < 0) {
      r.fail(tag + "expansion " + ch.expansion.str() + " not on grid");
    }
    bool att_ok = false;
    for (AttentionKind k : ax.attention) att_ok = att_ok || k == ch.attention;
    if (!att_ok) r.fail(tag + "attention " + attention_name(ch.attention) + " not on axis");
  }
  return r;
}

struct Cardinality {
  boost::multiprecision::cpp_int count;
  double log10 = 0.0;
};

inline Cardinality cardinality(const SearchSpace& space) {
  Cardinality c;
  c.count = 1;
  for (const GroupAxes& ax : space.groups) {
    const std::int64_t options = static_cast<std::int64_t>(ax.types.size()) *
                                 ax.channels.size() * ax.expansion.size() *
                                 static_cast<std::int64_t>(ax.attention.size());
    c.count *= options;
    c.log10 += std::log10(static_cast<double>(options));
  }
  return c;
}

inline ArchitectureSpec sample_uniform(const SearchSpace& space, Rng& rng,
                                       const std::string& space_id = "") {
  ArchitectureSpec arch;
  arch.space_id = space_id;
  for (const GroupAxes& ax : space.groups) {
    GroupChoice ch;
    ch.type = ax.types[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(ax.types.size())))];
    ch.channels = ax.channels.member(static_cast<int>(rng.uniform_int(ax.channels.size())));
    ch.expansion = ax.expansion.member(static_cast<int>(rng.uniform_int(ax.expansion.size())));
    ch.attention = ax.attention[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(ax.attention.size())))];
    arch.choices.push_back(ch);
  }
  return arch;
}

// ====== Presets ======

// Video macro skeleton: 3x13x160^2 input, 24-channel 1x3^2 stem with spatial
// stride 2, eleven searchable groups, 432-dim pre-pool projection, 2048-dim
// fc, 400 classes.
inline SearchSpace paper_space() {
  SearchSpace s;
  s.input = {3, 13, 160};
  s.stem_channels = 24;
  const std::vector<AttentionKind> att = {AttentionKind::PassThrough, AttentionKind::GloRe,
                                          AttentionKind::NonLocal};
  const ExpansionRange exp{Rational::parse("1.5"), Rational::parse("6.0"), Rational::parse("0.75")};
  struct Row {
    int cmin, cmax, cstep, blocks, stride;
  };
  const Row rows[] = {
      {12, 28, 4, 1, 2}, {12, 28, 4, 2, 1},   {24, 64, 8, 2, 2},  {24, 64, 8, 3, 1},
      {48, 132, 12, 2, 2}, {48, 132, 12, 3, 1}, {48, 132, 12, 3, 1}, {48, 132, 12, 3, 1},
      {96, 264, 24, 2, 2}, {96, 264, 24, 2, 1}, {96, 264, 24, 3, 1}};
  for (const Row& row : rows) {
    GroupAxes ax;
    ax.types = all_block_types();
    ax.channels = {row.cmin, row.cmax, row.cstep};
    ax.expansion = exp;
    ax.attention = att;
    ax.blocks = row.blocks;
    ax.stride = row.stride;
    s.groups.push_back(ax);
  }
  s.head = {432, 2048, 400};
  return s;
}

// Same skeleton with the attention axis restricted to {pass_through, glore}.
inline SearchSpace paper_space_glore_only() {
  SearchSpace s = paper_space();
  for (GroupAxes& ax : s.groups) {
    ax.attention = {AttentionKind::PassThrough, AttentionKind::GloRe};
  }
  return s;
}

// Small space a weight-shared supernet can train on a synthetic task in
// seconds. Channel and expansion grids are uniform (min == step) so fair
// part slicing divides every super kernel axis evenly.
inline SearchSpace toy_space() {
  SearchSpace s;
  s.input = {3, 8, 16};
  s.stem_channels = 8;
  const ExpansionRange exp{Rational(1), Rational(3), Rational(1)};
  GroupAxes g1;
  g1.types = {BlockType::t1_s3, BlockType::t3_s3};
  g1.channels = {4, 20, 4};
  g1.expansion = exp;
  g1.attention = {AttentionKind::PassThrough};
  g1.blocks = 1;
  g1.stride = 2;
  GroupAxes g2 = g1;
  g2.blocks = 2;
  g2.stride = 1;
  GroupAxes g3;
  g3.types = {BlockType::t1_s3, BlockType::t3_s3};
  g3.channels = {8, 24, 8};
  g3.expansion = exp;
  g3.attention = {AttentionKind::PassThrough, AttentionKind::GloRe};
  g3.blocks = 2;
  g3.stride = 2;
  GroupAxes g4 = g3;
  g4.blocks = 1;
  g4.stride = 1;
  s.groups = {g1, g2, g3, g4};
  s.head = {48, 64, 4};
  return s;
}

// Minimal space for full search runs: wide channel and expansion grids so
// complexity targeting has room to steer, but small enough that a couple
// hundred alternating steps finish in seconds on one core.
inline SearchSpace search_space() {
  SearchSpace s;
  s.input = {3, 4, 8};
  s.stem_channels = 4;
  GroupAxes g1;
  g1.types = {BlockType::t1_s3, BlockType::t3_s3};
  g1.channels = {2, 10, 2};
  g1.expansion = {Rational(1), Rational(1), Rational(1)};
  g1.attention = {AttentionKind::PassThrough};
  g1.blocks = 1;
  g1.stride = 2;
  GroupAxes g2 = g1;
  g2.stride = 1;
  s.groups = {g1, g2};
  s.head = {16, 16, 4};
  return s;
}

// Uniform baseline on the paper skeleton: t3_s3 everywhere, expansion 2.25,
// doubling channel ladder, no attention.
inline ArchitectureSpec preset_x3d_s() {
  ArchitectureSpec arch;
  arch.space_id = "paper";
  const int chans[] = {24, 24, 48, 48, 96, 96, 96, 96, 192, 192, 192};
  for (int c : chans) {
    GroupChoice ch;
    ch.type = BlockType::t3_s3;
    ch.channels = c;
    ch.expansion = Rational::parse("2.25");
    ch.attention = AttentionKind::PassThrough;
    arch.choices.push_back(ch);
  }
  return arch;
}

// Searched configuration on the same skeleton: mixed kernels, non-uniform
// expansion, slimmer early channels, one glore unit after group 4.
inline ArchitectureSpec preset_autox3d_s() {
  ArchitectureSpec arch;
  arch.space_id = "paper";
  const char* types[] = {"t3_s3", "t3_s3", "t3_s3", "t1_s3", "t1_s5", "t3_s3",
                         "t5_s3", "t3_s3", "t3_s5", "t1_s3", "t3_s3"};
  const char* exps[] = {"2.25", "5.25", "4.5", "2.25", "4.5", "3.75",
                        "2.25", "3.0", "3.75", "3.0", "3.0"};
  const int chans[] = {16, 16, 48, 48, 72, 72, 88, 88, 144, 144, 192};
  for (int g = 0; g < 11; ++g) {
    GroupChoice ch;
    ch.type = parse_block_type(types[g]);
    ch.channels = chans[g];
    ch.expansion = Rational::parse(exps[g]);
    ch.attention = g == 3 ? AttentionKind::GloRe : AttentionKind::PassThrough;
    arch.choices.push_back(ch);
  }
  return arch;
}

// ====== JSON serialization (schema v1) ======

inline void require_v1(const nlohmann::json& j, const std::string& what) {
  if (!j.contains("version") || j.at("version") != "v1") {
    throw std::invalid_argument(what + ": missing or unsupported schema version (want \"v1\")");
  }
}

inline nlohmann::json space_to_json(const SearchSpace& s) {
  nlohmann::json j;
  j["version"] = "v1";
  j["input"] = {{"c", s.input.channels}, {"t", s.input.frames}, {"s", s.input.spatial}};
  j["stem"] = s.stem_channels;
  j["groups"] = nlohmann::json::array();
  for (const GroupAxes& ax : s.groups) {
    nlohmann::json g;
    g["types"] = nlohmann::json::array();
    for (BlockType t : ax.types) g["types"].push_back(block_type_name(t));
    g["channels"] = {{"min", ax.channels.min}, {"max", ax.channels.max}, {"step", ax.channels.step}};
    g["expansion"] = {{"min", ax.expansion.min.str()},
                      {"max", ax.expansion.max.str()},
                      {"step", ax.expansion.step.str()}};
    g["attention"] = nlohmann::json::array();
    for (AttentionKind k : ax.attention) g["attention"].push_back(attention_name(k));
    g["blocks"] = ax.blocks;
    g["stride"] = ax.stride;
    j["groups"].push_back(g);
  }
  j["head"] = {{"pool", s.head.pool_dim}, {"fc", s.head.fc_dim}, {"classes", s.head.num_classes}};
  return j;
}

inline SearchSpace space_from_json(const nlohmann::json& j) {
  require_v1(j, "space file");
  SearchSpace s;
  s.input.channels = j.at("input").at("c").get<int>();
  s.input.frames = j.at("input").at("t").get<int>();
  s.input.spatial = j.at("input").at("s").get<int>();
  s.stem_channels = j.at("stem").get<int>();
  for (const nlohmann::json& g : j.at("groups")) {
    GroupAxes ax;
    for (const nlohmann::json& t : g.at("types")) ax.types.push_back(parse_block_type(t.get<std::string>()));
    ax.channels.min = g.at("channels").at("min").get<int>();
    ax.channels.max = g.at("channels").at("max").get<int>();
    ax.channels.step = g.at("channels").at("step").get<int>();
    ax.expansion.min = Rational::parse(g.at("expansion").at("min").get<std::string>());
    ax.expansion.max = Rational::parse(g.at("expansion").at("max").get<std::string>());
    ax.expansion.step = Rational::parse(g.at("expansion").at("step").get<std::string>());
    for (const nlohmann::json& a : g.at("attention")) ax.attention.push_back(parse_attention(a.get<std::string>()));
    ax.blocks = g.at("blocks").get<int>();
    ax.stride = g.at("stride").get<int>();
    s.groups.push_back(ax);
  }
  s.head.pool_dim = j.at("head").at("pool").get<int>();
  s.head.fc_dim = j.at("head").at("fc").get<int>();
  s.head.num_classes = j.at("head").at("classes").get<int>();
  return s;
}

inline nlohmann::json arch_to_json(const ArchitectureSpec& arch) {
  nlohmann::json j;
  j["version"] = "v1";
  j["space_id"] = arch.space_id;
  j["choices"] = nlohmann::json::array();
  for (const GroupChoice& ch : arch.choices) {
    j["choices"].push_back({{"type", block_type_name(ch.type)},
                            {"channels", ch.channels},
                            {"expansion", ch.expansion.str()},
                            {"attention", attention_name(ch.attention)}});
  }
  return j;
}

inline ArchitectureSpec arch_from_json(const nlohmann::json& j) {
  require_v1(j, "arch file");
  ArchitectureSpec arch;
  arch.space_id = j.at("space_id").get<std::string>();
  for (const nlohmann::json& c : j.at("choices")) {
    GroupChoice ch;
    ch.type = parse_block_type(c.at("type").get<std::string>());
    ch.channels = c.at("channels").get<int>();
    ch.expansion = Rational::parse(c.at("expansion").get<std::string>());
    ch.attention = parse_attention(c.at("attention").get<std::string>());
    arch.choices.push_back(ch);
  }
  return arch;
}

// Builtin space ids resolvable without a file.
inline bool is_builtin_space(const std::string& id) {
  return id == "paper" || id == "paper_glore" || id == "toy" ||
         id == "toy_search";
}

inline SearchSpace builtin_space(const std::string& id) {
  if (id == "paper") return paper_space();
  if (id == "paper_glore") return paper_space_glore_only();
  if (id == "toy") return toy_space();
  if (id == "toy_search") return search_space();
  throw std::invalid_argument("unknown builtin space: " + id);
}

}  // namespace nasforge
