#include <cstdint>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "nasforge/checkpoint.hpp"
#include "nasforge/rng.hpp"

using namespace nasforge;

namespace {

std::uint64_t bits(double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, 8);
  return u;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  ParamSet p;
  Rng rng(5);
  Tensor a({2, 3});
  a.fill_normal(rng, 1.0);
  // Values that lossy formats mangle.
  Tensor b({6}, {0.0, -0.0, 5e-324, 1e308, -1.7976931348623157e308, 3.141592653589793});
  Tensor nan({1}, {std::numeric_limits<double>::quiet_NaN()});
  p.emplace("layer.a", a);
  p.emplace("layer.b", b);
  p.emplace("weird.nan", nan);

  const std::string bin = "/tmp/nasforge_test_ckpt.bin";
  const std::string man = "/tmp/nasforge_test_ckpt.json";
  save_params(p, bin, man, {{"seed", "5"}, {"note", "round trip"}});
  const ParamSet q = load_params(bin);

  ASSERT_EQ(q.size(), p.size());
  ASSERT_EQ(q.names(), p.names());
  for (const std::string& name : p.names()) {
    const Tensor& x = p.at(name);
    const Tensor& y = q.at(name);
    ASSERT_EQ(x.shape, y.shape) << name;
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      EXPECT_EQ(bits(x.v[i]), bits(y.v[i])) << name << "[" << i << "]";
    }
  }

  const auto meta = load_manifest_meta(man);
  EXPECT_EQ(meta.at("seed"), "5");
  EXPECT_EQ(meta.at("note"), "round trip");
}

TEST(Checkpoint, RejectsBadFiles) {
  const std::string junk = "/tmp/nasforge_test_junk.bin";
  {
    std::ofstream os(junk, std::ios::binary);
    os << "not a checkpoint at all";
  }
  EXPECT_THROW(load_params(junk), std::runtime_error);
  EXPECT_THROW(load_params("/tmp/nasforge_does_not_exist.bin"), std::runtime_error);

  // Valid magic but truncated body.
  {
    std::ofstream os(junk, std::ios::binary);
    os.write("NFCK", 4);
    const char v[4] = {1, 0, 0, 0};
    os.write(v, 4);
    const char n[4] = {5, 0, 0, 0};
    os.write(n, 4);
  }
  EXPECT_THROW(load_params(junk), std::runtime_error);
}

TEST(Checkpoint, ParamSetGuards) {
  ParamSet p;
  p.emplace("x", Tensor({2}));
  EXPECT_THROW(p.emplace("x", Tensor({2})), std::invalid_argument);
  EXPECT_THROW(p.at("missing"), std::invalid_argument);
  EXPECT_TRUE(p.has("x"));
  EXPECT_EQ(p.total_scalars(), 2);
}
