#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "twaves/nlsf.hpp"

using namespace twaves;

namespace {
std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
std::string tmp(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }
}  // namespace

TEST(Nlsf, HeaderLayout) {
  RField f(Grid::make({4, 2}, {1.5, 3.0}), 0.25);
  const auto bytes = encode_nlsf(f);
  ASSERT_EQ(bytes.size(), 4u + 4u + 1u + 1u + 2 * (8u + 8u) + 8u * 8u);
  EXPECT_EQ(bytes.substr(0, 4), "NLSF");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[9]), 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[10]), 4);
}

TEST(Nlsf, BitExactRoundTripReal) {
  std::mt19937 rng(11);
  std::normal_distribution<double> d;
  RField f(Grid::make({8, 4, 2}, {1.0 / 3.0, 2.0, 7.25}));
  for (auto& x : f.v) x = d(rng);
  const auto path = tmp("twaves_rt_real.nlsf");
  write_nlsf(path, f);
  const auto first = slurp(path);
  const auto back = read_nlsf(path);
  ASSERT_FALSE(back.is_complex());
  const auto& g = std::get<RField>(back.field);
  EXPECT_EQ(g.v, f.v);
  EXPECT_EQ(g.grid.len, f.grid.len);
  write_nlsf(path, g);
  EXPECT_EQ(slurp(path), first);
  std::remove(path.c_str());
}

TEST(Nlsf, BitExactRoundTripComplexWithMetadata) {
  std::mt19937 rng(12);
  std::normal_distribution<double> d;
  CField f(Grid::make({16}, {3.14159}));
  for (auto& x : f.v) x = {d(rng), d(rng)};
  const auto path = tmp("twaves_rt_cplx.nlsf");
  write_nlsf(path, f, {{"c", "1.2"}, {"model", "gp"}});
  const auto back = read_nlsf(path);
  ASSERT_TRUE(back.is_complex());
  EXPECT_EQ(std::get<CField>(back.field).v, f.v);
  const auto meta = read_metadata(path);
  EXPECT_EQ(meta.at("c"), "1.2");
  EXPECT_EQ(meta.at("model"), "gp");
  std::remove(path.c_str());
  std::remove(meta_path(path).c_str());
}

TEST(Nlsf, RejectsCorruptInput) {
  EXPECT_THROW(decode_nlsf("XXXX"), Error);
  auto bytes = encode_nlsf(RField(Grid::make({4}, {1.0}), 1.0));
  bytes.pop_back();
  EXPECT_THROW(decode_nlsf(bytes), Error);
}
