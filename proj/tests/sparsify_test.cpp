#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "pixelcert/rng.hpp"
#include "pixelcert/sparsify.hpp"

using pixelcert::AttributionMap;
using pixelcert::RankRule;
using pixelcert::RngStream;
using pixelcert::SparsifiedMap;
using pixelcert::sparsify;

namespace {

AttributionMap random_map(int h, int w, RngStream& rng) {
  AttributionMap m = AttributionMap::zeros(h, w);
  for (double& v : m.values) v = rng.normal();
  return m;
}

std::set<int> one_indices(const SparsifiedMap& s) {
  std::set<int> out;
  for (int i = 0; i < s.pixel_count(); ++i)
    if (s.bits[i]) out.insert(i);
  return out;
}

}  // namespace

TEST(Sparsify, TopHalfOfFourPixels) {
  AttributionMap m = AttributionMap::zeros(2, 2);
  m.values = {4.0, 3.0, 2.0, 1.0};
  const SparsifiedMap s = sparsify(m, {50.0});
  EXPECT_EQ(s.bits, (std::vector<std::uint8_t>{1, 1, 0, 0}));
}

TEST(Sparsify, ConstantMapTiesBreakByIndex) {
  AttributionMap m = AttributionMap::zeros(4, 4);
  for (double& v : m.values) v = 1.5;
  const SparsifiedMap s = sparsify(m, {25.0});
  EXPECT_EQ(s.popcount(), 4);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(s.bits[i], 1) << i;
  for (int i = 4; i < 16; ++i) EXPECT_EQ(s.bits[i], 0) << i;
}

TEST(Sparsify, MatchesFullSortOracle) {
  RngStream rng(101, 0);
  const AttributionMap m = random_map(32, 32, rng);
  const SparsifiedMap s = sparsify(m, {30.0});
  EXPECT_EQ(s.popcount(), 307);  // floor(0.30 * 1024)

  const std::vector<int> expect = oracle::top_m_indices(m.values, 307);
  const std::set<int> got = one_indices(s);
  EXPECT_EQ(got, std::set<int>(expect.begin(), expect.end()));
}

TEST(Sparsify, PopcountExactAndNested) {
  RngStream rng(102, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const AttributionMap m = random_map(16, 16, rng);
    std::set<int> prev;
    for (double k : {5.0, 10.0, 25.0, 50.0, 100.0}) {
      const SparsifiedMap s = sparsify(m, {k});
      EXPECT_EQ(s.popcount(), static_cast<int>(std::floor(k * 256 / 100.0)));
      const std::set<int> cur = one_indices(s);
      for (int i : prev) EXPECT_TRUE(cur.count(i)) << "K-nesting violated at " << i;
      prev = cur;
    }
  }
}

TEST(Sparsify, RankInvariantUnderMonotoneTransform) {
  RngStream rng(103, 0);
  const AttributionMap m = random_map(8, 8, rng);
  AttributionMap t = m;
  for (double& v : t.values) v = std::exp(0.5 * v) + 3.0;  // strictly increasing
  EXPECT_EQ(sparsify(m, {30.0}).bits, sparsify(t, {30.0}).bits);
}

TEST(Sparsify, SmallKGivesEmptyMap) {
  AttributionMap m = AttributionMap::zeros(2, 2);
  m.values = {4.0, 3.0, 2.0, 1.0};
  const SparsifiedMap s = sparsify(m, {10.0});  // floor(0.4) = 0 pixels
  EXPECT_EQ(s.popcount(), 0);
}

TEST(Sparsify, RejectsNaNAndBadK) {
  AttributionMap m = AttributionMap::zeros(2, 2);
  m.values = {1.0, std::nan(""), 0.0, 0.0};
  EXPECT_THROW(sparsify(m, {50.0}), std::domain_error);

  AttributionMap ok = AttributionMap::zeros(2, 2);
  EXPECT_THROW(sparsify(ok, {0.0}), std::invalid_argument);
  EXPECT_THROW(sparsify(ok, {101.0}), std::invalid_argument);
}
