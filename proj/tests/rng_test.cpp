#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pixelcert/rng.hpp"

using pixelcert::RngStream;

TEST(RngStream, SameSeedSameStream) {
  RngStream a(7, 0), b(7, 0);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
  }
  RngStream c(7, 0), d(7, 0);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_DOUBLE_EQ(c.normal(), d.normal());
  }
}

TEST(RngStream, DistinctStreamsDiffer) {
  RngStream a(7, 0), b(7, 1);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) equal += (a.next_u64() == b.next_u64());
  EXPECT_LE(equal, 1);

  RngStream c(7, 0), e(8, 0);
  equal = 0;
  for (int i = 0; i < 1000; ++i) equal += (c.next_u64() == e.next_u64());
  EXPECT_LE(equal, 1);
}

TEST(RngStream, NormalMoments) {
  RngStream rng(123, 5);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sumsq / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_GE(stddev, 0.98);
  EXPECT_LE(stddev, 1.02);
}

TEST(RngStream, UniformRange) {
  RngStream rng(9, 2);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RngStream, BoundedDrawsCoverRange) {
  RngStream rng(11, 3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) hits[static_cast<int>(rng.below(7))]++;
  for (int k = 0; k < 7; ++k) EXPECT_GT(hits[k], 0);
}

TEST(RngStream, ShuffleIsPermutation) {
  RngStream rng(13, 4);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sorted[i], i);
}
