#include <gtest/gtest.h>

#include <cmath>

#include "pixelcert/metrics.hpp"
#include "pixelcert/rng.hpp"

using namespace pixelcert;

namespace {

CertifiedMap make_cert(int h, int w, PixelLabel fill = PixelLabel::kAbstain) {
  CertifiedMap c;
  c.height = h;
  c.width = w;
  c.labels.assign(static_cast<std::size_t>(h) * w, fill);
  c.n_samples = 100;
  return c;
}

PixelLabel& label_at(CertifiedMap& c, int y, int x) {
  return c.labels[static_cast<std::size_t>(y) * c.width + x];
}

}  // namespace

TEST(PercentCertified, Extremes) {
  const CertifiedMap none = make_cert(8, 8, PixelLabel::kAbstain);
  EXPECT_DOUBLE_EQ(percent_certified(none).percent_certified, 0.0);

  const CertifiedMap all = make_cert(8, 8, PixelLabel::kOne);
  EXPECT_DOUBLE_EQ(percent_certified(all).percent_certified, 1.0);
}

TEST(PercentCertified, SplitArithmetic) {
  CertifiedMap c = make_cert(32, 32, PixelLabel::kZero);
  // 256 abstain, 512 one, remaining 256 zero
  for (int i = 0; i < 256; ++i) c.labels[i] = PixelLabel::kAbstain;
  for (int i = 256; i < 768; ++i) c.labels[i] = PixelLabel::kOne;
  const CertifiedSplit s = percent_certified(c);
  EXPECT_DOUBLE_EQ(s.percent_certified, 0.75);
  EXPECT_DOUBLE_EQ(s.one_rate, 0.5);
  EXPECT_DOUBLE_EQ(s.zero_rate, 0.25);
}

TEST(GridPg, FullyLocalizedMassScoresOne) {
  GridSpec spec{2, 4};
  AttributionMap a = AttributionMap::zeros(8, 8);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) a.at(y, x) = 1.0 + y + x;
  EXPECT_DOUBLE_EQ(gridpg(a, spec, 0).score, 1.0);
  EXPECT_FALSE(gridpg(a, spec, 0).degenerate);
  EXPECT_DOUBLE_EQ(gridpg(a, spec, 3).score, 0.0);
}

TEST(GridPg, UniformMassQuartersAndSumsToOne) {
  GridSpec spec{2, 4};
  AttributionMap a = AttributionMap::zeros(8, 8);
  for (double& v : a.values) v = 0.7;
  double total = 0.0;
  for (int cell = 0; cell < 4; ++cell) {
    EXPECT_NEAR(gridpg(a, spec, cell).score, 0.25, 1e-12);
    total += gridpg(a, spec, cell).score;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(GridPg, NegativesActAsClampedToZero) {
  GridSpec spec{2, 4};
  AttributionMap with_neg = AttributionMap::zeros(8, 8);
  AttributionMap clamped = AttributionMap::zeros(8, 8);
  RngStream rng(71, 0);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const bool in_cell0 = (y < 4 && x < 4);
      const double v = in_cell0 ? rng.uniform() : -rng.uniform();
      with_neg.at(y, x) = v;
      clamped.at(y, x) = std::max(v, 0.0);
    }
  EXPECT_DOUBLE_EQ(gridpg(with_neg, spec, 0).score, gridpg(clamped, spec, 0).score);
}

TEST(GridPg, DegenerateWhenNoPositiveMass) {
  GridSpec spec{2, 4};
  AttributionMap a = AttributionMap::zeros(8, 8);
  for (double& v : a.values) v = -1.0;
  const LocalizationScore s = gridpg(a, spec, 0);
  EXPECT_DOUBLE_EQ(s.score, 0.0);
  EXPECT_TRUE(s.degenerate);
}

TEST(GridPg, DimensionChecks) {
  GridSpec spec{2, 4};
  AttributionMap wrong = AttributionMap::zeros(8, 6);
  EXPECT_THROW(gridpg(wrong, spec, 0), std::invalid_argument);
  AttributionMap ok = AttributionMap::zeros(8, 8);
  EXPECT_THROW(gridpg(ok, spec, 4), std::invalid_argument);
}

TEST(CertifiedGridPg, FullyLocalizedOnes) {
  GridSpec spec{2, 4};
  CertifiedMap c = make_cert(8, 8, PixelLabel::kZero);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) label_at(c, y, x) = PixelLabel::kOne;
  EXPECT_DOUBLE_EQ(certified_gridpg(c, spec, 0).score, 1.0);
}

TEST(CertifiedGridPg, UniformSpreadQuarters) {
  GridSpec spec{2, 4};
  CertifiedMap c = make_cert(8, 8, PixelLabel::kZero);
  // one ONE pixel per cell corner
  label_at(c, 0, 0) = PixelLabel::kOne;
  label_at(c, 0, 4) = PixelLabel::kOne;
  label_at(c, 4, 0) = PixelLabel::kOne;
  label_at(c, 4, 4) = PixelLabel::kOne;
  for (int cell = 0; cell < 4; ++cell)
    EXPECT_DOUBLE_EQ(certified_gridpg(c, spec, cell).score, 0.25);
}

TEST(CertifiedGridPg, CountArithmetic) {
  GridSpec spec{2, 16};  // 32x32 grid
  CertifiedMap c = make_cert(32, 32, PixelLabel::kZero);
  int placed_in = 0, placed_out = 0;
  for (int y = 0; y < 16 && placed_in < 210; ++y)
    for (int x = 0; x < 16 && placed_in < 210; ++x) {
      label_at(c, y, x) = PixelLabel::kOne;
      ++placed_in;
    }
  for (int y = 16; y < 32 && placed_out < 90; ++y)
    for (int x = 0; x < 16 && placed_out < 90; ++x) {
      label_at(c, y, x) = PixelLabel::kOne;
      ++placed_out;
    }
  EXPECT_DOUBLE_EQ(certified_gridpg(c, spec, 0).score, 0.7);
}

TEST(CertifiedGridPg, DegenerateWithoutOnes) {
  GridSpec spec{2, 4};
  const CertifiedMap c = make_cert(8, 8, PixelLabel::kAbstain);
  const LocalizationScore s = certified_gridpg(c, spec, 0);
  EXPECT_DOUBLE_EQ(s.score, 0.0);
  EXPECT_TRUE(s.degenerate);
}

// On binary inputs, the two metrics agree: ONE pixels treated as mass 1.
TEST(CertifiedGridPg, ConsistentWithGridPgOnBinaryMaps) {
  GridSpec spec{2, 4};
  RngStream rng(72, 0);
  CertifiedMap c = make_cert(8, 8, PixelLabel::kZero);
  AttributionMap binary = AttributionMap::zeros(8, 8);
  for (int i = 0; i < 64; ++i) {
    if (rng.uniform() < 0.3) {
      c.labels[i] = PixelLabel::kOne;
      binary.values[i] = 1.0;
    }
  }
  for (int cell = 0; cell < 4; ++cell)
    EXPECT_DOUBLE_EQ(certified_gridpg(c, spec, cell).score, gridpg(binary, spec, cell).score);
}

TEST(AggAtt, IdenticalScoresGiveIdenticalMedians) {
  std::vector<double> scores(100, 0.5);
  const auto bins = aggatt_bins(scores);
  ASSERT_EQ(bins.size(), 6u);
  for (const auto& bin : bins) {
    ASSERT_GE(bin.median_index, 0);
    EXPECT_DOUBLE_EQ(scores[bin.median_index], 0.5);
  }
}

TEST(AggAtt, HalfSplitBins) {
  std::vector<double> scores(100);
  for (int i = 0; i < 100; ++i) scores[i] = i + 1.0;  // 1..100
  const std::vector<double> edges{0.0, 50.0, 100.0};
  const auto bins = aggatt_bins(scores, edges);
  ASSERT_EQ(bins.size(), 2u);
  EXPECT_EQ(bins[0].members.size(), 50u);
  EXPECT_EQ(bins[1].members.size(), 50u);
  // first bin holds scores 100..51, second 50..1
  EXPECT_GT(scores[bins[0].median_index], 50.0);
  EXPECT_LE(scores[bins[1].median_index], 50.0);
}

TEST(AggAtt, BinsAreDescendingSlices) {
  RngStream rng(73, 0);
  std::vector<double> scores(200);
  for (double& s : scores) s = rng.uniform();
  const auto bins = aggatt_bins(scores);
  for (std::size_t b = 0; b + 1 < bins.size(); ++b) {
    if (bins[b].members.empty() || bins[b + 1].members.empty()) continue;
    double min_b = 2.0, max_next = -1.0;
    for (int i : bins[b].members) min_b = std::min(min_b, scores[i]);
    for (int i : bins[b + 1].members) max_next = std::max(max_next, scores[i]);
    EXPECT_GE(min_b, max_next);
  }
  std::size_t total = 0;
  for (const auto& bin : bins) total += bin.members.size();
  EXPECT_EQ(total, scores.size());
}

TEST(AggAtt, Validation) {
  EXPECT_THROW(aggatt_bins(std::vector<double>{}), std::domain_error);
  std::vector<double> scores{1.0, 2.0};
  EXPECT_THROW(aggatt_bins(scores, std::vector<double>{0.0}), std::invalid_argument);
  EXPECT_THROW(aggatt_bins(scores, std::vector<double>{0.0, 101.0}), std::invalid_argument);
  EXPECT_THROW(aggatt_bins(scores, std::vector<double>{50.0, 20.0}), std::invalid_argument);
}

namespace {

// Deterministic tiny model for curve tests.
ToyClassifier curve_model() {
  RngStream rng(74, 0);
  ToyClassifier m;
  m.in_channels = 1;
  m.in_height = 4;
  m.in_width = 4;
  m.hidden = 8;
  m.classes = 3;
  m.init_zero();
  for (double& v : m.w1) v = 0.4 * rng.normal();
  for (double& v : m.w2) v = 0.4 * rng.normal();
  return m;
}

}  // namespace

TEST(Faithfulness, EmptyOneSetsGiveFlatCurve) {
  const ToyClassifier m = curve_model();
  RngStream rng(75, 0);
  ImageTensor x = ImageTensor::zeros(1, 4, 4);
  for (double& v : x.data) v = 0.2 + 0.6 * rng.uniform();

  std::map<double, CertifiedMap> certs;
  for (double k : {5.0, 10.0, 25.0, 50.0}) certs[k] = make_cert(4, 4, PixelLabel::kAbstain);

  const std::vector<double> schedule{5.0, 10.0, 25.0, 50.0};
  const FaithfulnessCurve curve = faithfulness_curve(m, x, 1, certs, schedule);
  ASSERT_EQ(curve.confidences.size(), 4u);
  for (double c : curve.confidences) EXPECT_DOUBLE_EQ(c, curve.baseline_confidence);
}

TEST(Faithfulness, DeletingEverythingMatchesFilledForward) {
  const ToyClassifier m = curve_model();
  RngStream rng(76, 0);
  ImageTensor x = ImageTensor::zeros(1, 4, 4);
  for (double& v : x.data) v = 0.2 + 0.6 * rng.uniform();

  std::map<double, CertifiedMap> certs;
  certs[100.0] = make_cert(4, 4, PixelLabel::kOne);

  const std::vector<double> schedule{100.0};
  const double fill = 0.25;
  const FaithfulnessCurve curve = faithfulness_curve(m, x, 0, certs, schedule, fill);

  ImageTensor filled = ImageTensor::zeros(1, 4, 4);
  for (double& v : filled.data) v = fill;
  EXPECT_DOUBLE_EQ(curve.confidences[0], m.probs(filled)[0]);
}

TEST(Faithfulness, DeletionsAreCumulative) {
  const ToyClassifier m = curve_model();
  RngStream rng(77, 0);
  ImageTensor x = ImageTensor::zeros(1, 4, 4);
  for (double& v : x.data) v = 0.2 + 0.6 * rng.uniform();

  // K=5 deletes pixel 0; K=10 certifies a *different* pixel only.
  std::map<double, CertifiedMap> certs;
  certs[5.0] = make_cert(4, 4, PixelLabel::kZero);
  certs[5.0].labels[0] = PixelLabel::kOne;
  certs[10.0] = make_cert(4, 4, PixelLabel::kZero);
  certs[10.0].labels[5] = PixelLabel::kOne;

  const std::vector<double> schedule{5.0, 10.0};
  const FaithfulnessCurve curve = faithfulness_curve(m, x, 0, certs, schedule);

  // After step 2 both pixel 0 and pixel 5 are gone.
  ImageTensor both = x;
  both.data[0] = 0.0;
  both.data[5] = 0.0;
  EXPECT_DOUBLE_EQ(curve.confidences[1], m.probs(both)[0]);
}

TEST(Faithfulness, MissingKIsConfigurationError) {
  const ToyClassifier m = curve_model();
  const ImageTensor x = ImageTensor::zeros(1, 4, 4);
  std::map<double, CertifiedMap> certs;
  certs[5.0] = make_cert(4, 4);
  const std::vector<double> schedule{5.0, 10.0};
  EXPECT_THROW(faithfulness_curve(m, x, 0, certs, schedule), std::invalid_argument);
}
