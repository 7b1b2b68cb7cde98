#include <gtest/gtest.h>

#include <set>

#include "pixelcert/gridharness.hpp"

using namespace pixelcert;

namespace {

// One quick trained model shared by all grid tests.
const ToyClassifier& test_model() {
  static const ToyClassifier model = [] {
    ShapeDataset ds;
    ds.seed = 1;
    TrainOptions opt;
    opt.epochs = 8;
    opt.train_count = 400;
    opt.seed = 1;
    opt.hidden = 64;
    return train(ds, opt);
  }();
  return model;
}

ShapeDataset test_dataset() {
  ShapeDataset ds;
  ds.seed = 1;
  return ds;
}

}  // namespace

TEST(BuildGrids, EveryClassOncePerGrid) {
  const auto grids = build_grids(test_dataset(), test_model(), 6, 0.99, 3);
  ASSERT_EQ(grids.size(), 6u);
  for (const GridInstance& g : grids) {
    ASSERT_EQ(g.cell_labels.size(), 4u);
    const std::set<int> classes(g.cell_labels.begin(), g.cell_labels.end());
    EXPECT_EQ(classes.size(), 4u);
    EXPECT_EQ(g.target_class, g.cell_labels[0]);
    EXPECT_EQ(g.image.height, 64);
    EXPECT_EQ(g.image.width, 64);
  }
}

TEST(BuildGrids, DeterministicGivenSeed) {
  const auto a = build_grids(test_dataset(), test_model(), 4, 0.99, 7);
  const auto b = build_grids(test_dataset(), test_model(), 4, 0.99, 7);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].cell_labels, b[i].cell_labels);
    EXPECT_EQ(a[i].member_indices, b[i].member_indices);
    EXPECT_EQ(a[i].image.data, b[i].image.data);
  }
  const auto c = build_grids(test_dataset(), test_model(), 4, 0.99, 8);
  EXPECT_NE(a[0].image.data, c[0].image.data);
}

TEST(BuildGrids, MembersPassConfidenceFilter) {
  const ShapeDataset ds = test_dataset();
  const ToyClassifier& model = test_model();
  const auto grids = build_grids(ds, model, 4, 0.99, 11);
  ImageTensor tile;
  for (const GridInstance& g : grids) {
    for (int cell = 0; cell < 4; ++cell) {
      g.extract_tile(cell, tile);
      const std::vector<double> p = model.probs(tile);
      const int pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
      EXPECT_EQ(pred, g.cell_labels[cell]);
      EXPECT_GE(p[pred], 0.99);
    }
  }
}

// Tiling is lossless: each tile reproduces its source dataset image exactly.
TEST(BuildGrids, TilesRecoverSourceImagesBitExactly) {
  const ShapeDataset ds = test_dataset();
  const auto grids = build_grids(ds, test_model(), 3, 0.99, 13);
  ImageTensor tile;
  for (const GridInstance& g : grids) {
    for (int cell = 0; cell < 4; ++cell) {
      g.extract_tile(cell, tile);
      const auto [src, label] = generate(ds, g.member_indices[cell]);
      EXPECT_EQ(label, g.cell_labels[cell]);
      EXPECT_EQ(tile.data, src.data);
    }
  }
}

TEST(BuildGrids, ImpossibleFilterReportsPerClassCounts) {
  try {
    build_grids(test_dataset(), test_model(), 2, 1.0, 3);  // prob >= 1.0 never holds
    FAIL() << "expected failure";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("class0="), std::string::npos) << e.what();
  }
}

TEST(TiledScorer, GridLogitsAreTileSums) {
  const ToyClassifier& model = test_model();
  const auto grids = build_grids(test_dataset(), model, 1, 0.99, 17);
  const GridInstance& g = grids[0];

  TiledScorer tiled(model, 2);
  const std::vector<double> grid_logits = tiled.logits(g.image);

  std::vector<double> expect(4, 0.0);
  ImageTensor tile;
  for (int cell = 0; cell < 4; ++cell) {
    g.extract_tile(cell, tile);
    const std::vector<double> z = model.logits(tile);
    for (int k = 0; k < 4; ++k) expect[k] += z[k];
  }
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(grid_logits[k], expect[k], 1e-12);
}

TEST(TiledScorer, GradientMatchesFiniteDifferences) {
  const ToyClassifier& model = test_model();
  const auto grids = build_grids(test_dataset(), model, 1, 0.99, 19);
  ImageTensor x = grids[0].image;

  TiledScorer tiled(model, 2);
  const ImageTensor g = tiled.grad_logit(x, grids[0].target_class);

  // Spot-check a handful of elements across tiles.
  const double h = 1e-4;
  for (std::size_t i : {std::size_t(5), std::size_t(2000), std::size_t(6000),
                        std::size_t(9000), std::size_t(12000)}) {
    const double orig = x.data[i];
    x.data[i] = orig + h;
    const double up = tiled.logits(x)[grids[0].target_class];
    x.data[i] = orig - h;
    const double dn = tiled.logits(x)[grids[0].target_class];
    x.data[i] = orig;
    const double numeric = (up - dn) / (2 * h);
    EXPECT_NEAR(g.data[i], numeric, 1e-5 * std::max(1.0, std::fabs(numeric)));
  }
}

TEST(EvaluateGrid, PerfectLocalizerScoresOne) {
  const auto grids = build_grids(test_dataset(), test_model(), 3, 0.99, 23);

  AttributionRequest req;
  req.method = Method::kStubCell;
  req.stub_rect = {0, 0, 32, 32};  // exactly the target cell

  SmoothingConfig cfg;
  cfg.n_samples = 100;
  cfg.k_percent = 25.0;  // 1024 of 4096 pixels = the stub cell
  cfg.master_seed = 2;

  double mean = 0.0;
  for (const GridInstance& g : grids) {
    const GridEvaluation ev = evaluate_grid(g, req, cfg);
    EXPECT_FALSE(ev.certified_score.degenerate);
    EXPECT_DOUBLE_EQ(ev.certified_score.score, 1.0);
    EXPECT_DOUBLE_EQ(ev.gridpg_score.score, 1.0);
    mean += ev.certified_score.score;
  }
  EXPECT_DOUBLE_EQ(mean / grids.size(), 1.0);
}

TEST(EvaluateGrid, FreshNoiseOracleAbstainsAlmostEverywhere) {
  const auto grids = build_grids(test_dataset(), test_model(), 1, 0.99, 29);

  AttributionRequest req;
  req.method = Method::kStubNoise;
  req.seed = 3;

  SmoothingConfig cfg;
  cfg.n_samples = 50;
  cfg.k_percent = 50.0;
  cfg.master_seed = 4;

  const GridEvaluation ev = evaluate_grid(grids[0], req, cfg);
  EXPECT_TRUE(ev.certified_score.degenerate);
  const CertifiedSplit split = percent_certified(ev.cert);
  EXPECT_LT(split.percent_certified, 0.01);
}

TEST(EvaluateGrid, UniformLocalizerNearQuarter) {
  const auto grids = build_grids(test_dataset(), test_model(), 5, 0.99, 31);

  SmoothingConfig cfg;
  cfg.n_samples = 100;
  cfg.k_percent = 50.0;
  cfg.master_seed = 6;

  double mean = 0.0;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    AttributionRequest req;
    req.method = Method::kStubFixed;
    req.seed = 1000 + i;  // a fresh fixed map per grid
    const GridEvaluation ev = evaluate_grid(grids[i], req, cfg);
    EXPECT_FALSE(ev.certified_score.degenerate);
    mean += ev.certified_score.score;
  }
  mean /= grids.size();
  EXPECT_NEAR(mean, 0.25, 0.05);
}

TEST(EvaluateGrid, RealMethodSmokeRun) {
  const ToyClassifier& model = test_model();
  const auto grids = build_grids(test_dataset(), model, 1, 0.99, 37);

  AttributionRequest req;
  req.model = &model;
  req.method = Method::kGrad;

  SmoothingConfig cfg;
  cfg.n_samples = 10;
  cfg.k_percent = 25.0;
  cfg.master_seed = 8;

  const GridEvaluation ev = evaluate_grid(grids[0], req, cfg, 2);
  EXPECT_EQ(ev.cert.height, 64);
  EXPECT_EQ(ev.cert.width, 64);
  EXPECT_GE(ev.gridpg_score.score, 0.0);
  EXPECT_LE(ev.gridpg_score.score, 1.0);
}
