#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "otflow/supervise.hpp"

using namespace otflow;

namespace {

FlowField constant(int w, int h, double du, double dv) {
  FlowField f(w, h, Scale::kFull);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f.set(x, y, du, dv);
  }
  return f;
}

FlowField random_flow(int w, int h, std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> d(-spread, spread);
  FlowField f(w, h, Scale::kFull);
  for (double& x : f.data()) x = d(rng);
  return f;
}

template <typename G>
G random_unit(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  G g(w, h, Scale::kFull);
  for (double& x : g.data()) x = d(rng);
  return g;
}

OcclusionMap random_mask(int w, int h, std::mt19937_64& rng) {
  std::bernoulli_distribution b(0.7);
  OcclusionMap m(w, h, Scale::kFull);
  for (double& x : m.data()) x = b(rng) ? 1.0 : 0.0;
  m[0] = 1.0;
  return m;
}

}  // namespace

TEST(GtOcclusion, PerfectInverseIsVisibleInside) {
  const FlowField fwd = constant(10, 8, 2.0, -1.0);
  const FlowField bwd = constant(10, 8, -2.0, 1.0);
  const OcclusionMap o = gt_occlusion(fwd, bwd);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 10; ++x) {
      const bool inside = x + 2 <= 9 && y - 1 >= 0;
      EXPECT_EQ(o.at(x, y), inside ? 1.0 : 0.0) << x << "," << y;
    }
  }
}

TEST(GtOcclusion, ErrorOfExactlyTwoIsOccluded) {
  const FlowField fwd = constant(6, 6, 1.0, 0.0);
  const OcclusionMap exact = gt_occlusion(fwd, constant(6, 6, -3.0, 0.0));
  const OcclusionMap below = gt_occlusion(fwd, constant(6, 6, -2.875, 0.0));
  EXPECT_EQ(exact.at(2, 2), 0.0);
  EXPECT_EQ(below.at(2, 2), 1.0);
}

TEST(GtOcclusion, BilinearBackwardLookup) {
  // Backward field varies linearly in x, so the half-pixel lookup at
  // x + 0.5 is the mean of its neighbours.
  FlowField bwd(8, 4, Scale::kFull);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) bwd.set(x, y, -0.5 - 0.5 * x, 0.0);
  }
  const OcclusionMap o = gt_occlusion(constant(8, 4, 0.5, 0.0), bwd, 0.75 * 2.0);
  // At x = 2: fwd 0.5, bwd(2.5) = -1.75, error 1.25 < 1.5.
  EXPECT_EQ(o.at(2, 1), 1.0);
  // At x = 4: bwd(4.5) = -2.75, error 2.25.
  EXPECT_EQ(o.at(4, 1), 0.0);
}

TEST(GtOcclusion, ShapeMismatch) {
  EXPECT_THROW(gt_occlusion(constant(4, 4, 0, 0), constant(4, 5, 0, 0)), Error);
}

TEST(GtConfidence, FourPixelBand) {
  const FlowField gt = constant(3, 1, 0.0, 0.0);
  FlowField pred = gt;
  pred.set(0, 0, 3.9, 0.0);
  pred.set(1, 0, 0.0, 4.1);
  pred.set(2, 0, 0.0, 4.0);
  const ConfidenceMap c = gt_confidence(pred, gt);
  EXPECT_EQ(c.at(0, 0), 1.0);
  EXPECT_EQ(c.at(1, 0), 0.0);
  EXPECT_EQ(c.at(2, 0), 0.0);
  const ConfidenceMap perfect = gt_confidence(gt, gt);
  for (double x : perfect.data()) EXPECT_EQ(x, 1.0);
}

TEST(LossOcclusion, Examples) {
  const OcclusionMap gt(4, 4, Scale::kFull, 1.0);
  EXPECT_EQ(loss_occlusion({gt, gt}, gt), 0.0);
  EXPECT_EQ(loss_occlusion({OcclusionMap(4, 4, Scale::kFull, 0.5)}, gt), 0.5);
  try {
    loss_occlusion({}, gt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyPredictionList);
  }
}

TEST(LossOcclusion, MatchesOracle) {
  std::mt19937_64 rng(1);
  const OcclusionMap gt = random_mask(3, 3, rng);
  std::vector<OcclusionMap> preds;
  for (int t = 0; t < 4; ++t) preds.push_back(random_unit<OcclusionMap>(3, 3, rng));
  EXPECT_NEAR(loss_occlusion(preds, gt), oracle::occ_loss(preds, gt), 1e-12);
}

TEST(LossConfidence, MaskingOnlyAtStepZero) {
  OcclusionMap occ(2, 1, Scale::kFull, 1.0);
  occ.at(1, 0) = 0.0;
  const ConfidenceMap target(2, 1, Scale::kFull, 1.0);
  ConfidenceMap wrong = target;
  wrong.at(1, 0) = 0.0;  // wrong only on the occluded pixel
  EXPECT_EQ(loss_confidence({wrong, target}, {target, target}, occ), 0.0);
  EXPECT_EQ(loss_confidence({target, wrong}, {target, target}, occ), 0.5);
}

TEST(LossConfidence, MatchesOracle) {
  std::mt19937_64 rng(2);
  const OcclusionMap occ = random_mask(3, 3, rng);
  std::vector<ConfidenceMap> preds, gts;
  for (int t = 0; t < 4; ++t) {
    preds.push_back(random_unit<ConfidenceMap>(3, 3, rng));
    gts.push_back(random_unit<ConfidenceMap>(3, 3, rng));
  }
  EXPECT_NEAR(loss_confidence(preds, gts, occ), oracle::conf_loss(preds, gts, occ), 1e-12);
}

TEST(LossConfidence, Errors) {
  const ConfidenceMap c(2, 2, Scale::kFull, 0.5);
  const OcclusionMap none(2, 2, Scale::kFull, 0.0);
  try {
    loss_confidence({c}, {c}, none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyMask);
  }
  OcclusionMap soft(2, 2, Scale::kFull, 0.5);
  EXPECT_THROW(loss_confidence({c}, {c}, soft), Error);
  EXPECT_THROW(loss_confidence({c, c}, {c}, OcclusionMap(2, 2, Scale::kFull, 1.0)), Error);
}

TEST(LossFlow, Examples) {
  const FlowField gt = constant(4, 4, 1.0, 2.0);
  const OcclusionMap occ(4, 4, Scale::kFull, 1.0);
  EXPECT_EQ(loss_flow({gt, gt, gt}, gt, occ), 0.0);
  // 0.5 px per channel on the quadratic branch: 0.125 per channel.
  const FlowField off = constant(4, 4, 1.5, 2.5);
  const std::vector<double> terms = loss_flow_terms({off}, gt, occ, 1.0);
  ASSERT_EQ(terms.size(), 1u);
  EXPECT_EQ(terms[0], 0.25);
  EXPECT_THROW(loss_flow({gt}, gt, OcclusionMap(4, 4, Scale::kFull, 0.0)), Error);
}

TEST(LossFlow, MatchesOracle) {
  std::mt19937_64 rng(3);
  const FlowField gt = random_flow(3, 3, rng, 3.0);
  const OcclusionMap occ = random_mask(3, 3, rng);
  std::vector<FlowField> preds;
  for (int t = 0; t < 4; ++t) preds.push_back(random_flow(3, 3, rng, 3.0));
  for (double beta : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(loss_flow(preds, gt, occ, beta), oracle::flow_loss(preds, gt, occ, beta), 1e-12);
  }
}

TEST(LossFlow, FiniteDifferenceGradient) {
  std::mt19937_64 rng(4);
  const FlowField gt = random_flow(4, 4, rng, 2.0);
  const OcclusionMap occ = random_mask(4, 4, rng);
  std::vector<FlowField> preds;
  for (int t = 0; t < 3; ++t) preds.push_back(random_flow(4, 4, rng, 2.0));
  double nonocc = 0.0;
  for (double m : occ.data()) nonocc += m;
  const double n = 16.0;
  const double h = 1e-6;
  const double beta = 1.0;
  int checked = 0;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    for (std::size_t k = 0; k < preds[t].data().size(); ++k) {
      const std::size_t pixel = k / 2;
      const double x = preds[t].data()[k] - gt.data()[k];
      if (std::abs(std::abs(x) - beta) < 1e-3 || std::abs(x) < 1e-3) continue;
      double analytic = 0.0;
      if (t == 0) {
        if (occ[pixel] != 1.0) continue;
        analytic = (std::abs(x) < beta ? x / beta : (x > 0 ? 1.0 : -1.0)) / nonocc;
      } else {
        analytic = (x > 0 ? 1.0 : -1.0) / n;
      }
      auto plus = preds;
      auto minus = preds;
      plus[t].data()[k] += h;
      minus[t].data()[k] -= h;
      const double numeric =
          (loss_flow(plus, gt, occ, beta) - loss_flow(minus, gt, occ, beta)) / (2.0 * h);
      ASSERT_NEAR(numeric, analytic, 1e-5) << "t=" << t << " k=" << k;
      ++checked;
    }
  }
  EXPECT_GT(checked, 40);
}

TEST(Losses, MaskDecompositionForL1Terms) {
  std::mt19937_64 rng(5);
  const OcclusionMap occ = random_mask(5, 5, rng);
  OcclusionMap inverse(5, 5, Scale::kFull);
  OcclusionMap all(5, 5, Scale::kFull, 1.0);
  double frac = 0.0;
  for (std::size_t i = 0; i < occ.pixel_count(); ++i) {
    inverse[i] = 1.0 - occ[i];
    frac += occ[i] / 25.0;
  }
  const ConfidenceMap p = random_unit<ConfidenceMap>(5, 5, rng);
  const ConfidenceMap g = random_unit<ConfidenceMap>(5, 5, rng);
  const double full = loss_confidence({p}, {g}, all);
  const double split = frac * loss_confidence({p}, {g}, occ) +
                       (1.0 - frac) * loss_confidence({p}, {g}, inverse);
  EXPECT_NEAR(full, split, 1e-12);
}

TEST(Losses, NonNegative) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const FlowField gt = random_flow(3, 3, rng, 3.0);
    const OcclusionMap occ = random_mask(3, 3, rng);
    EXPECT_GE(loss_flow({random_flow(3, 3, rng, 3.0)}, gt, occ), 0.0);
    EXPECT_GE(loss_occlusion({random_unit<OcclusionMap>(3, 3, rng)}, occ), 0.0);
  }
}

TEST(TotalLoss, Weights) {
  const LossReport r = total_loss(1.0, 1.0, 1.0);
  EXPECT_NEAR(r.total, 1.2, 1e-12);
  EXPECT_EQ(total_loss(0.0, 0.0, 0.0).total, 0.0);
  EXPECT_EQ(total_loss(3.0, 5.0, 7.0, LossWeights{2.0, 0.0, 0.0}).total, 6.0);
  EXPECT_THROW(total_loss(1.0, 1.0, 1.0, LossWeights{-1.0, 0.1, 0.1}), Error);
}

TEST(SuperviseSequence, CombinesPerStepTerms) {
  std::mt19937_64 rng(7);
  const FlowField gt = random_flow(4, 4, rng, 5.0);
  const OcclusionMap occ = random_mask(4, 4, rng);
  std::vector<FlowField> flows;
  std::vector<ConfidenceMap> confs;
  std::vector<OcclusionMap> occs;
  for (int t = 0; t < 4; ++t) {
    flows.push_back(random_flow(4, 4, rng, 5.0));
    confs.push_back(random_unit<ConfidenceMap>(4, 4, rng));
    occs.push_back(random_unit<OcclusionMap>(4, 4, rng));
  }
  const LossReport r = supervise_sequence(flows, confs, occs, gt, occ);
  std::vector<ConfidenceMap> targets;
  for (const auto& f : flows) targets.push_back(gt_confidence(f, gt));
  EXPECT_NEAR(r.flow_loss, oracle::flow_loss(flows, gt, occ, 1.0), 1e-12);
  EXPECT_NEAR(r.conf_loss, oracle::conf_loss(confs, targets, occ), 1e-12);
  EXPECT_NEAR(r.occ_loss, oracle::occ_loss(occs, occ), 1e-12);
  EXPECT_NEAR(r.total, r.flow_loss + 0.1 * r.conf_loss + 0.1 * r.occ_loss, 1e-9);
  EXPECT_EQ(r.flow_terms.size(), 4u);
}

TEST(SmoothL1, Branches) {
  EXPECT_EQ(smooth_l1(0.5, 1.0), 0.125);
  EXPECT_EQ(smooth_l1(-3.0, 1.0), 2.5);
  EXPECT_EQ(smooth_l1(1.0, 1.0), 0.5);
}
