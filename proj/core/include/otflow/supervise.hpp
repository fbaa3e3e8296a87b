#pragma once

#include <vector>

#include "otflow/grid.hpp"

namespace otflow {

struct LossWeights {
  double lambda_flow = 1.0;
  double lambda_conf = 0.1;
  double lambda_occ = 0.1;
};

void validate(const LossWeights& w);

struct LossReport {
  double flow_loss = 0.0;
  double conf_loss = 0.0;
  double occ_loss = 0.0;
  double total = 0.0;
  // Per refinement step t = 0..T; empty when only scalars were combined.
  std::vector<double> flow_terms;
  std::vector<double> conf_terms;
  std::vector<double> occ_terms;
};

// 1 where |F_fwd(p) + F_bwd(p + F_fwd(p))| < thresh_px, 0 otherwise.
// F_bwd is sampled bilinearly; targets outside [0, W-1] x [0, H-1] are 0.
OcclusionMap gt_occlusion(const FlowField& forward, const FlowField& backward,
                          double thresh_px = 2.0);

// 1 where the endpoint error is below thresh_px, 0 otherwise.
ConfidenceMap gt_confidence(const FlowField& pred, const FlowField& gt,
                            double thresh_px = 4.0);

double smooth_l1(double x, double beta);

// Sum over steps of the mean absolute occlusion error.
double loss_occlusion(const std::vector<OcclusionMap>& preds,
                      const OcclusionMap& gt);
std::vector<double> loss_occlusion_terms(const std::vector<OcclusionMap>& preds,
                                         const OcclusionMap& gt);

// Step 0: L1 over non-occluded pixels only (occ_gt == 1). Steps >= 1:
// full-image mean L1. gts[t] is the target for preds[t].
double loss_confidence(const std::vector<ConfidenceMap>& preds,
                       const std::vector<ConfidenceMap>& gts,
                       const OcclusionMap& occ_gt);
std::vector<double> loss_confidence_terms(const std::vector<ConfidenceMap>& preds,
                                          const std::vector<ConfidenceMap>& gts,
                                          const OcclusionMap& occ_gt);

// Step 0: smooth-L1 with transition beta, averaged over non-occluded pixels.
// Steps >= 1: full-image mean L1. Channel losses are summed.
double loss_flow(const std::vector<FlowField>& preds, const FlowField& gt,
                 const OcclusionMap& occ_gt, double beta = 1.0);
std::vector<double> loss_flow_terms(const std::vector<FlowField>& preds,
                                    const FlowField& gt,
                                    const OcclusionMap& occ_gt,
                                    double beta = 1.0);

LossReport total_loss(double flow, double conf, double occ,
                      const LossWeights& w = {});

// Full supervision of a prediction sequence. Confidence targets are rebuilt
// per step from each flow with the 4 px rule.
LossReport supervise_sequence(const std::vector<FlowField>& flows,
                              const std::vector<ConfidenceMap>& confs,
                              const std::vector<OcclusionMap>& occs,
                              const FlowField& gt_flow,
                              const OcclusionMap& gt_occ,
                              const LossWeights& w = {}, double beta = 1.0);

}  // namespace otflow
