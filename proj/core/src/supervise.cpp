#include "otflow/supervise.hpp"

#include <cmath>
#include <string>

#include "otflow/numeric.hpp"

namespace otflow {

namespace {

template <typename T>
void require_nonempty(const std::vector<T>& preds, const char* what) {
  if (preds.empty()) {
    throw Error(ErrorCode::kEmptyPredictionList,
                std::string(what) + ": prediction list is empty");
  }
}

std::size_t count_visible(const OcclusionMap& occ_gt, const char* what) {
  validate_binary(occ_gt);
  std::size_t n = 0;
  for (double o : occ_gt.data()) n += o == 1.0 ? 1 : 0;
  if (n == 0) {
    throw Error(ErrorCode::kEmptyMask,
                std::string(what) + ": ground truth has no non-occluded pixels");
  }
  return n;
}

double mean(const std::vector<double>& values, std::size_t count) {
  return pairwise_sum(values) / static_cast<double>(count);
}

double sample_bilinear(const FlowField& f, double x, double y, int c) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, f.width() - 1);
  const int y1 = std::min(y0 + 1, f.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  auto at = [&](int xx, int yy) { return c == 0 ? f.u(xx, yy) : f.v(xx, yy); };
  return (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x1, y0)) +
         fy * ((1.0 - fx) * at(x0, y1) + fx * at(x1, y1));
}

}  // namespace

void validate(const LossWeights& w) {
  if (!(w.lambda_flow >= 0.0) || !(w.lambda_conf >= 0.0) || !(w.lambda_occ >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "LossWeights: weights must be >= 0");
  }
}

OcclusionMap gt_occlusion(const FlowField& forward, const FlowField& backward,
                          double thresh_px) {
  require_same_shape(forward, backward, "gt_occlusion");
  validate(forward);
  validate(backward);
  const int w = forward.width();
  const int h = forward.height();
  OcclusionMap out(w, h, forward.scale());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double tx = x + forward.u(x, y);
      const double ty = y + forward.v(x, y);
      if (!(tx >= 0.0 && tx <= w - 1 && ty >= 0.0 && ty <= h - 1)) continue;
      const double ex = forward.u(x, y) + sample_bilinear(backward, tx, ty, 0);
      const double ey = forward.v(x, y) + sample_bilinear(backward, tx, ty, 1);
      out.at(x, y) = std::hypot(ex, ey) < thresh_px ? 1.0 : 0.0;
    }
  }
  return out;
}

ConfidenceMap gt_confidence(const FlowField& pred, const FlowField& gt,
                            double thresh_px) {
  require_same_shape(pred, gt, "gt_confidence");
  ConfidenceMap out(pred.width(), pred.height(), pred.scale());
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const double e = std::hypot(pred.data()[2 * i] - gt.data()[2 * i],
                                pred.data()[2 * i + 1] - gt.data()[2 * i + 1]);
    out[i] = e < thresh_px ? 1.0 : 0.0;
  }
  return out;
}

double smooth_l1(double x, double beta) {
  const double a = std::abs(x);
  return a < beta ? 0.5 * a * a / beta : a - 0.5 * beta;
}

std::vector<double> loss_occlusion_terms(const std::vector<OcclusionMap>& preds,
                                         const OcclusionMap& gt) {
  require_nonempty(preds, "loss_occlusion");
  std::vector<double> terms;
  std::vector<double> diffs(gt.pixel_count());
  for (const auto& p : preds) {
    require_same_shape(p, gt, "loss_occlusion");
    for (std::size_t i = 0; i < diffs.size(); ++i) diffs[i] = std::abs(p[i] - gt[i]);
    terms.push_back(mean(diffs, diffs.size()));
  }
  return terms;
}

double loss_occlusion(const std::vector<OcclusionMap>& preds,
                      const OcclusionMap& gt) {
  return pairwise_sum(loss_occlusion_terms(preds, gt));
}

std::vector<double> loss_confidence_terms(const std::vector<ConfidenceMap>& preds,
                                          const std::vector<ConfidenceMap>& gts,
                                          const OcclusionMap& occ_gt) {
  require_nonempty(preds, "loss_confidence");
  if (gts.size() != preds.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "loss_confidence: " + std::to_string(preds.size()) +
                    " predictions but " + std::to_string(gts.size()) + " targets");
  }
  const std::size_t visible = count_visible(occ_gt, "loss_confidence");
  std::vector<double> terms;
  std::vector<double> diffs(occ_gt.pixel_count());
  for (std::size_t t = 0; t < preds.size(); ++t) {
    require_same_shape(preds[t], occ_gt, "loss_confidence");
    require_same_shape(gts[t], occ_gt, "loss_confidence");
    for (std::size_t i = 0; i < diffs.size(); ++i) {
      const double d = std::abs(preds[t][i] - gts[t][i]);
      diffs[i] = (t == 0 && occ_gt[i] != 1.0) ? 0.0 : d;
    }
    terms.push_back(mean(diffs, t == 0 ? visible : diffs.size()));
  }
  return terms;
}

double loss_confidence(const std::vector<ConfidenceMap>& preds,
                       const std::vector<ConfidenceMap>& gts,
                       const OcclusionMap& occ_gt) {
  return pairwise_sum(loss_confidence_terms(preds, gts, occ_gt));
}

std::vector<double> loss_flow_terms(const std::vector<FlowField>& preds,
                                    const FlowField& gt,
                                    const OcclusionMap& occ_gt, double beta) {
  require_nonempty(preds, "loss_flow");
  if (!(beta > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "loss_flow: beta must be > 0");
  }
  if (gt.width() != occ_gt.width() || gt.height() != occ_gt.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "loss_flow: occlusion mask shape mismatch");
  }
  const std::size_t visible = count_visible(occ_gt, "loss_flow");
  std::vector<double> terms;
  std::vector<double> per_pixel(gt.pixel_count());
  for (std::size_t t = 0; t < preds.size(); ++t) {
    require_same_shape(preds[t], gt, "loss_flow");
    for (std::size_t i = 0; i < per_pixel.size(); ++i) {
      const double du = preds[t].data()[2 * i] - gt.data()[2 * i];
      const double dv = preds[t].data()[2 * i + 1] - gt.data()[2 * i + 1];
      if (t == 0) {
        per_pixel[i] = occ_gt[i] == 1.0 ? smooth_l1(du, beta) + smooth_l1(dv, beta) : 0.0;
      } else {
        per_pixel[i] = std::abs(du) + std::abs(dv);
      }
    }
    terms.push_back(mean(per_pixel, t == 0 ? visible : per_pixel.size()));
  }
  return terms;
}

double loss_flow(const std::vector<FlowField>& preds, const FlowField& gt,
                 const OcclusionMap& occ_gt, double beta) {
  return pairwise_sum(loss_flow_terms(preds, gt, occ_gt, beta));
}

LossReport total_loss(double flow, double conf, double occ, const LossWeights& w) {
  validate(w);
  LossReport r;
  r.flow_loss = flow;
  r.conf_loss = conf;
  r.occ_loss = occ;
  r.total = w.lambda_flow * flow + w.lambda_conf * conf + w.lambda_occ * occ;
  return r;
}

LossReport supervise_sequence(const std::vector<FlowField>& flows,
                              const std::vector<ConfidenceMap>& confs,
                              const std::vector<OcclusionMap>& occs,
                              const FlowField& gt_flow,
                              const OcclusionMap& gt_occ, const LossWeights& w,
                              double beta) {
  std::vector<ConfidenceMap> targets;
  targets.reserve(flows.size());
  for (const auto& f : flows) targets.push_back(gt_confidence(f, gt_flow));

  LossReport r;
  r.flow_terms = loss_flow_terms(flows, gt_flow, gt_occ, beta);
  r.conf_terms = loss_confidence_terms(confs, targets, gt_occ);
  r.occ_terms = loss_occlusion_terms(occs, gt_occ);
  const LossReport combined =
      total_loss(pairwise_sum(r.flow_terms), pairwise_sum(r.conf_terms),
                 pairwise_sum(r.occ_terms), w);
  r.flow_loss = combined.flow_loss;
  r.conf_loss = combined.conf_loss;
  r.occ_loss = combined.occ_loss;
  r.total = combined.total;
  return r;
}

}  // namespace otflow
