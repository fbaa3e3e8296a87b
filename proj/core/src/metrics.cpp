#include "otflow/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "otflow/numeric.hpp"

namespace otflow {

namespace {

struct Selection {
  std::vector<double> errors;     // endpoint error per selected pixel
  std::vector<double> magnitude;  // ground-truth magnitude per selected pixel
};

Selection select(const FlowField& pred, const FlowField& gt,
                 const OcclusionMap* mask, const OcclusionMap* mask2,
                 const char* what) {
  require_same_shape(pred, gt, what);
  for (const OcclusionMap* m : {mask, mask2}) {
    if (m && (m->width() != gt.width() || m->height() != gt.height())) {
      throw Error(ErrorCode::kDimensionMismatch,
                  std::string(what) + ": mask shape does not match flow");
    }
  }
  Selection s;
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
    if (mask && !((*mask)[i] > 0.5)) continue;
    if (mask2 && !((*mask2)[i] > 0.5)) continue;
    const double gu = gt.data()[2 * i];
    const double gv = gt.data()[2 * i + 1];
    s.errors.push_back(std::hypot(pred.data()[2 * i] - gu, pred.data()[2 * i + 1] - gv));
    s.magnitude.push_back(std::hypot(gu, gv));
  }
  if (s.errors.empty()) {
    throw Error(ErrorCode::kEmptyMask, std::string(what) + ": mask selects no pixels");
  }
  return s;
}

double mean_error(const Selection& s) {
  return pairwise_sum(s.errors) / static_cast<double>(s.errors.size());
}

double percent_over(const Selection& s, double thresh_px) {
  std::size_t n = 0;
  for (double e : s.errors) n += e > thresh_px ? 1 : 0;
  return 100.0 * static_cast<double>(n) / static_cast<double>(s.errors.size());
}

double percent_fl(const Selection& s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.errors.size(); ++i) {
    n += (s.errors[i] > 3.0 && s.errors[i] > 0.05 * s.magnitude[i]) ? 1 : 0;
  }
  return 100.0 * static_cast<double>(n) / static_cast<double>(s.errors.size());
}

}  // namespace

double epe(const FlowField& pred, const FlowField& gt, const OcclusionMap* mask) {
  return mean_error(select(pred, gt, mask, nullptr, "epe"));
}

double outlier_rate(const FlowField& pred, const FlowField& gt, double thresh_px,
                    const OcclusionMap* mask) {
  return percent_over(select(pred, gt, mask, nullptr, "outlier_rate"), thresh_px);
}

double fl_all(const FlowField& pred, const FlowField& gt, const OcclusionMap* mask) {
  return percent_fl(select(pred, gt, mask, nullptr, "fl_all"));
}

MetricReport evaluate(const FlowField& pred, const FlowField& gt,
                      const OcclusionMap* occlusion, const OcclusionMap* valid) {
  const Selection all = select(pred, gt, valid, nullptr, "evaluate");
  MetricReport r;
  r.epe_all = mean_error(all);
  r.outlier_1px = percent_over(all, 1.0);
  r.outlier_3px = percent_over(all, 3.0);
  r.outlier_5px = percent_over(all, 5.0);
  r.fl_all = percent_fl(all);
  if (occlusion) {
    r.epe_nonocc = mean_error(select(pred, gt, valid, occlusion, "evaluate"));
  }
  return r;
}

}  // namespace otflow
