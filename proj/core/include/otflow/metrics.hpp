#pragma once

#include <optional>

#include "otflow/grid.hpp"

namespace otflow {

// Masks select pixels whose value is above 0.5 (non-occluded / valid). A
// null mask selects every pixel. Empty selections throw kEmptyMask.

// Mean endpoint error in pixels.
double epe(const FlowField& pred, const FlowField& gt,
           const OcclusionMap* mask = nullptr);

// Percentage of pixels whose endpoint error exceeds thresh_px.
double outlier_rate(const FlowField& pred, const FlowField& gt, double thresh_px,
                    const OcclusionMap* mask = nullptr);

// KITTI outlier percentage: error > 3 px and > 5% of the ground-truth
// magnitude.
double fl_all(const FlowField& pred, const FlowField& gt,
              const OcclusionMap* mask = nullptr);

struct MetricReport {
  double epe_all = 0.0;
  std::optional<double> epe_nonocc;
  double outlier_1px = 0.0;
  double outlier_3px = 0.0;
  double outlier_5px = 0.0;
  double fl_all = 0.0;
};

// valid restricts every statistic (e.g. sparse KITTI ground truth);
// occlusion additionally yields epe_nonocc over valid & non-occluded pixels.
MetricReport evaluate(const FlowField& pred, const FlowField& gt,
                      const OcclusionMap* occlusion = nullptr,
                      const OcclusionMap* valid = nullptr);

}  // namespace otflow
