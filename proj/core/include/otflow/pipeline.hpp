#pragma once

#include "otflow/features.hpp"
#include "otflow/grid.hpp"
#include "otflow/initflow.hpp"
#include "otflow/matching.hpp"
#include "otflow/refine.hpp"

namespace otflow {

struct PipelineConfig {
  FeatureConfig features;
  SinkhornConfig sinkhorn;
  WindowSpec window;
  RefineConfig refine;
  // Joint two-channel local residuals instead of the axis-wise rule.
  bool coupled_refinement = false;
};

void validate(const PipelineConfig& cfg);

struct FlowEstimate {
  // Full-resolution outputs.
  FlowField flow;
  ConfidenceMap confidence;
  OcclusionMap occlusion;
  // Quarter-resolution initial estimate from the transport plan.
  InitialEstimate initial;
  // Quarter-resolution refinement states t = 0..T.
  std::vector<RefineState> history;
  SinkhornDiagnostics sinkhorn;
};

// features -> correlation -> transport -> initial maps -> refinement.
FlowEstimate estimate_flow(const ImagePair& images, const PipelineConfig& cfg = {});

}  // namespace otflow
