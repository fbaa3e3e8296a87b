#pragma once

#include "otflow/grid.hpp"

namespace otflow {

struct WindowSpec {
  // Half-width of the square window around the argmax, in quarter-res cells.
  int radius = 2;
  // Stabiliser added to the centroid denominator.
  double eps_denom = 1e-8;
};

void validate(const WindowSpec& spec);

// Index of the largest valid-target mass in a source row; ties resolve to the
// smallest row-major index.
std::size_t argmax_target(const ProbabilityVolume& plan, std::size_t source);

// Mass-weighted centroid of the window around the row argmax, returned as a
// displacement from the source cell. The centroid is accumulated relative to
// the argmax, so a row with no mass yields exactly the argmax displacement.
FlowField init_flow(const ProbabilityVolume& plan, const WindowSpec& spec = {});

// Window mass around the row argmax.
ConfidenceMap init_confidence(const ProbabilityVolume& plan,
                              const WindowSpec& spec = {});

// Total valid-target mass of each row, i.e. 1 - dustbin mass.
OcclusionMap init_occlusion(const ProbabilityVolume& plan);

struct InitialEstimate {
  FlowField flow;
  ConfidenceMap confidence;
  OcclusionMap occlusion;
};

// All three maps in one pass over the plan.
InitialEstimate initialize(const ProbabilityVolume& plan,
                           const WindowSpec& spec = {});

}  // namespace otflow
