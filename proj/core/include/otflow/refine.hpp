#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "otflow/features.hpp"
#include "otflow/grid.hpp"

namespace otflow {

struct RefineConfig {
  // Gate threshold tau: cells with confidence >= tau keep their initial flow.
  double conf_threshold = 0.2;
  // Number of local refinement steps T.
  int steps = 3;
  // delta: probabilities are clamped to [delta, 1 - delta] around logits.
  double logit_clamp = 1e-6;

  // Reference aggregator.
  int diffusion_passes = 8;
  int diffusion_kernel_radius = 1;
  double diffusion_sigma = 1.0;
  double diffusion_eps = 1e-8;

  // Reference local residual rule.
  int local_radius = 3;
  double softargmax_temperature = 0.001;
  // Distance between slice taps, in quarter-resolution cells. A quarter cell
  // is one full-resolution pixel: a unit-cell lattice cannot localise a
  // sub-cell peak and its soft-argmax drifts on asymmetric correlation.
  double slice_spacing = 0.25;
  // Entropy and dustbin score used to turn local correlation into
  // confidence/occlusion evidence; the pipeline copies them from the
  // transport solver so both stages agree on what "unmatched" means.
  double evidence_temperature = 0.01;
  double evidence_dustbin = 0.21;
  // Fraction of the logit gap to the evidence closed per step.
  double conf_gain = 0.5;
  double occ_gain = 0.5;
};

void validate(const RefineConfig& cfg);

// Replacement flow proposal for low-confidence cells.
class Aggregator {
 public:
  virtual ~Aggregator() = default;
  virtual FlowField operator()(const FeatureMap& g1, const ConfidenceMap& conf,
                               const FlowField& f0) const = 0;
};

// K passes of confidence-weighted Gaussian diffusion. Seeds are the cells at
// or above the gate threshold; their weight spreads with the flow so that
// holes wider than one kernel radius still fill. Each pass updates
//   F(p) += sum_n c(n) w(n) (F(n) - F(p)) / (sum_n c(n) w(n) + eps),
// which leaves F unchanged where no neighbour carries weight and keeps
// constant fields exactly constant.
FlowField diffuse_aggregate(const FeatureMap& g1, const ConfidenceMap& conf,
                            const FlowField& f0, const RefineConfig& cfg);

class DiffusionAggregator final : public Aggregator {
 public:
  explicit DiffusionAggregator(RefineConfig cfg) : cfg_(cfg) {}
  FlowField operator()(const FeatureMap& g1, const ConfidenceMap& conf,
                       const FlowField& f0) const override {
    return diffuse_aggregate(g1, conf, f0, cfg_);
  }

 private:
  RefineConfig cfg_;
};

// M * F0 + (1 - M) * agg(g1, conf, F0) with M = [conf >= tau]. Gated cells
// are copied bit for bit.
FlowField global_refine(const FlowField& f0, const ConfidenceMap& conf,
                        const FeatureMap& g1, const Aggregator& agg,
                        const RefineConfig& cfg);

// Similarity between source cell (u, v) of frame 1 and the continuous
// position (tu, tv) of frame 2, both in quarter-res cells. Returns NaN when
// the target lies outside the grid.
class LocalCorrelation {
 public:
  virtual ~LocalCorrelation() = default;
  virtual int w() const = 0;
  virtual int h() const = 0;
  virtual double operator()(int u, int v, double tu, double tv) const = 0;
};

// Descriptor of g1 at the source against the frame-2 descriptor evaluated
// at the continuous target.
class FeatureCorrelation final : public LocalCorrelation {
 public:
  FeatureCorrelation(const FeatureMap& g1, const DenseFeatureField& f2);
  int w() const override { return g1_.w(); }
  int h() const override { return g1_.h(); }
  double operator()(int u, int v, double tu, double tv) const override;

 private:
  const FeatureMap& g1_;
  const DenseFeatureField& f2_;
};

// Bilinear lookup into a precomputed cost volume.
class CostVolumeCorrelation final : public LocalCorrelation {
 public:
  explicit CostVolumeCorrelation(const CostVolume& c) : c_(c) {}
  int w() const override { return c_.w(); }
  int h() const override { return c_.h(); }
  double operator()(int u, int v, double tu, double tv) const override;

 private:
  const CostVolume& c_;
};

// Per-step residuals: flow offsets in quarter-res cells, logit increments for
// confidence and occlusion.
struct Residuals {
  FlowField flow;
  ScalarField confidence;
  ScalarField occlusion;
};

class LocalRefiner {
 public:
  virtual ~LocalRefiner() = default;
  virtual Residuals residuals(const RefineState& state,
                              const LocalCorrelation& corr,
                              const RefineConfig& cfg) const = 0;
};

// Maps a 1-D correlation slice (NaN = unavailable) centred on the current
// estimate to a sub-cell offset.
using AxisRule =
    std::function<double(std::span<const double> slice, double temperature)>;

// Softmax-weighted mean offset over the finite entries; 0 if none.
double soft_argmax_offset(std::span<const double> slice, double temperature);
double zero_axis_rule(std::span<const double> slice, double temperature);

// Confidence and occlusion evidence from a (2r+1)^2 correlation window
// around the current match, computed with the transport solver's entropy
// and dustbin: peak = mass of the central 3x3 / (window mass + dustbin),
// total = window mass / (window mass + dustbin). Unavailable entries are NaN.
struct LocalEvidence {
  double peak = 0.0;
  double total = 0.0;
};
LocalEvidence local_evidence(std::span<const double> window, int radius,
                             double temperature, double dustbin_score);

// Reference rule standing in for the learned recurrent update. The u and v
// offsets come from two independent evaluations over the horizontal and
// vertical slices through the current match; the flow step is scaled by the
// updated confidence so that unreliable cells move less.
class SoftArgmaxRefiner final : public LocalRefiner {
 public:
  SoftArgmaxRefiner() = default;
  SoftArgmaxRefiner(AxisRule u_rule, AxisRule v_rule)
      : u_rule_(std::move(u_rule)), v_rule_(std::move(v_rule)) {}
  Residuals residuals(const RefineState& state, const LocalCorrelation& corr,
                      const RefineConfig& cfg) const override;

 private:
  AxisRule u_rule_ = soft_argmax_offset;
  AxisRule v_rule_ = soft_argmax_offset;
};

// Joint two-channel variant: one softmax over the full window supplies both
// offsets.
class CoupledRefiner final : public LocalRefiner {
 public:
  Residuals residuals(const RefineState& state, const LocalCorrelation& corr,
                      const RefineConfig& cfg) const override;
};

class ZeroRefiner final : public LocalRefiner {
 public:
  Residuals residuals(const RefineState& state, const LocalCorrelation& corr,
                      const RefineConfig& cfg) const override;
};

// Applies residuals: F + dF, sigma(logit(clamp(G)) + dG), same for O, and
// increments the step counter.
RefineState apply_residuals(const RefineState& state, const Residuals& r,
                            const RefineConfig& cfg);

// One refinement step; throws kIterationExhausted once state.step reaches
// cfg.steps.
RefineState local_refine_step(const RefineState& state,
                              const LocalCorrelation& corr,
                              const RefineConfig& cfg,
                              const LocalRefiner& refiner = SoftArgmaxRefiner());

// Nine convex weights per full-resolution pixel over the 3x3 coarse
// neighbourhood of its parent cell, neighbours ordered dy-major from (-1,-1).
class UpsampleWeights {
 public:
  UpsampleWeights() = default;
  UpsampleWeights(int full_h, int full_w, std::vector<double> weights);

  // Bilinear interpolation at coarse position ((x - 1.5) / 4, (y - 1.5) / 4)
  // with replicated borders, written as 3x3 convex weights.
  static UpsampleWeights bilinear(int coarse_h, int coarse_w);
  // Nearest-neighbour selection of the parent cell.
  static UpsampleWeights nearest(int coarse_h, int coarse_w);

  int full_h() const { return full_h_; }
  int full_w() const { return full_w_; }
  std::span<const double> at(int x, int y) const {
    return std::span<const double>(weights_).subspan(pixel_index(x, y, full_w_) * 9, 9);
  }
  std::span<const double> data() const { return weights_; }

 private:
  int full_h_ = 0;
  int full_w_ = 0;
  std::vector<double> weights_;
};

// Convex combination of each pixel's 3x3 coarse neighbourhood (replicated
// at borders). Flow values are additionally multiplied by 4. Throws
// kWeightNotConvex for negative weights or sums off 1 by more than 1e-6.
FlowField convex_upsample(const FlowField& coarse, const UpsampleWeights& weights);
ConfidenceMap convex_upsample(const ConfidenceMap& coarse,
                              const UpsampleWeights& weights);
OcclusionMap convex_upsample(const OcclusionMap& coarse,
                             const UpsampleWeights& weights);

struct RefinementResult {
  FlowField flow;
  ConfidenceMap confidence;
  OcclusionMap occlusion;
  // Quarter-resolution states t = 0..T; history[0] holds the globally
  // refined flow with the initial confidence and occlusion.
  std::vector<RefineState> history;
};

// Global refinement, cfg.steps local steps, then bilinear convex upsampling
// of all three maps.
RefinementResult run_refinement(const FlowField& f0, const ConfidenceMap& conf0,
                                const OcclusionMap& occ0, const FeatureMap& g1,
                                const LocalCorrelation& corr,
                                const RefineConfig& cfg,
                                const Aggregator& agg,
                                const LocalRefiner& refiner);

// Convenience overload using the reference aggregator and axis-wise rule
// over a cost volume.
RefinementResult run_refinement(const FlowField& f0, const ConfidenceMap& conf0,
                                const OcclusionMap& occ0, const FeatureMap& g1,
                                const CostVolume& c, const RefineConfig& cfg);

}  // namespace otflow
