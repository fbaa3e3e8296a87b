#include "otflow/pipeline.hpp"

namespace otflow {

void validate(const PipelineConfig& cfg) {
  validate(cfg.features);
  validate(cfg.sinkhorn);
  validate(cfg.window);
  validate(cfg.refine);
}

FlowEstimate estimate_flow(const ImagePair& images, const PipelineConfig& cfg) {
  validate(cfg);
  validate(images);

  const DenseFeatureField field1(images.first, cfg.features);
  const DenseFeatureField field2(images.second, cfg.features);
  const FeatureMap g1 = field1.grid();
  const FeatureMap g2 = field2.grid();

  FlowEstimate out;
  const ProbabilityVolume plan =
      sinkhorn_dustbin(build_correlation(g1, g2), cfg.sinkhorn, &out.sinkhorn);
  out.initial = initialize(plan, cfg.window);

  RefineConfig refine = cfg.refine;
  refine.evidence_temperature = cfg.sinkhorn.epsilon;
  refine.evidence_dustbin = cfg.sinkhorn.dustbin_score;

  const FeatureCorrelation corr(g1, field2);
  const DiffusionAggregator agg(refine);
  const SoftArgmaxRefiner axis_wise;
  const CoupledRefiner coupled;
  const LocalRefiner& refiner =
      cfg.coupled_refinement ? static_cast<const LocalRefiner&>(coupled) : axis_wise;

  RefinementResult r = run_refinement(out.initial.flow, out.initial.confidence,
                                      out.initial.occlusion, g1, corr, refine,
                                      agg, refiner);
  out.flow = std::move(r.flow);
  out.confidence = std::move(r.confidence);
  out.occlusion = std::move(r.occlusion);
  out.history = std::move(r.history);
  return out;
}

}  // namespace otflow
