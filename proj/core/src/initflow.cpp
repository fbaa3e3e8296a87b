#include "otflow/initflow.hpp"

#include <algorithm>
#include <cmath>

#include "otflow/numeric.hpp"
#include "otflow/parallel.hpp"

namespace otflow {

namespace {

struct RowSummary {
  double du = 0.0;
  double dv = 0.0;
  double window_mass = 0.0;
  double total_mass = 0.0;
};

RowSummary summarize_row(const ProbabilityVolume& plan, std::size_t source,
                         const WindowSpec& spec) {
  const int w = plan.w();
  const int h = plan.h();
  const auto row = plan.row(source);
  const std::size_t peak = argmax_target(plan, source);
  const int pu = static_cast<int>(peak % static_cast<std::size_t>(w));
  const int pv = static_cast<int>(peak / static_cast<std::size_t>(w));
  const int u0 = std::max(0, pu - spec.radius);
  const int u1 = std::min(w - 1, pu + spec.radius);
  const int v0 = std::max(0, pv - spec.radius);
  const int v1 = std::min(h - 1, pv + spec.radius);

  RowSummary out;
  double mu = 0.0;
  double mv = 0.0;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const double m = row[pixel_index(u, v, w)];
      out.window_mass += m;
      mu += m * (u - pu);
      mv += m * (v - pv);
    }
  }
  // The total is summed in a fixed order that does not depend on the window,
  // so occlusion is the same for every radius; bounding the window mass by it
  // keeps confidence <= occlusion exactly, not just up to rounding.
  out.total_mass = pairwise_sum(row);
  out.window_mass = std::min(out.window_mass, out.total_mass);

  const int su = static_cast<int>(source % static_cast<std::size_t>(w));
  const int sv = static_cast<int>(source / static_cast<std::size_t>(w));
  const double denom = out.window_mass + spec.eps_denom;
  out.du = (pu - su) + mu / denom;
  out.dv = (pv - sv) + mv / denom;
  return out;
}

template <typename Fn>
void for_each_row(const ProbabilityVolume& plan, const WindowSpec& spec,
                  Fn&& fn) {
  validate(spec);
  parallel_for(plan.pixels(), [&](std::size_t s) {
    fn(s, summarize_row(plan, s, spec));
  });
}

}  // namespace

void validate(const WindowSpec& spec) {
  if (spec.radius < 0) {
    throw Error(ErrorCode::kInvalidConfig, "WindowSpec: radius must be >= 0");
  }
  if (!(spec.eps_denom > 0.0) || !std::isfinite(spec.eps_denom)) {
    throw Error(ErrorCode::kInvalidConfig, "WindowSpec: eps_denom must be > 0");
  }
}

std::size_t argmax_target(const ProbabilityVolume& plan, std::size_t source) {
  const auto row = plan.row(source);
  std::size_t best = 0;
  for (std::size_t t = 1; t < row.size(); ++t) {
    if (row[t] > row[best]) best = t;
  }
  return best;
}

FlowField init_flow(const ProbabilityVolume& plan, const WindowSpec& spec) {
  FlowField flow(plan.w(), plan.h(), Scale::kQuarter);
  for_each_row(plan, spec, [&](std::size_t s, const RowSummary& r) {
    flow.data()[2 * s] = r.du;
    flow.data()[2 * s + 1] = r.dv;
  });
  return flow;
}

ConfidenceMap init_confidence(const ProbabilityVolume& plan,
                              const WindowSpec& spec) {
  ConfidenceMap conf(plan.w(), plan.h(), Scale::kQuarter);
  for_each_row(plan, spec, [&](std::size_t s, const RowSummary& r) {
    conf[s] = std::min(1.0, r.window_mass);
  });
  return conf;
}

OcclusionMap init_occlusion(const ProbabilityVolume& plan) {
  OcclusionMap occ(plan.w(), plan.h(), Scale::kQuarter);
  for_each_row(plan, WindowSpec{}, [&](std::size_t s, const RowSummary& r) {
    occ[s] = std::min(1.0, r.total_mass);
  });
  return occ;
}

InitialEstimate initialize(const ProbabilityVolume& plan,
                           const WindowSpec& spec) {
  InitialEstimate out{FlowField(plan.w(), plan.h(), Scale::kQuarter),
                      ConfidenceMap(plan.w(), plan.h(), Scale::kQuarter),
                      OcclusionMap(plan.w(), plan.h(), Scale::kQuarter)};
  for_each_row(plan, spec, [&](std::size_t s, const RowSummary& r) {
    out.flow.data()[2 * s] = r.du;
    out.flow.data()[2 * s + 1] = r.dv;
    out.confidence[s] = std::min(1.0, r.window_mass);
    out.occlusion[s] = std::min(1.0, r.total_mass);
  });
  return out;
}

}  // namespace otflow
