#include "otflow/refine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "otflow/numeric.hpp"
#include "otflow/parallel.hpp"

namespace otflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_quarter(const FlowField& f, const char* what) {
  if (f.scale() != Scale::kQuarter) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": expected a quarter-resolution grid");
  }
}

template <typename G>
void require_matches_features(const G& grid, const FeatureMap& g1,
                              const char* what) {
  if (grid.width() != g1.w() || grid.height() != g1.h()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": grid " + std::to_string(grid.width()) +
                    "x" + std::to_string(grid.height()) +
                    " does not match features " + std::to_string(g1.w()) +
                    "x" + std::to_string(g1.h()));
  }
}

void require_matches_corr(const RefineState& state, const LocalCorrelation& corr) {
  if (state.flow.width() != corr.w() || state.flow.height() != corr.h()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "local_refine_step: correlation grid does not match state");
  }
}

// (2r+1)^2 correlation samples around the current match, dy-major.
void gather_window(const LocalCorrelation& corr, int u, int v, double tu,
                   double tv, int r, std::span<double> out) {
  std::size_t k = 0;
  for (int a = -r; a <= r; ++a) {
    for (int b = -r; b <= r; ++b) out[k++] = corr(u, v, tu + b, tv + a);
  }
}

struct Softmax {
  std::vector<double> weights;  // zero for unavailable entries
  bool any = false;
};

Softmax softmax(std::span<const double> values, double temperature) {
  Softmax out;
  out.weights.assign(values.size(), 0.0);
  double m = -std::numeric_limits<double>::infinity();
  for (double x : values) {
    if (std::isfinite(x)) m = std::max(m, x);
  }
  if (!std::isfinite(m)) return out;
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) continue;
    out.weights[i] = std::exp((values[i] - m) / temperature);
    total += out.weights[i];
  }
  for (double& w : out.weights) w /= total;
  out.any = true;
  return out;
}

struct CellEvidence {
  double conf_logit = 0.0;
  double occ_logit = 0.0;
  double new_conf = 0.0;
};

CellEvidence evidence_step(const RefineState& state, std::size_t i,
                           std::span<const double> window,
                           const RefineConfig& cfg) {
  const LocalEvidence ev =
      local_evidence(window, cfg.local_radius, cfg.evidence_temperature,
                     cfg.evidence_dustbin);
  const double d = cfg.logit_clamp;
  CellEvidence out;
  out.conf_logit = cfg.conf_gain * (logit(clamp_probability(ev.peak, d)) -
                                    logit(clamp_probability(state.confidence[i], d)));
  out.occ_logit = cfg.occ_gain * (logit(clamp_probability(ev.total, d)) -
                                  logit(clamp_probability(state.occlusion[i], d)));
  out.new_conf = accumulate_logit(state.confidence[i], out.conf_logit, d);
  return out;
}

Residuals empty_residuals(const RefineState& state) {
  const int w = state.flow.width();
  const int h = state.flow.height();
  return Residuals{FlowField(w, h, Scale::kQuarter),
                   ScalarField(w, h, Scale::kQuarter),
                   ScalarField(w, h, Scale::kQuarter)};
}

template <typename Grid, typename Get, typename Put>
void upsample_into(const Grid& coarse, const UpsampleWeights& weights,
                   Get get, Put put, const char* what) {
  const int h = coarse.height();
  const int w = coarse.width();
  if (coarse.scale() != Scale::kQuarter) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": input must be at quarter resolution");
  }
  if (weights.full_h() != 4 * h || weights.full_w() != 4 * w) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": weights are " +
                    std::to_string(weights.full_w()) + "x" +
                    std::to_string(weights.full_h()) + ", expected " +
                    std::to_string(4 * w) + "x" + std::to_string(4 * h));
  }
  for (std::size_t k = 0; k < weights.data().size(); k += 9) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 9; ++j) {
      const double wk = weights.data()[k + j];
      if (!(wk >= 0.0)) {
        throw Error(ErrorCode::kWeightNotConvex,
                    std::string(what) + ": negative or NaN weight at pixel " +
                        std::to_string(k / 9));
      }
      sum += wk;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw Error(ErrorCode::kWeightNotConvex,
                  std::string(what) + ": weights at pixel " +
                      std::to_string(k / 9) + " sum to " + std::to_string(sum));
    }
  }
  parallel_for(static_cast<std::size_t>(4 * h), [&](std::size_t yi) {
    const int y = static_cast<int>(yi);
    const int cy = y / 4;
    for (int x = 0; x < 4 * w; ++x) {
      const int cx = x / 4;
      const auto wt = weights.at(x, y);
      std::size_t k = 0;
      for (int c = 0; c < get.channels; ++c) {
        double acc = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        k = 0;
        for (int a = -1; a <= 1; ++a) {
          const int ny = std::clamp(cy + a, 0, h - 1);
          for (int b = -1; b <= 1; ++b) {
            const int nx = std::clamp(cx + b, 0, w - 1);
            const double val = get(nx, ny, c);
            acc += wt[k++] * val;
            lo = std::min(lo, val);
            hi = std::max(hi, val);
          }
        }
        // Rounding in a weight sum of 1 +- 1e-16 must not push the value
        // outside its neighbourhood (or a probability above 1).
        put(x, y, c, std::clamp(acc, lo, hi));
      }
    }
  });
}

}  // namespace

void validate(const RefineConfig& cfg) {
  auto bad = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidConfig, "RefineConfig: " + msg);
  };
  if (!(cfg.conf_threshold > 0.0 && cfg.conf_threshold < 1.0)) bad("conf_threshold must be in (0,1)");
  if (cfg.steps < 0) bad("steps must be >= 0");
  if (!(cfg.logit_clamp > 0.0 && cfg.logit_clamp < 0.5)) bad("logit_clamp must be in (0,0.5)");
  if (cfg.diffusion_passes < 0) bad("diffusion_passes must be >= 0");
  if (cfg.diffusion_kernel_radius < 1) bad("diffusion_kernel_radius must be >= 1");
  if (!(cfg.diffusion_sigma > 0.0)) bad("diffusion_sigma must be > 0");
  if (!(cfg.diffusion_eps > 0.0)) bad("diffusion_eps must be > 0");
  if (cfg.local_radius < 1) bad("local_radius must be >= 1");
  if (!(cfg.softargmax_temperature > 0.0)) bad("softargmax_temperature must be > 0");
  if (!(cfg.slice_spacing > 0.0)) bad("slice_spacing must be > 0");
  if (!(cfg.evidence_temperature > 0.0)) bad("evidence_temperature must be > 0");
  if (!std::isfinite(cfg.evidence_dustbin)) bad("evidence_dustbin must be finite");
  if (!(cfg.conf_gain >= 0.0) || !(cfg.occ_gain >= 0.0)) bad("gains must be >= 0");
}

FlowField diffuse_aggregate(const FeatureMap& g1, const ConfidenceMap& conf,
                            const FlowField& f0, const RefineConfig& cfg) {
  validate(cfg);
  require_same_shape(f0, conf, "diffuse_aggregate");
  require_matches_features(f0, g1, "diffuse_aggregate");
  const int w = f0.width();
  const int h = f0.height();
  const int r = cfg.diffusion_kernel_radius;
  const int side = 2 * r + 1;
  std::vector<double> kernel(static_cast<std::size_t>(side * side));
  for (int a = -r; a <= r; ++a) {
    for (int b = -r; b <= r; ++b) {
      kernel[(a + r) * side + (b + r)] =
          std::exp(-(a * a + b * b) / (2.0 * cfg.diffusion_sigma * cfg.diffusion_sigma));
    }
  }

  std::vector<double> weight(conf.pixel_count());
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] = conf[i] >= cfg.conf_threshold ? conf[i] : 0.0;
  }
  FlowField flow = f0;
  FlowField next = f0;
  std::vector<double> next_weight(weight.size());

  for (int pass = 0; pass < cfg.diffusion_passes; ++pass) {
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t yi) {
      const int y = static_cast<int>(yi);
      for (int x = 0; x < w; ++x) {
        const double pu = flow.u(x, y);
        const double pv = flow.v(x, y);
        double nu = 0.0, nv = 0.0, den = 0.0, wsum = 0.0, cw = 0.0;
        for (int a = -r; a <= r; ++a) {
          const int ny = y + a;
          if (ny < 0 || ny >= h) continue;
          for (int b = -r; b <= r; ++b) {
            const int nx = x + b;
            if (nx < 0 || nx >= w) continue;
            const double k = kernel[(a + r) * side + (b + r)];
            const double c = weight[pixel_index(nx, ny, w)] * k;
            nu += c * (flow.u(nx, ny) - pu);
            nv += c * (flow.v(nx, ny) - pv);
            den += c;
            cw += c;
            wsum += k;
          }
        }
        next.set(x, y, pu + nu / (den + cfg.diffusion_eps),
                 pv + nv / (den + cfg.diffusion_eps));
        next_weight[pixel_index(x, y, w)] = cw / wsum;
      }
    });
    std::swap(flow, next);
    weight.swap(next_weight);
  }
  return flow;
}

FlowField global_refine(const FlowField& f0, const ConfidenceMap& conf,
                        const FeatureMap& g1, const Aggregator& agg,
                        const RefineConfig& cfg) {
  validate(cfg);
  require_same_shape(f0, conf, "global_refine");
  require_matches_features(f0, g1, "global_refine");
  const FlowField proposal = agg(g1, conf, f0);
  require_same_shape(f0, proposal, "global_refine: aggregator output");
  FlowField out = f0;
  for (std::size_t i = 0; i < conf.pixel_count(); ++i) {
    if (conf[i] >= cfg.conf_threshold) continue;
    out.data()[2 * i] = proposal.data()[2 * i];
    out.data()[2 * i + 1] = proposal.data()[2 * i + 1];
  }
  validate(out);
  return out;
}

FeatureCorrelation::FeatureCorrelation(const FeatureMap& g1,
                                       const DenseFeatureField& f2)
    : g1_(g1), f2_(f2) {
  if (g1.h() != f2.h() || g1.w() != f2.w() || g1.dim() != f2.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "FeatureCorrelation: frame descriptors differ in shape");
  }
}

double FeatureCorrelation::operator()(int u, int v, double tu, double tv) const {
  if (!(tu >= 0.0 && tu <= g1_.w() - 1 && tv >= 0.0 && tv <= g1_.h() - 1)) {
    return kNaN;
  }
  thread_local std::vector<double> buffer;
  buffer.resize(static_cast<std::size_t>(g1_.dim()));
  f2_.sample(tu, tv, buffer);
  const auto a = g1_.at(u, v);
  double dot = 0.0;
  for (std::size_t c = 0; c < buffer.size(); ++c) dot += a[c] * buffer[c];
  return dot / std::sqrt(static_cast<double>(g1_.dim()));
}

double CostVolumeCorrelation::operator()(int u, int v, double tu,
                                         double tv) const {
  const int w = c_.w();
  const int h = c_.h();
  if (!(tu >= 0.0 && tu <= w - 1 && tv >= 0.0 && tv <= h - 1)) return kNaN;
  const std::size_t s = pixel_index(u, v, w);
  const int x0 = static_cast<int>(std::floor(tu));
  const int y0 = static_cast<int>(std::floor(tv));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = tu - x0;
  const double fy = tv - y0;
  const double top = (1.0 - fx) * c_.at(s, pixel_index(x0, y0, w)) +
                     fx * c_.at(s, pixel_index(x1, y0, w));
  const double bottom = (1.0 - fx) * c_.at(s, pixel_index(x0, y1, w)) +
                        fx * c_.at(s, pixel_index(x1, y1, w));
  return (1.0 - fy) * top + fy * bottom;
}

double soft_argmax_offset(std::span<const double> slice, double temperature) {
  const Softmax sm = softmax(slice, temperature);
  if (!sm.any) return 0.0;
  const int r = static_cast<int>(slice.size() / 2);
  double offset = 0.0;
  for (std::size_t i = 0; i < slice.size(); ++i) {
    offset += sm.weights[i] * (static_cast<int>(i) - r);
  }
  return offset;
}

double zero_axis_rule(std::span<const double>, double) { return 0.0; }

LocalEvidence local_evidence(std::span<const double> window, int radius,
                             double temperature, double dustbin_score) {
  const int side = 2 * radius + 1;
  double m = -std::numeric_limits<double>::infinity();
  for (double x : window) {
    if (std::isfinite(x)) m = std::max(m, x);
  }
  if (!std::isfinite(m)) return {};
  double total = 0.0;
  double peak = 0.0;
  for (int a = 0; a < side; ++a) {
    for (int b = 0; b < side; ++b) {
      const double x = window[a * side + b];
      if (!std::isfinite(x)) continue;
      const double e = std::exp((x - m) / temperature);
      total += e;
      if (std::abs(a - radius) <= 1 && std::abs(b - radius) <= 1) peak += e;
    }
  }
  const double bin = std::exp(std::min((dustbin_score - m) / temperature, 700.0));
  return {peak / (total + bin), total / (total + bin)};
}

Residuals SoftArgmaxRefiner::residuals(const RefineState& state,
                                       const LocalCorrelation& corr,
                                       const RefineConfig& cfg) const {
  Residuals out = empty_residuals(state);
  const int w = state.flow.width();
  const int r = cfg.local_radius;
  const int side = 2 * r + 1;
  parallel_for(state.flow.pixel_count(), [&](std::size_t i) {
    const int u = static_cast<int>(i % static_cast<std::size_t>(w));
    const int v = static_cast<int>(i / static_cast<std::size_t>(w));
    const double tu = u + state.flow.u(u, v);
    const double tv = v + state.flow.v(u, v);
    std::vector<double> window(static_cast<std::size_t>(side * side));
    gather_window(corr, u, v, tu, tv, r, window);
    const CellEvidence ev = evidence_step(state, i, window, cfg);

    std::vector<double> u_slice(side), v_slice(side);
    const double step = cfg.slice_spacing;
    for (int k = 0; k < side; ++k) {
      u_slice[k] = corr(u, v, tu + (k - r) * step, tv);
      v_slice[k] = corr(u, v, tu, tv + (k - r) * step);
    }
    const double du = step * u_rule_(u_slice, cfg.softargmax_temperature);
    const double dv = step * v_rule_(v_slice, cfg.softargmax_temperature);
    out.flow.set(u, v, ev.new_conf * du, ev.new_conf * dv);
    out.confidence[i] = ev.conf_logit;
    out.occlusion[i] = ev.occ_logit;
  });
  return out;
}

Residuals CoupledRefiner::residuals(const RefineState& state,
                                    const LocalCorrelation& corr,
                                    const RefineConfig& cfg) const {
  Residuals out = empty_residuals(state);
  const int w = state.flow.width();
  const int r = cfg.local_radius;
  const int side = 2 * r + 1;
  parallel_for(state.flow.pixel_count(), [&](std::size_t i) {
    const int u = static_cast<int>(i % static_cast<std::size_t>(w));
    const int v = static_cast<int>(i / static_cast<std::size_t>(w));
    const double tu = u + state.flow.u(u, v);
    const double tv = v + state.flow.v(u, v);
    std::vector<double> window(static_cast<std::size_t>(side * side));
    gather_window(corr, u, v, tu, tv, r, window);
    const CellEvidence ev = evidence_step(state, i, window, cfg);

    // Joint soft-argmax over the same tap lattice the axis-wise rule uses.
    const double step = cfg.slice_spacing;
    std::vector<double> taps(window.size());
    std::size_t k = 0;
    for (int a = -r; a <= r; ++a) {
      for (int b = -r; b <= r; ++b) taps[k++] = corr(u, v, tu + b * step, tv + a * step);
    }
    const Softmax sm = softmax(taps, cfg.softargmax_temperature);
    double du = 0.0, dv = 0.0;
    if (sm.any) {
      for (int a = 0; a < side; ++a) {
        for (int b = 0; b < side; ++b) {
          du += sm.weights[a * side + b] * (b - r) * step;
          dv += sm.weights[a * side + b] * (a - r) * step;
        }
      }
    }
    out.flow.set(u, v, ev.new_conf * du, ev.new_conf * dv);
    out.confidence[i] = ev.conf_logit;
    out.occlusion[i] = ev.occ_logit;
  });
  return out;
}

Residuals ZeroRefiner::residuals(const RefineState& state,
                                 const LocalCorrelation&,
                                 const RefineConfig&) const {
  return empty_residuals(state);
}

RefineState apply_residuals(const RefineState& state, const Residuals& r,
                            const RefineConfig& cfg) {
  require_same_shape(state.flow, r.flow, "apply_residuals");
  require_same_shape(state.confidence, r.confidence, "apply_residuals");
  require_same_shape(state.occlusion, r.occlusion, "apply_residuals");
  RefineState next = state;
  const double d = cfg.logit_clamp;
  for (std::size_t k = 0; k < next.flow.data().size(); ++k) {
    next.flow.data()[k] += r.flow.data()[k];
  }
  for (std::size_t i = 0; i < next.confidence.pixel_count(); ++i) {
    next.confidence[i] = accumulate_logit(state.confidence[i], r.confidence[i], d);
    next.occlusion[i] = accumulate_logit(state.occlusion[i], r.occlusion[i], d);
  }
  next.step = state.step + 1;
  validate(next);
  return next;
}

RefineState local_refine_step(const RefineState& state,
                              const LocalCorrelation& corr,
                              const RefineConfig& cfg,
                              const LocalRefiner& refiner) {
  validate(cfg);
  validate(state);
  require_quarter(state.flow, "local_refine_step");
  if (state.step >= cfg.steps) {
    throw Error(ErrorCode::kIterationExhausted,
                "local_refine_step: step " + std::to_string(state.step) +
                    " >= configured steps " + std::to_string(cfg.steps));
  }
  require_matches_corr(state, corr);
  return apply_residuals(state, refiner.residuals(state, corr, cfg), cfg);
}

UpsampleWeights::UpsampleWeights(int full_h, int full_w,
                                 std::vector<double> weights)
    : full_h_(full_h), full_w_(full_w), weights_(std::move(weights)) {
  if (full_h < 0 || full_w < 0 ||
      weights_.size() != static_cast<std::size_t>(full_h) *
                             static_cast<std::size_t>(full_w) * 9) {
    throw Error(ErrorCode::kDimensionMismatch,
                "UpsampleWeights: expected full_h*full_w*9 weights");
  }
}

UpsampleWeights UpsampleWeights::bilinear(int coarse_h, int coarse_w) {
  // Sub-cell phase k of a full-res pixel sits at offset (k - 1.5) / 4 from
  // its parent cell centre.
  std::array<std::array<double, 3>, 4> taps{};
  for (int k = 0; k < 4; ++k) {
    const double d = (k - 1.5) / 4.0;
    taps[k] = d < 0.0 ? std::array<double, 3>{-d, 1.0 + d, 0.0}
                      : std::array<double, 3>{0.0, 1.0 - d, d};
  }
  const int fh = 4 * coarse_h;
  const int fw = 4 * coarse_w;
  std::vector<double> w(static_cast<std::size_t>(fh) * fw * 9);
  for (int y = 0; y < fh; ++y) {
    for (int x = 0; x < fw; ++x) {
      double* out = w.data() + pixel_index(x, y, fw) * 9;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) out[a * 3 + b] = taps[y % 4][a] * taps[x % 4][b];
      }
    }
  }
  return UpsampleWeights(fh, fw, std::move(w));
}

UpsampleWeights UpsampleWeights::nearest(int coarse_h, int coarse_w) {
  const int fh = 4 * coarse_h;
  const int fw = 4 * coarse_w;
  std::vector<double> w(static_cast<std::size_t>(fh) * fw * 9, 0.0);
  for (std::size_t p = 0; p < static_cast<std::size_t>(fh) * fw; ++p) w[p * 9 + 4] = 1.0;
  return UpsampleWeights(fh, fw, std::move(w));
}

namespace {

struct FlowGet {
  const FlowField& f;
  int channels = 2;
  double operator()(int x, int y, int c) const { return c == 0 ? f.u(x, y) : f.v(x, y); }
};

template <typename G>
struct ScalarGet {
  const G& g;
  int channels = 1;
  double operator()(int x, int y, int) const { return g.at(x, y); }
};

}  // namespace

FlowField convex_upsample(const FlowField& coarse, const UpsampleWeights& weights) {
  FlowField out(coarse.width() * 4, coarse.height() * 4, Scale::kFull);
  upsample_into(coarse, weights, FlowGet{coarse},
                [&](int x, int y, int c, double val) {
                  out.data()[2 * pixel_index(x, y, out.width()) + c] = 4.0 * val;
                },
                "convex_upsample");
  return out;
}

ConfidenceMap convex_upsample(const ConfidenceMap& coarse,
                              const UpsampleWeights& weights) {
  ConfidenceMap out(coarse.width() * 4, coarse.height() * 4, Scale::kFull);
  upsample_into(coarse, weights, ScalarGet<ConfidenceMap>{coarse},
                [&](int x, int y, int, double val) { out.at(x, y) = val; },
                "convex_upsample");
  return out;
}

OcclusionMap convex_upsample(const OcclusionMap& coarse,
                             const UpsampleWeights& weights) {
  OcclusionMap out(coarse.width() * 4, coarse.height() * 4, Scale::kFull);
  upsample_into(coarse, weights, ScalarGet<OcclusionMap>{coarse},
                [&](int x, int y, int, double val) { out.at(x, y) = val; },
                "convex_upsample");
  return out;
}

RefinementResult run_refinement(const FlowField& f0, const ConfidenceMap& conf0,
                                const OcclusionMap& occ0, const FeatureMap& g1,
                                const LocalCorrelation& corr,
                                const RefineConfig& cfg, const Aggregator& agg,
                                const LocalRefiner& refiner) {
  validate(cfg);
  require_quarter(f0, "run_refinement");
  require_same_shape(f0, conf0, "run_refinement");
  require_same_shape(f0, occ0, "run_refinement");
  RefinementResult result;
  RefineState state{global_refine(f0, conf0, g1, agg, cfg), conf0, occ0, 0};
  validate(state);
  result.history.push_back(state);
  for (int t = 0; t < cfg.steps; ++t) {
    state = local_refine_step(state, corr, cfg, refiner);
    result.history.push_back(state);
  }
  const UpsampleWeights weights = UpsampleWeights::bilinear(f0.height(), f0.width());
  result.flow = convex_upsample(state.flow, weights);
  result.confidence = convex_upsample(state.confidence, weights);
  result.occlusion = convex_upsample(state.occlusion, weights);
  return result;
}

RefinementResult run_refinement(const FlowField& f0, const ConfidenceMap& conf0,
                                const OcclusionMap& occ0, const FeatureMap& g1,
                                const CostVolume& c, const RefineConfig& cfg) {
  return run_refinement(f0, conf0, occ0, g1, CostVolumeCorrelation(c), cfg,
                        DiffusionAggregator(cfg), SoftArgmaxRefiner());
}

}  // namespace otflow
