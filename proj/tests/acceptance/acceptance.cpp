// Desk-scale acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "otflow/otflow.hpp"

using namespace otflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failing check so the summary line says what broke.
class Checker {
 public:
  bool check(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      first_failure_ = what;
    }
    return ok;
  }
  Outcome finish(std::string detail) const {
    if (!pass_) detail = "first failure: " + first_failure_ + "; " + detail;
    return {pass_, detail};
  }

 private:
  bool pass_ = true;
  std::string first_failure_;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

CostVolume random_volume(int h, int w, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  CostVolume c(h, w);
  for (double& x : c.data()) x = d(rng);
  return c;
}

FlowField random_flow(int w, int h, Scale s, std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> d(-spread, spread);
  FlowField f(w, h, s);
  for (double& x : f.data()) x = d(rng);
  return f;
}

// ---------------------------------------------------------------------------

Outcome sinkhorn_matches_brute_force() {
  Checker c;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  SinkhornConfig cfg;
  cfg.epsilon = 0.01;
  cfg.dustbin_score = -10.0;
  cfg.max_iters = 1000;
  double min_mass = 1.0, max_err = 0.0, solve_time = 0.0;
  int resampled = 0;
  for (int trial = 0; trial < 50; ++trial) {
    // 3x3 score matrix between the three cells of a 1x3 grid. Near-tied
    // assignments are redrawn: entropic transport splits mass between
    // permutations whose scores differ by less than a few epsilon.
    CostVolume scores(1, 3);
    std::vector<double> s(9);
    do {
      for (double& x : s) x = d(rng);
      resampled += oracle::permutation_gap(s, 3) < 0.1;
    } while (oracle::permutation_gap(s, 3) < 0.1);
    std::copy(s.begin(), s.end(), scores.data().begin());
    const auto t0 = Clock::now();
    const ProbabilityVolume p = sinkhorn_dustbin(scores, cfg);
    solve_time += seconds_since(t0);
    const std::vector<int> perm = oracle::best_permutation(s, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      const double mass = p.at(i, static_cast<std::size_t>(perm[i]));
      min_mass = std::min(min_mass, mass);
      c.check(mass >= 0.95, "row mass on brute-force permutation");
    }
    const double err = marginal_error(p);
    max_err = std::max(max_err, err);
    c.check(err < 1e-4, "marginal error");
  }
  c.check(solve_time < 1.0, "runtime");
  return c.finish(fmt("min permutation mass %.6f", min_mass) + fmt(", max marginal error %.2e", max_err) +
                  fmt(", solver time %.3f s", solve_time) + ", near-ties redrawn " +
                  std::to_string(resampled));
}

Outcome transport_invariants() {
  Checker c;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> side(1, 8);
  std::uniform_real_distribution<double> eps(0.05, 0.5), z(-1.0, 1.0), shift(-5.0, 5.0);
  double worst_row = 0.0, worst_shift = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int h = side(rng), w = side(rng);
    SinkhornConfig cfg;
    cfg.epsilon = eps(rng);
    cfg.dustbin_score = z(rng);
    cfg.tol = 1e-10;
    cfg.max_iters = 10000;
    const CostVolume scores = random_volume(h, w, rng, -1.0, 1.0);
    const ProbabilityVolume p = sinkhorn_dustbin(scores, cfg);
    for (std::size_t i = 0; i < p.pixels(); ++i) {
      double sum = p.dustbin_source(i);
      c.check(p.dustbin_source(i) >= 0.0, "nonnegative dustbin");
      for (double x : p.row(i)) {
        c.check(x >= 0.0, "nonnegative entries");
        sum += x;
      }
      worst_row = std::max(worst_row, std::abs(sum - 1.0));
    }
    const double s = shift(rng);
    CostVolume moved = scores;
    for (double& x : moved.data()) x += s;
    SinkhornConfig moved_cfg = cfg;
    moved_cfg.dustbin_score += s;
    const ProbabilityVolume q = sinkhorn_dustbin(moved, moved_cfg);
    for (std::size_t k = 0; k < p.data().size(); ++k) {
      worst_shift = std::max(worst_shift, std::abs(p.data()[k] - q.data()[k]));
    }
    for (std::size_t i = 0; i < p.pixels(); ++i) {
      worst_shift = std::max(worst_shift, std::abs(p.dustbin_source(i) - q.dustbin_source(i)));
    }
  }
  c.check(worst_row <= 1e-9, "row sums");
  c.check(worst_shift <= 1e-6, "shift invariance");
  return c.finish(fmt("max |row sum - 1| %.2e", worst_row) +
                  fmt(", max shift deviation %.2e", worst_shift));
}

ProbabilityVolume random_plan(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  ProbabilityVolume p(h, w);
  for (std::size_t i = 0; i < p.pixels(); ++i) {
    auto row = p.row(i);
    double total = 0.0;
    for (double& x : row) total += (x = std::pow(d(rng), 4.0));
    const double bin = d(rng) * 0.5;
    p.dustbin_source(i) = bin;
    for (double& x : row) x *= (1.0 - bin) / total;
  }
  return p;
}

Outcome initial_maps_match_oracle() {
  Checker c;
  std::mt19937_64 rng(314);
  std::uniform_int_distribution<int> side(1, 8), radius(0, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int h = side(rng), w = side(rng);
    const ProbabilityVolume p = random_plan(h, w, rng);
    const WindowSpec spec{radius(rng), 1e-8};
    const FlowField f = init_flow(p, spec);
    const ConfidenceMap g = init_confidence(p, spec);
    const OcclusionMap o = init_occlusion(p);
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        const auto row = p.row(pixel_index(u, v, w));
        const auto r = oracle::centroid({row.begin(), row.end()}, h, w, u, v, spec.radius,
                                        spec.eps_denom);
        worst = std::max({worst, std::abs(f.u(u, v) - r.du), std::abs(f.v(u, v) - r.dv),
                          std::abs(g.at(u, v) - r.window_sum), std::abs(o.at(u, v) - r.full_sum)});
        c.check(g.at(u, v) <= o.at(u, v), "confidence <= occlusion");
      }
    }
  }
  c.check(worst <= 1e-12, "oracle agreement");
  return c.finish(fmt("max deviation %.2e", worst));
}

Outcome gating_identity() {
  Checker c;
  std::mt19937_64 rng(5);
  const RefineConfig cfg;
  const DiffusionAggregator agg(cfg);
  for (int trial = 0; trial < 20; ++trial) {
    const FlowField f0 = random_flow(9, 7, Scale::kQuarter, rng, 6.0);
    std::uniform_real_distribution<double> conf(cfg.conf_threshold, 1.0);
    ConfidenceMap g(9, 7, Scale::kQuarter);
    for (double& x : g.data()) x = conf(rng);
    if (trial == 0) std::fill(g.data().begin(), g.data().end(), cfg.conf_threshold);
    const FlowField out = global_refine(f0, g, FeatureMap(7, 9, 8), agg, cfg);
    c.check(std::memcmp(out.data().data(), f0.data().data(), f0.data().size_bytes()) == 0,
            "bitwise identity");
  }
  FlowField f0(9, 9, Scale::kQuarter);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) f0.set(x, y, 3.25, -1.5);
  }
  f0.set(4, 4, 40.0, 40.0);
  ConfidenceMap g(9, 9, Scale::kQuarter, 0.95);
  g.at(4, 4) = 0.01;
  const FlowField out = global_refine(f0, g, FeatureMap(9, 9, 8), agg, cfg);
  const double err = std::hypot(out.u(4, 4) - 3.25, out.v(4, 4) + 1.5);
  c.check(err <= 1e-6, "hole filled");
  return c.finish(fmt("hole error %.2e", err));
}

Outcome logit_laws() {
  Checker c;
  std::mt19937_64 rng(8);
  const RefineConfig cfg;
  std::uniform_real_distribution<double> prob(0.01, 0.99);
  RefineState s{random_flow(4, 3, Scale::kQuarter, rng, 2.0), ConfidenceMap(4, 3, Scale::kQuarter),
                OcclusionMap(4, 3, Scale::kQuarter), 0};
  for (double& x : s.confidence.data()) x = prob(rng);
  for (double& x : s.occlusion.data()) x = prob(rng);
  const Residuals zero{FlowField(4, 3, Scale::kQuarter), ScalarField(4, 3, Scale::kQuarter),
                       ScalarField(4, 3, Scale::kQuarter)};
  const RefineState same = apply_residuals(s, zero, cfg);
  c.check(same.flow == s.flow && same.confidence == s.confidence && same.occlusion == s.occlusion,
          "zero residual identity");

  const RefineState half{FlowField(1, 1, Scale::kQuarter), ConfidenceMap(1, 1, Scale::kQuarter, 0.5),
                         OcclusionMap(1, 1, Scale::kQuarter, 0.5), 0};
  const Residuals ln9{FlowField(1, 1, Scale::kQuarter),
                      ScalarField(1, 1, Scale::kQuarter, std::log(9.0)),
                      ScalarField(1, 1, Scale::kQuarter, std::log(9.0))};
  const RefineState nine = apply_residuals(half, ln9, cfg);
  c.check(nine.confidence[0] == 0.9 && nine.occlusion[0] == 0.9, "0.5 + ln 9 -> 0.9");

  double lo = 1.0, hi = 0.0;
  for (double mag : {100.0, -100.0}) {
    RefineState t = s;
    for (int step = 0; step < 3; ++step) {
      const Residuals big{FlowField(4, 3, Scale::kQuarter), ScalarField(4, 3, Scale::kQuarter, mag),
                          ScalarField(4, 3, Scale::kQuarter, -mag)};
      t = apply_residuals(t, big, cfg);
      for (std::size_t i = 0; i < 12; ++i) {
        lo = std::min({lo, t.confidence[i], t.occlusion[i]});
        hi = std::max({hi, t.confidence[i], t.occlusion[i]});
      }
    }
  }
  c.check(lo > 0.0 && hi < 1.0, "open unit interval");
  return c.finish(fmt("0.5+ln9 -> %.17g", nine.confidence[0]) + fmt(", saturated range [%.3g", lo) +
                  fmt(", 1 - %.3g]", 1.0 - hi));
}

Outcome upsampling() {
  Checker c;
  std::mt19937_64 rng(6);
  const int cw = 7, ch = 5;
  const UpsampleWeights bil = UpsampleWeights::bilinear(ch, cw);

  FlowField constant(cw, ch, Scale::kQuarter);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) constant.set(x, y, 1.75, -0.5);
  }
  for (const UpsampleWeights& w : {bil, UpsampleWeights::nearest(ch, cw)}) {
    const FlowField up = convex_upsample(constant, w);
    for (int i = 0; i < up.width() * up.height(); ++i) {
      c.check(up.data()[2 * i] == 7.0 && up.data()[2 * i + 1] == -2.0, "constant preserved");
    }
  }

  const double a = -1.5, b = 0.625;
  FlowField ramp(cw, ch, Scale::kQuarter);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) ramp.set(x, y, a + b * x, 0.0);
  }
  const FlowField up = convex_upsample(ramp, bil);
  double ramp_err = 0.0;
  for (int y = 0; y < 4 * ch; ++y) {
    for (int x = 0; x < 4 * cw; ++x) {
      ramp_err = std::max(ramp_err, std::abs(up.u(x, y) / 4.0 - oracle::upsampled_ramp(a, b, x, cw)));
    }
  }
  c.check(ramp_err <= 1e-9, "linear ramp");

  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const FlowField coarse = random_flow(cw, ch, Scale::kQuarter, rng, 10.0);
    std::vector<double> raw(static_cast<std::size_t>(16 * cw * ch) * 9);
    for (std::size_t p = 0; p < raw.size(); p += 9) {
      double s = 0.0;
      for (int k = 0; k < 9; ++k) s += (raw[p + k] = std::pow(d(rng), 3.0));
      for (int k = 0; k < 9; ++k) raw[p + k] /= s;
    }
    const FlowField f = convex_upsample(coarse, UpsampleWeights(4 * ch, 4 * cw, raw));
    for (int y = 0; y < 4 * ch; ++y) {
      for (int x = 0; x < 4 * cw; ++x) {
        for (int comp = 0; comp < 2; ++comp) {
          double lo = 1e300, hi = -1e300;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int u = std::clamp(x / 4 + dx, 0, cw - 1);
              const int v = std::clamp(y / 4 + dy, 0, ch - 1);
              const double val = comp == 0 ? coarse.u(u, v) : coarse.v(u, v);
              lo = std::min(lo, val);
              hi = std::max(hi, val);
            }
          }
          const double out = (comp == 0 ? f.u(x, y) : f.v(x, y)) / 4.0;
          c.check(out >= lo && out <= hi, "neighbourhood bounds");
        }
      }
    }
  }
  return c.finish(fmt("ramp error %.2e", ramp_err));
}

Outcome losses() {
  Checker c;
  std::mt19937_64 rng(7);
  const FlowField gt = random_flow(6, 5, Scale::kFull, rng, 3.0);
  OcclusionMap occ(6, 5, Scale::kFull, 1.0);
  occ.at(2, 2) = 0.0;
  occ.at(5, 0) = 0.0;
  ConfidenceMap conf_gt(6, 5, Scale::kFull, 1.0);
  conf_gt.at(1, 1) = 0.0;
  const std::vector<FlowField> flows(3, gt);
  c.check(loss_flow(flows, gt, occ) == 0.0, "flow loss zero");
  c.check(loss_confidence({conf_gt, conf_gt}, {conf_gt, conf_gt}, occ) == 0.0, "confidence loss zero");
  c.check(loss_occlusion({occ, occ}, occ) == 0.0, "occlusion loss zero");

  const LossReport unit = total_loss(1.0, 1.0, 1.0, LossWeights{1.0, 0.1, 0.1});
  c.check(std::abs(unit.total - 1.2) <= 1e-12, "weighted total");

  // Central differences of the flow loss against the smooth-L1 derivative.
  const double beta = 1.0, h = 1e-6;
  std::vector<FlowField> preds = {random_flow(6, 5, Scale::kFull, rng, 3.0)};
  double nonocc = 0.0;
  for (double m : occ.data()) nonocc += m;
  double worst = 0.0;
  int checked = 0;
  for (std::size_t k = 0; k < preds[0].data().size(); ++k) {
    const double x = preds[0].data()[k] - gt.data()[k];
    if (occ[k / 2] != 1.0 || std::abs(std::abs(x) - beta) < 1e-3 || std::abs(x) < 1e-3) continue;
    const double analytic = (std::abs(x) < beta ? x / beta : (x > 0 ? 1.0 : -1.0)) / nonocc;
    auto plus = preds, minus = preds;
    plus[0].data()[k] += h;
    minus[0].data()[k] -= h;
    const double numeric = (loss_flow(plus, gt, occ, beta) - loss_flow(minus, gt, occ, beta)) / (2 * h);
    worst = std::max(worst, std::abs(numeric - analytic));
    ++checked;
  }
  for (double x = -3.0; x <= 3.0; x += 0.0625) {
    if (std::abs(std::abs(x) - beta) < 1e-3) continue;
    const double numeric = (smooth_l1(x + h, beta) - smooth_l1(x - h, beta)) / (2 * h);
    const double analytic = std::abs(x) < beta ? x / beta : (x > 0 ? 1.0 : -1.0);
    worst = std::max(worst, std::abs(numeric - analytic));
  }
  c.check(checked > 20 && worst <= 1e-5, "finite differences");
  return c.finish(fmt("total %.15f", unit.total) + fmt(", max gradient error %.2e", worst));
}

Outcome gt_occlusion_on_affine() {
  Checker c;
  SceneSpec spec;
  spec.texture_seed = 41;
  const Affine a = affine_about_center(64, 64, 6.0, 1.08, 1.5, -1.0);
  spec.motion = a;
  const Scene sc = synth_scene(spec);
  const OcclusionMap occ = gt_occlusion(sc.flow, analytic_backward_flow(spec), 2.0);
  int interior = 0, interior_ok = 0, outside = 0, outside_ok = 0, agree = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const double tx = x + sc.flow.u(x, y), ty = y + sc.flow.v(x, y);
      const bool in_frame = tx >= 0 && tx <= 63 && ty >= 0 && ty <= 63;
      if (in_frame && tx >= 2 && tx <= 61 && ty >= 2 && ty <= 61) {
        ++interior;
        interior_ok += occ.at(x, y) == 1.0;
      }
      if (!in_frame) {
        ++outside;
        outside_ok += occ.at(x, y) == 0.0;
      }
      agree += occ.at(x, y) == sc.occlusion.at(x, y);
    }
  }
  const double interior_rate = 100.0 * interior_ok / interior;
  const double agree_rate = 100.0 * agree / (64.0 * 64.0);
  c.check(outside > 0, "scene has out-of-frame targets");
  c.check(interior_rate >= 99.0, "interior non-occluded");
  c.check(outside_ok == outside, "out-of-frame occluded");
  c.check(agree_rate >= 99.0, "agreement with analytic occlusion");
  return c.finish(fmt("interior %.2f%%", interior_rate) + ", out-of-frame " + std::to_string(outside_ok) +
                  "/" + std::to_string(outside) + fmt(", agreement %.2f%%", agree_rate));
}

// Shared scene suites for the end-to-end and ablation criteria.
std::vector<SceneSpec> translation_suite() {
  const double disp[3][2] = {{4, 0}, {8, 4}, {12, 8}};
  std::vector<SceneSpec> out;
  for (int i = 0; i < 20; ++i) {
    SceneSpec s;
    s.motion = Translation{disp[i % 3][0], disp[i % 3][1]};
    s.texture_seed = 1000 + i;
    out.push_back(s);
  }
  return out;
}

std::vector<SceneSpec> affine_suite() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> angle(-10.0, 10.0), zoom(0.9, 1.1);
  std::vector<SceneSpec> out;
  for (int i = 0; i < 10; ++i) {
    SceneSpec s;
    const double ang = angle(rng);
    const double zm = zoom(rng);
    s.motion = affine_about_center(64, 64, ang, zm);
    s.texture_seed = 100 + i;
    out.push_back(s);
  }
  return out;
}

double run_epe(const SceneSpec& spec, int steps, bool coupled) {
  const Scene sc = synth_scene(spec);
  PipelineConfig cfg;
  cfg.refine.steps = steps;
  cfg.coupled_refinement = coupled;
  const FlowEstimate est = estimate_flow(sc.images, cfg);
  return epe(est.flow, sc.flow, &sc.occlusion);
}

Outcome end_to_end() {
  Checker c;
  const int saved = num_threads();
  set_num_threads(1);
  const auto t0 = Clock::now();
  double trans_sum = 0.0, trans_max = 0.0;
  for (const SceneSpec& s : translation_suite()) {
    const double e = run_epe(s, 3, false);
    trans_sum += e;
    trans_max = std::max(trans_max, e);
  }
  double aff_sum = 0.0, aff_max = 0.0;
  for (const SceneSpec& s : affine_suite()) {
    const double e = run_epe(s, 3, false);
    aff_sum += e;
    aff_max = std::max(aff_max, e);
  }
  const double elapsed = seconds_since(t0);
  set_num_threads(saved);
  c.check(trans_sum / 20 <= 0.5, "translation mean EPE");
  c.check(aff_max <= 1.5, "affine EPE");
  c.check(elapsed < 60.0, "runtime");
  return c.finish(fmt("translation mean %.3f px", trans_sum / 20) + fmt(" (max %.3f)", trans_max) +
                  fmt(", affine max %.3f px", aff_max) + fmt(" (mean %.3f)", aff_sum / 10) +
                  fmt(", %.1f s single-threaded", elapsed));
}

Outcome ablation_direction() {
  Checker c;
  double zero = 0.0, axis = 0.0, coupled = 0.0;
  for (const SceneSpec& s : affine_suite()) {
    zero += run_epe(s, 0, false) / 10;
    axis += run_epe(s, 3, false) / 10;
    coupled += run_epe(s, 3, true) / 10;
  }
  c.check(axis <= zero, "refinement helps");
  c.check(axis <= coupled + 0.1, "axis-wise vs coupled");
  return c.finish(fmt("mean EPE 0 steps %.3f", zero) + fmt(", 3 steps %.3f", axis) +
                  fmt(", coupled %.3f", coupled));
}

Outcome format_fidelity() {
  Checker c;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> side(1, 24);
  std::uniform_real_distribution<float> val(-600.0f, 600.0f);
  std::uniform_int_distribution<int> grid(-32767, 32767);
  std::bernoulli_distribution valid(0.85);
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = side(rng), h = side(rng);
    FlowField f(w, h, Scale::kFull);
    for (double& x : f.data()) x = val(rng);
    std::stringstream io;
    write_flo(f, io);
    const FlowField back = read_flo(io);
    c.check(back.width() == w && back.height() == h &&
                std::memcmp(back.data().data(), f.data().data(), f.data().size_bytes()) == 0,
            ".flo round trip");

    FlowField k(w, h, Scale::kFull);
    OcclusionMap mask(w, h, Scale::kFull);
    for (double& x : k.data()) x = grid(rng) / 64.0;
    for (double& x : mask.data()) x = valid(rng) ? 1.0 : 0.0;
    const KittiFlow kb = decode_kitti_png(encode_kitti_png(k, mask));
    c.check(kb.flow == k && kb.valid == mask, "KITTI round trip");
  }
  std::ostringstream out;
  write_flo(FlowField(1, 1, Scale::kFull), out);
  const unsigned char expected[20] = {'P', 'I', 'E', 'H', 1, 0, 0, 0, 1, 0, 0, 0,
                                      0,   0,   0,   0,   0, 0, 0, 0};
  const std::string bytes = out.str();
  c.check(bytes.size() == 20 && std::memcmp(bytes.data(), expected, 20) == 0, "1x1 layout");
  return c.finish("1000 .flo and 1000 KITTI round trips, 1x1 file " + std::to_string(bytes.size()) +
                  " bytes");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"sinkhorn matches brute-force assignment", sinkhorn_matches_brute_force},
      {"transport plan invariants", transport_invariants},
      {"initial maps match scalar oracles", initial_maps_match_oracle},
      {"confidence gate identity and hole filling", gating_identity},
      {"logit-space update laws", logit_laws},
      {"convex upsampling", upsampling},
      {"loss suite", losses},
      {"forward-backward occlusion on affine scene", gt_occlusion_on_affine},
      {"end-to-end desk-scale accuracy", end_to_end},
      {"refinement ablation direction", ablation_direction},
      {"flow file format fidelity", format_fidelity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
