// otflow command-line front end: match, eval, synth, visualize and
// sinkhorn-bench. Results are printed as stable key=value lines; exit codes
// are 0 (ok), 1 (usage) and 2 (runtime failure).

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "otflow/otflow.hpp"

namespace fs = std::filesystem;
using namespace otflow;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

void print_kv(const std::string& key, double value) {
  std::printf("%s=%.17g\n", key.c_str(), value);
}

void print_kv(const std::string& key, const std::string& value) {
  std::printf("%s=%s\n", key.c_str(), value.c_str());
}

double mean_of(std::span<const double> values) {
  return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

bool has_extension(const fs::path& p, const char* ext) {
  std::string e = p.extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e == ext;
}

// ---------------------------------------------------------------- match

struct MatchArgs {
  std::string img1, img2, out;
  std::string conf_png, occ_png, vis_png;
  PipelineConfig cfg;
};

void add_pipeline_flags(CLI::App* app, PipelineConfig& cfg) {
  app->add_option("--epsilon", cfg.sinkhorn.epsilon, "Sinkhorn entropy epsilon")->capture_default_str();
  app->add_option("--max-iters", cfg.sinkhorn.max_iters, "Sinkhorn iterations per temperature")
      ->capture_default_str();
  app->add_option("--tol", cfg.sinkhorn.tol, "Sinkhorn marginal tolerance")->capture_default_str();
  app->add_option("--dustbin-score", cfg.sinkhorn.dustbin_score, "Score of the unmatched option")
      ->capture_default_str();
  app->add_flag("!--no-annealing", cfg.sinkhorn.annealing, "Disable epsilon scaling warm-up");
  app->add_option("--window-radius,--radius", cfg.window.radius, "Centroid window half-width (cells)")
      ->capture_default_str();
  app->add_option("--eps-denom", cfg.window.eps_denom, "Centroid denominator stabiliser")
      ->capture_default_str();
  app->add_option("--steps", cfg.refine.steps, "Local refinement steps")->capture_default_str();
  app->add_option("--conf-threshold,--threshold", cfg.refine.conf_threshold, "Confidence gate tau")
      ->capture_default_str();
  app->add_option("--logit-clamp", cfg.refine.logit_clamp, "Probability clamp before logits")
      ->capture_default_str();
  app->add_option("--diffusion-passes", cfg.refine.diffusion_passes, "Aggregator passes")
      ->capture_default_str();
  app->add_option("--diffusion-sigma", cfg.refine.diffusion_sigma, "Aggregator spatial sigma (cells)")
      ->capture_default_str();
  app->add_option("--local-radius", cfg.refine.local_radius, "Half-width of the local slices")
      ->capture_default_str();
  app->add_option("--softargmax-temperature", cfg.refine.softargmax_temperature,
                  "Soft-argmax temperature")
      ->capture_default_str();
  app->add_option("--slice-spacing", cfg.refine.slice_spacing, "Slice tap spacing (cells)")
      ->capture_default_str();
  app->add_option("--feature-dim", cfg.features.dim, "Descriptor length (multiple of 8)")
      ->capture_default_str();
  app->add_option("--presmooth-sigma", cfg.features.presmooth_sigma, "Pre-smoothing sigma (px)")
      ->capture_default_str();
  app->add_flag("--coupled-refinement", cfg.coupled_refinement,
                "Joint two-channel local residuals instead of axis-wise");
}

int run_match(const MatchArgs& a) {
  const ImagePair images{read_image(a.img1), read_image(a.img2)};
  const auto t0 = std::chrono::steady_clock::now();
  const FlowEstimate est = estimate_flow(images, a.cfg);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_flo(est.flow, fs::path(a.out));
  if (!a.conf_png.empty()) write_probability_png(est.confidence, a.conf_png);
  if (!a.occ_png.empty()) write_probability_png(est.occlusion, a.occ_png);
  if (!a.vis_png.empty()) write_rgb_png(visualize_flow(est.flow), a.vis_png);

  print_kv("flow", a.out);
  print_kv("width", est.flow.width());
  print_kv("height", est.flow.height());
  print_kv("sinkhorn_iterations", est.sinkhorn.iterations);
  print_kv("sinkhorn_warmup_iterations", est.sinkhorn.warmup_iterations);
  print_kv("sinkhorn_converged", est.sinkhorn.converged ? 1 : 0);
  print_kv("sinkhorn_marginal_error", est.sinkhorn.marginal_error);
  print_kv("mean_confidence", mean_of(est.confidence.data()));
  print_kv("mean_occlusion", mean_of(est.occlusion.data()));
  print_kv("seconds", seconds);
  return 0;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred, gt, occ;
};

void print_report(const MetricReport& r) {
  std::printf("%-12s %12s\n", "metric", "value");
  std::printf("%-12s %12.4f\n", "EPE-all", r.epe_all);
  if (r.epe_nonocc) std::printf("%-12s %12.4f\n", "EPE-noc", *r.epe_nonocc);
  std::printf("%-12s %11.2f%%\n", "1px", r.outlier_1px);
  std::printf("%-12s %11.2f%%\n", "3px", r.outlier_3px);
  std::printf("%-12s %11.2f%%\n", "5px", r.outlier_5px);
  std::printf("%-12s %11.2f%%\n", "Fl-all", r.fl_all);
  print_kv("epe_all", r.epe_all);
  if (r.epe_nonocc) print_kv("epe_nonocc", *r.epe_nonocc);
  print_kv("outlier_1px", r.outlier_1px);
  print_kv("outlier_3px", r.outlier_3px);
  print_kv("outlier_5px", r.outlier_5px);
  print_kv("fl_all", r.fl_all);
}

int run_eval(const EvalArgs& a) {
  const FlowField pred = read_flo(fs::path(a.pred));
  FlowField gt;
  std::optional<OcclusionMap> valid;
  if (has_extension(a.gt, ".png")) {
    KittiFlow k = read_kitti_png(a.gt);
    gt = std::move(k.flow);
    valid = std::move(k.valid);
  } else {
    gt = read_flo(fs::path(a.gt));
  }
  std::optional<OcclusionMap> occ;
  if (!a.occ.empty()) occ = read_mask_png(a.occ);
  const MetricReport r = evaluate(pred, gt, occ ? &*occ : nullptr, valid ? &*valid : nullptr);
  print_report(r);
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out_dir;
  std::string motion = "translation";
  int width = 64, height = 64;
  std::uint64_t seed = 0;
  double du = 8.0, dv = 4.0;
  double angle = 5.0, zoom = 1.0;
  std::vector<double> rect;  // x0 y0 x1 y1 du dv, repeated
};

int run_synth(const SynthArgs& a) {
  SceneSpec spec;
  spec.width = a.width;
  spec.height = a.height;
  spec.texture_seed = a.seed;
  if (a.motion == "translation") {
    spec.motion = Translation{a.du, a.dv};
  } else if (a.motion == "affine") {
    spec.motion = affine_about_center(a.width, a.height, a.angle, a.zoom, a.du, a.dv);
  } else {
    if (a.rect.empty() || a.rect.size() % 6 != 0) {
      throw Error(ErrorCode::kInvalidConfig, "synth: --rect takes groups of x0 y0 x1 y1 du dv");
    }
    Layered l;
    for (std::size_t i = 0; i < a.rect.size(); i += 6) {
      l.layers.push_back(MovingRect{a.rect[i], a.rect[i + 1], a.rect[i + 2], a.rect[i + 3],
                                    a.rect[i + 4], a.rect[i + 5]});
    }
    spec.motion = l;
  }
  const Scene sc = synth_scene(spec);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_image(sc.images.first, dir / "I1.png");
  write_image(sc.images.second, dir / "I2.png");
  write_flo(sc.flow, dir / "gt.flo");
  write_probability_png(sc.occlusion, dir / "occ.png");
  print_kv("out_dir", dir.string());
  print_kv("width", sc.flow.width());
  print_kv("height", sc.flow.height());
  print_kv("occluded_fraction", 1.0 - mean_of(sc.occlusion.data()));
  return 0;
}

// ------------------------------------------------------------ visualize

struct VisualizeArgs {
  std::string flow, out;
  double max_mag = 0.0;
};

int run_visualize(const VisualizeArgs& a) {
  const FlowField f = read_flo(fs::path(a.flow));
  const double norm = a.max_mag > 0.0 ? a.max_mag : percentile_magnitude(f);
  write_rgb_png(visualize_flow(f, norm), a.out);
  print_kv("image", a.out);
  print_kv("max_mag", norm);
  return 0;
}

// -------------------------------------------------------- sinkhorn-bench

struct BenchArgs {
  int size = 16;
  double epsilon = 0.01;
  int iters = 100;
  double dustbin = 0.21;
  std::uint64_t seed = 1;
};

// Random unit descriptors make a correlation volume with the same score
// range as real features.
CostVolume random_correlation(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  const int dim = 16;
  std::vector<double> a(static_cast<std::size_t>(n * n * dim));
  std::vector<double> b(a.size());
  for (auto* v : {&a, &b}) {
    for (std::size_t i = 0; i < v->size(); i += dim) {
      double sq = 0.0;
      for (int c = 0; c < dim; ++c) sq += ((*v)[i + c] = d(rng)) * (*v)[i + c];
      for (int c = 0; c < dim; ++c) (*v)[i + c] /= std::sqrt(sq);
    }
  }
  return build_correlation(FeatureMap(n, n, dim, a), FeatureMap(n, n, dim, b));
}

int run_bench(const BenchArgs& a) {
  if (a.size < 1 || a.iters < 1) {
    throw Error(ErrorCode::kInvalidConfig, "sinkhorn-bench: --size and --iters must be >= 1");
  }
  const CostVolume scores = random_correlation(a.size, a.seed);
  print_kv("size", a.size);
  print_kv("epsilon", a.epsilon);
  std::vector<int> counts;
  for (int k = 1; k < a.iters; k *= 2) counts.push_back(k);
  counts.push_back(a.iters);
  for (int k : counts) {
    SinkhornConfig cfg;
    cfg.epsilon = a.epsilon;
    cfg.dustbin_score = a.dustbin;
    cfg.max_iters = k;
    cfg.tol = 1e-300;  // run exactly k iterations at the final temperature
    SinkhornDiagnostics diag;
    const auto t0 = std::chrono::steady_clock::now();
    const ProbabilityVolume p = sinkhorn_dustbin(scores, cfg, &diag);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const int total = diag.iterations + diag.warmup_iterations;
    const double err = marginal_error(p);
    std::printf("iters=%d marginal_error=%.6e ms_per_iter=%.6f warmup_iters=%d\n", k, err,
                ms / std::max(total, 1), diag.warmup_iterations);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"otflow: transport-based optical flow"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: OTFLOW_THREADS or all cores)");

  MatchArgs match;
  CLI::App* m = app.add_subcommand("match", "Estimate flow between two images");
  m->add_option("img1", match.img1, "First frame (PNG)")->required()->check(CLI::ExistingFile);
  m->add_option("img2", match.img2, "Second frame (PNG)")->required()->check(CLI::ExistingFile);
  m->add_option("out", match.out, "Output .flo")->required();
  m->add_option("--confidence-png", match.conf_png, "Write the confidence map");
  m->add_option("--occlusion-png", match.occ_png, "Write the occlusion map");
  m->add_option("--visualize-png", match.vis_png, "Write a colour-coded flow image");
  add_pipeline_flags(m, match.cfg);

  EvalArgs eval;
  CLI::App* e = app.add_subcommand("eval", "Score a .flo against ground truth");
  e->add_option("pred", eval.pred, "Predicted .flo")->required()->check(CLI::ExistingFile);
  e->add_option("gt", eval.gt, "Ground truth .flo or KITTI 16-bit PNG")->required()->check(CLI::ExistingFile);
  e->add_option("--occ", eval.occ, "Occlusion mask PNG (nonzero = visible)")->check(CLI::ExistingFile);

  SynthArgs synth;
  CLI::App* s = app.add_subcommand("synth", "Render a synthetic pair with ground truth");
  s->add_option("out_dir", synth.out_dir, "Output directory")->required();
  s->add_option("--motion", synth.motion, "translation, affine or layered")
      ->check(CLI::IsMember({"translation", "affine", "layered"}))
      ->capture_default_str();
  s->add_option("--width", synth.width)->capture_default_str();
  s->add_option("--height", synth.height)->capture_default_str();
  s->add_option("--seed", synth.seed, "Texture seed")->capture_default_str();
  s->add_option("--du", synth.du, "Horizontal translation (px)")->capture_default_str();
  s->add_option("--dv", synth.dv, "Vertical translation (px)")->capture_default_str();
  s->add_option("--angle", synth.angle, "Affine rotation (degrees)")->capture_default_str();
  s->add_option("--zoom", synth.zoom, "Affine zoom")->capture_default_str();
  s->add_option("--rect", synth.rect, "Layer x0 y0 x1 y1 du dv (repeatable)");

  VisualizeArgs vis;
  CLI::App* v = app.add_subcommand("visualize", "Colour-code a .flo file");
  v->add_option("flow", vis.flow, "Input .flo")->required()->check(CLI::ExistingFile);
  v->add_option("out", vis.out, "Output PNG")->required();
  v->add_option("--max-mag", vis.max_mag, "Normalising magnitude (default: 99th percentile)");

  BenchArgs bench;
  CLI::App* b = app.add_subcommand("sinkhorn-bench", "Time the transport solver");
  b->add_option("--size", bench.size, "Grid side N (N*N cells)")->capture_default_str();
  b->add_option("--epsilon", bench.epsilon)->capture_default_str();
  b->add_option("--iters", bench.iters, "Largest iteration count")->capture_default_str();
  b->add_option("--dustbin-score", bench.dustbin)->capture_default_str();
  b->add_option("--seed", bench.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  try {
    if (threads > 0) set_num_threads(threads);
    if (*m) return run_match(match);
    if (*e) return run_eval(eval);
    if (*s) return run_synth(synth);
    if (*v) return run_visualize(vis);
    if (*b) return run_bench(bench);
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
