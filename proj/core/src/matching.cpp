#include "otflow/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "otflow/parallel.hpp"

namespace otflow {

namespace {

constexpr std::size_t kColumnBlock = 64;
constexpr int kMaxStages = 16;

struct LogProblem {
  std::size_t n = 0;
  std::vector<double> kernel;  // C / epsilon, n x n
  double dustbin = 0.0;        // z / epsilon
  double log_n = 0.0;

  void rescale(double factor) {
    for (double& k : kernel) k *= factor;
    dustbin *= factor;
  }
};

struct StageResult {
  int iterations = 0;
  double row_error = 0.0;
  bool converged = false;
};

// f[i] = a[i] - LSE_j(K[i, j] + g[j]) over the augmented row.
void update_rows(const LogProblem& p, const std::vector<double>& g,
                 std::vector<double>& f) {
  const std::size_t n = p.n;
  parallel_for(n, [&](std::size_t i) {
    const double* row = p.kernel.data() + i * n;
    double m = p.dustbin + g[n];
    for (std::size_t j = 0; j < n; ++j) m = std::max(m, row[j] + g[j]);
    double s = std::exp(p.dustbin + g[n] - m);
    for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] + g[j] - m);
    f[i] = -(m + std::log(s));
  });
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j <= n; ++j) m = std::max(m, p.dustbin + g[j]);
  double s = 0.0;
  for (std::size_t j = 0; j <= n; ++j) s += std::exp(p.dustbin + g[j] - m);
  f[n] = p.log_n - (m + std::log(s));
}

void update_columns(const LogProblem& p, const std::vector<double>& f,
                    std::vector<double>& g) {
  const std::size_t n = p.n;
  const std::size_t blocks = (n + kColumnBlock - 1) / kColumnBlock;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t j0 = b * kColumnBlock;
    const std::size_t j1 = std::min(n, j0 + kColumnBlock);
    std::vector<double> m(j1 - j0, p.dustbin + f[n]);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = p.kernel.data() + i * n;
      for (std::size_t j = j0; j < j1; ++j) {
        m[j - j0] = std::max(m[j - j0], row[j] + f[i]);
      }
    }
    std::vector<double> s(j1 - j0);
    for (std::size_t j = j0; j < j1; ++j) {
      s[j - j0] = std::exp(p.dustbin + f[n] - m[j - j0]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = p.kernel.data() + i * n;
      for (std::size_t j = j0; j < j1; ++j) {
        s[j - j0] += std::exp(row[j] + f[i] - m[j - j0]);
      }
    }
    for (std::size_t j = j0; j < j1; ++j) {
      g[j] = -(m[j - j0] + std::log(s[j - j0]));
    }
  });
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= n; ++i) m = std::max(m, p.dustbin + f[i]);
  double s = 0.0;
  for (std::size_t i = 0; i <= n; ++i) s += std::exp(p.dustbin + f[i] - m);
  g[n] = p.log_n - (m + std::log(s));
}

ProbabilityVolume make_plan(const LogProblem& p, int h, int w,
                            const std::vector<double>& f,
                            const std::vector<double>& g) {
  const std::size_t n = p.n;
  ProbabilityVolume plan(h, w);
  parallel_for(n, [&](std::size_t i) {
    const double* k = p.kernel.data() + i * n;
    auto row = plan.row(i);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(k[j] + f[i] + g[j]);
      total += row[j];
    }
    double bin = std::exp(p.dustbin + f[i] + g[n]);
    total += bin;
    for (std::size_t j = 0; j < n; ++j) row[j] /= total;
    plan.dustbin_source(i) = bin / total;
  });
  for (std::size_t j = 0; j < n; ++j) {
    plan.dustbin_target(j) = std::exp(p.dustbin + f[n] + g[j]);
  }
  plan.corner() = std::exp(p.dustbin + f[n] + g[n]);
  return plan;
}

// Alternating updates from the given potentials until the row residual of
// the column-exact iterate drops below tol. On return (f, g) hold the last
// column-exact iterate; best_f/best_g, when given, the one with the smallest
// row residual.
StageResult run_stage(const LogProblem& p, int max_iters, double tol,
                      std::vector<double>& f, std::vector<double>& g,
                      std::vector<double>* best_f, std::vector<double>* best_g) {
  StageResult out;
  std::vector<double> f_next(p.n + 1, 0.0);
  update_rows(p, g, f);
  double best_error = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iters; ++it) {
    out.iterations = it;
    update_columns(p, f, g);
    // Columns are now exact; the row residual of (f, g) is read off the next
    // row update: achieved / target = exp(f - f_next).
    update_rows(p, g, f_next);
    double row_error = 0.0;
    for (std::size_t i = 0; i <= p.n; ++i) {
      row_error = std::max(row_error, std::abs(std::expm1(f[i] - f_next[i])));
    }
    out.row_error = row_error;
    if (row_error < best_error) {
      best_error = row_error;
      if (best_f) *best_f = f;
      if (best_g) *best_g = g;
    }
    if (row_error < tol) {
      out.converged = true;
      return out;
    }
    f.swap(f_next);
  }
  // Leave a column-exact pair behind.
  update_columns(p, f, g);
  return out;
}

}  // namespace

void validate(const SinkhornConfig& cfg) {
  if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) {
    throw Error(ErrorCode::kInvalidConfig, "SinkhornConfig: epsilon must be > 0");
  }
  if (cfg.max_iters < 1) {
    throw Error(ErrorCode::kInvalidConfig, "SinkhornConfig: max_iters must be >= 1");
  }
  if (!(cfg.tol > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "SinkhornConfig: tol must be > 0");
  }
}

CostVolume build_correlation(const FeatureMap& g1, const FeatureMap& g2) {
  if (g1.h() != g2.h() || g1.w() != g2.w() || g1.dim() != g2.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "build_correlation: feature maps differ in shape (" +
                    std::to_string(g1.w()) + "x" + std::to_string(g1.h()) +
                    "x" + std::to_string(g1.dim()) + " vs " +
                    std::to_string(g2.w()) + "x" + std::to_string(g2.h()) +
                    "x" + std::to_string(g2.dim()) + ")");
  }
  CostVolume volume(g1.h(), g1.w());
  const std::size_t n = volume.pixels();
  const double scale = 1.0 / std::sqrt(static_cast<double>(g1.dim()));
  parallel_for(n, [&](std::size_t s) {
    const auto a = g1.cell(s);
    for (std::size_t t = 0; t < n; ++t) {
      const auto b = g2.cell(t);
      double dot = 0.0;
      for (std::size_t c = 0; c < a.size(); ++c) dot += a[c] * b[c];
      volume.at(s, t) = dot * scale;
    }
  });
  return volume;
}

ProbabilityVolume sinkhorn_dustbin(const CostVolume& scores,
                                   const SinkhornConfig& cfg,
                                   SinkhornDiagnostics* diag) {
  validate(cfg);
  if (!std::isfinite(cfg.dustbin_score)) {
    throw Error(ErrorCode::kNonFiniteScore, "sinkhorn_dustbin: dustbin score is not finite");
  }
  LogProblem p;
  p.n = scores.pixels();
  if (scores.data().size() != p.n * p.n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "sinkhorn_dustbin: cost volume storage does not match h*w");
  }
  p.kernel.resize(p.n * p.n);
  for (std::size_t k = 0; k < p.kernel.size(); ++k) {
    const double c = scores.data()[k];
    if (!std::isfinite(c)) {
      throw Error(ErrorCode::kNonFiniteScore,
                  "sinkhorn_dustbin: non-finite score at entry " + std::to_string(k));
    }
    p.kernel[k] = c / cfg.epsilon;
  }
  p.dustbin = cfg.dustbin_score / cfg.epsilon;
  p.log_n = p.n > 0 ? std::log(static_cast<double>(p.n)) : 0.0;

  if (p.n == 0) {
    if (diag) *diag = {0, 0.0, true};
    return ProbabilityVolume(scores.h(), scores.w());
  }

  std::vector<double> f(p.n + 1, 0.0);
  std::vector<double> g(p.n + 1, 0.0);

  // Epsilon scaling: solve at geometrically decreasing temperatures, carrying
  // the dual potentials over. Near-permutation problems otherwise drift
  // towards the dustbin balance at a sublinear rate.
  int warmup = 0;
  if (cfg.annealing) {
    double lo = cfg.dustbin_score;
    double hi = cfg.dustbin_score;
    for (double c : scores.data()) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    int stages = 0;
    while (stages < kMaxStages && cfg.epsilon * std::ldexp(1.0, stages) < hi - lo) {
      ++stages;
    }
    if (stages > 0) {
      p.rescale(std::ldexp(1.0, -stages));
      for (int s = stages; s > 0; --s) {
        warmup += run_stage(p, cfg.max_iters, cfg.tol, f, g, nullptr, nullptr).iterations;
        p.rescale(2.0);
        for (double& x : f) x *= 2.0;
        for (double& x : g) x *= 2.0;
      }
    }
  }

  std::vector<double> best_f;
  std::vector<double> best_g;
  const StageResult last = run_stage(p, cfg.max_iters, cfg.tol, f, g, &best_f, &best_g);
  if (last.converged) {
    ProbabilityVolume plan = make_plan(p, scores.h(), scores.w(), f, g);
    const double err = marginal_error(plan);
    if (err < cfg.tol) {
      if (diag) *diag = {last.iterations, err, true, warmup};
      return plan;
    }
  }
  ProbabilityVolume plan = make_plan(p, scores.h(), scores.w(), best_f, best_g);
  if (diag) *diag = {last.iterations, marginal_error(plan), false, warmup};
  return plan;
}

double marginal_error(const ProbabilityVolume& plan) {
  const std::size_t n = plan.pixels();
  if (n == 0) return 0.0;
  const double nn = static_cast<double>(n);
  double worst = 0.0;

  std::vector<double> columns(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = plan.row(i);
    double sum = plan.dustbin_source(i);
    for (std::size_t j = 0; j < n; ++j) {
      sum += row[j];
      columns[j] += row[j];
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  double bin_row = plan.corner();
  double bin_col = plan.corner();
  for (std::size_t j = 0; j < n; ++j) {
    bin_row += plan.dustbin_target(j);
    worst = std::max(worst, std::abs(columns[j] + plan.dustbin_target(j) - 1.0));
  }
  for (std::size_t i = 0; i < n; ++i) bin_col += plan.dustbin_source(i);
  worst = std::max(worst, std::abs(bin_row - nn) / nn);
  worst = std::max(worst, std::abs(bin_col - nn) / nn);
  return worst;
}

}  // namespace otflow
