#pragma once

#include "otflow/features.hpp"
#include "otflow/grid.hpp"

namespace otflow {

struct SinkhornConfig {
  double epsilon = 0.01;
  int max_iters = 100;
  // Early-stop threshold on the largest relative marginal error.
  double tol = 1e-4;
  // Score z of the unmatched option (dustbin row, column and corner).
  double dustbin_score = 0.21;
  // Warm-start from coarser temperatures (epsilon doubled per stage until it
  // spans the score range). Same fixed point, far fewer iterations on
  // near-permutation problems.
  bool annealing = true;
};

void validate(const SinkhornConfig& cfg);

struct SinkhornDiagnostics {
  int iterations = 0;
  // marginal_error() of the returned plan.
  double marginal_error = 0.0;
  bool converged = false;
  // Iterations spent in the annealing stages before the final temperature.
  int warmup_iterations = 0;
};

// C(s, t) = dot(g1[s], g2[t]) / sqrt(dim).
CostVolume build_correlation(const FeatureMap& g1, const FeatureMap& g2);

// Entropic optimal transport with a dustbin, solved in the log domain on the
// (N+1)x(N+1) augmented score matrix. Marginals: 1 for every valid row and
// column, N for the dustbin row and column. Similarities are maximised
// (kernel exp(C / epsilon)). The returned plan is renormalised so that every
// valid source row, dustbin entry included, sums to one; the column residual
// is reported through diag. Exhausting max_iters is not an error: the iterate
// with the smallest row residual is returned. iterations counts the final
// temperature only.
ProbabilityVolume sinkhorn_dustbin(const CostVolume& scores,
                                   const SinkhornConfig& cfg,
                                   SinkhornDiagnostics* diag = nullptr);

// Largest relative violation over all row and column constraints of the
// augmented problem, dustbin row and column included.
double marginal_error(const ProbabilityVolume& plan);

}  // namespace otflow
