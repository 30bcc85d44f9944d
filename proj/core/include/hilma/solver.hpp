#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hilma/dataset.hpp"
#include "hilma/inference.hpp"
#include "hilma/model.hpp"
#include "hilma/types.hpp"

namespace hilma {

struct SolveOptions {
  // convergence: sup-norm of the joint score (d h/d psi, d h/d v), natural
  // parameter scale, projected at active support bounds
  double grad_tol = 1e-8;
  int max_outer_iters = 200;
  int max_inner_iters = 100;
  // Armijo backtracking line search
  double armijo_slope = 1e-4;
  double backtrack = 0.5;
  // starting points; absent means complete-case / model-default
  std::optional<Vector> init_psi;
  std::optional<Vector> init_v;
  // extra randomized restarts (best converged solution wins)
  int multistart = 0;
  std::uint64_t multistart_seed = 20240601ULL;
  // compute observed-information blocks at the solution
  bool compute_blocks = true;
};

struct FitResult {
  Vector psi_hat;
  Vector v_hat;
  Vector y_mis_hat;
  double h_value = 0.0;
  bool converged = false;
  int iterations = 0;
  ScaleKind scale_kind = ScaleKind::raw;
  // observed-information blocks at the solution (v scale); absent when the
  // curvature there is unusable (e.g. support-bound-pinned modes)
  std::optional<HessianBlocks> blocks;
  // per accepted outer iteration, the profile h value (nondecreasing)
  std::vector<double> ascent_trace;
  // v coordinates pinned at a support bound at the solution
  std::vector<int> active_bounds;
};

// Maximizes h(psi, .) over the random parameters at fixed psi (Newton with
// Armijo backtracking; non-concave curvature is Levenberg-shifted for the
// step only). Returns the mode on the v scale.
Vector inner_mode(const ModelSpec& model, const Vector& psi, const Dataset& data,
                  const Vector& init_v, const SolveOptions& opts = {});

// h(psi, vtilde(psi)): the profile built by solving the inner problem from
// the model-default start.
double profile_loglik(const ModelSpec& model, const Vector& psi,
                      const Dataset& data, const SolveOptions& opts = {});

// Joint maximization of the h-likelihood: nested iteration with Newton steps
// on psi against the profile (using the Schur-complement curvature) and full
// inner solves per trial point, so accepted steps are monotone in the
// profile value. Positive-domain parameters are handled on the log scale
// internally; everything reported is on the natural scale.
FitResult joint_maximize(const ModelSpec& model, const Dataset& data,
                         const SolveOptions& opts = {});

// Solves only the random-parameter problem at a supplied fixed-parameter
// value and returns the mode on the natural y_mis scale.
Vector solve_random_given_psi(const ModelSpec& model, const Vector& psi,
                              const Dataset& data, const SolveOptions& opts = {});

// Convenience wrappers over the inference layer at a fit.
HessianBlocks hessian_blocks(const ModelSpec& model, const FitResult& fit,
                             const Dataset& data, BlockScale scale);

// Variance report on the normalizing z scale. Only models declaring a
// normalizing transformation support this; for the bundled models that
// transformation is the identity on y_mis (or on the random effects), so the
// report coincides with the natural-scale one.
VarianceReport z_scale_report(const ModelSpec& model, const FitResult& fit,
                              const Dataset& data, double level = 0.95);

}  // namespace hilma
