#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "hilma/dataset.hpp"
#include "hilma/model.hpp"
#include "hilma/scale.hpp"
#include "hilma/solver.hpp"
#include "hilma/types.hpp"

namespace hilma {

// Curvature-standardized ("weak canonical") scale built on top of a base
// b-scale whose support is all of R^m:
//
//   w = Omega(psi)^{1/2} b,   Omega(psi) = -d^2 l_e(psi, b) / db db' | btilde
//
// The composed transform's log-Jacobian picks up the psi-dependent term
// -1/2 log|Omega(psi)| on top of the b-scale's own Jacobian. That term is the
// Laplace correction: treating it as part of the objective in psi is exactly
// what makes joint maximization over (psi, w) reproduce the approximate MLE.
// The matrix square root is the symmetric (spectral) one for dense curvature
// and the coordinate-wise square root when the model declares a diagonal
// random block; the determinant, and hence the approximate likelihood, does
// not depend on that factor choice.
struct WeakCanonicalScale {
  ScaleTransform base_scale;
  // Omega(psi)^{1/2} at the inner mode (dense form; diagonal models return a
  // diagonal matrix).
  std::function<Matrix(const Vector& psi, const Dataset&)> omega_sqrt;
  ScaleTransform composed;
};

// Builds the weak-canonical scale for a model over the given b-scale. The
// b-scale must map the random-parameter support onto all of R^m (e.g.
// log(y - c) for a left-bounded support); curvature that is not positive
// definite at the inner mode raises CurvatureError at evaluation time.
WeakCanonicalScale make_weak_canonical(const ModelSpec& model,
                                       const ScaleTransform& b_scale);

// The model re-equipped with the composed w-scale (and with any primary-scale
// analytic shortcuts dropped). joint_maximize on this model yields the
// Laplace-approximate MLE.
ModelSpec weak_canonical_model(const ModelSpec& model,
                               const ScaleTransform& b_scale);

// Laplace-approximate marginal log-likelihood at fixed psi:
//   lhat_m(psi) = l_e(psi, btilde) - 1/2 log|Omega(psi) / (2 pi)|
// where l_e is the extended log-likelihood on the b-scale (Jacobian included)
// and btilde its mode at psi. Exact whenever the integrand is Gaussian in b.
double laplace_marginal(const ModelSpec& model, const Vector& psi,
                        const Dataset& data, const ScaleTransform& b_scale,
                        const SolveOptions& opts = {});

// Score and negated Hessian of psi -> lhat_m(psi):
//   score_j  = d l_e/d psi_j |_{btilde}
//              - 1/2 tr{ Omega^{-1} (d Omega/d psi_j) }
//   neghess  = [I_pp - I_pb Omega^{-1} I_bp]
//              + 1/2 tr{ Omega^{-1} d2 Omega - (Omega^{-1} dOmega)^2 } terms
// with I-blocks the observed-information blocks of l_e(psi, b) at (psi,
// btilde) and the Omega derivatives taken along the moving mode btilde(psi)
// (total derivatives, by finite differences). The returned matrix is the
// observed information of the approximate likelihood.
std::pair<Vector, Matrix> laplace_score_hessian(const ModelSpec& model,
                                                const Vector& psi,
                                                const Dataset& data,
                                                const ScaleTransform& b_scale,
                                                const SolveOptions& opts = {});

// Laplace-approximate MLE: joint maximization of the h-likelihood on the
// weak-canonical scale, followed by Newton polish on the lhat_m score so the
// reported solution zeros the approximate-likelihood score itself. The
// returned fit carries scale_kind weak_canonical; y_mis_hat is the inner
// b-mode mapped back to natural coordinates.
FitResult approx_mle(const ModelSpec& model, const Dataset& data,
                     const ScaleTransform& b_scale,
                     const SolveOptions& opts = {});

// Monte Carlo check of the first and second Bartlett identities of the
// extended log-likelihood on a b-scale: draws datasets from the model at
// psi_true, evaluates the joint score over xi = (psi, b) at the realized
// truth, and averages. To keep dimensions comparable across draws with
// random missingness patterns, the b-part is aggregated: component p (after
// the p psi components) carries sum_i d l_e/d b_i over the rows that are
// missing in that draw (rows observed in a draw contribute zero), which
// preserves both identities. Fields come with per-component Monte Carlo
// standard errors; a sound scale keeps every component within a few SEs of
// zero, and a support-violating scale (e.g. the raw scale of a left-bounded
// model) fails decisively.
struct BartlettCheckResult {
  Vector score_mean;
  Vector score_mean_se;
  Matrix second_identity_residual;
  Matrix second_identity_se;
  int n_draws = 0;
};

BartlettCheckResult bartlett_check(const ModelSpec& model,
                                   const Vector& psi_true,
                                   const ScaleTransform& b_scale, int n,
                                   int n_draws, std::uint64_t seed);

}  // namespace hilma
