#pragma once

#include <optional>

#include "hilma/dataset.hpp"
#include "hilma/model.hpp"
#include "hilma/types.hpp"

namespace hilma {

// Natural-scale extended log-likelihood log f_psi(y_obs, y_mis, delta | x).
// Validates psi and dimensions, then delegates to the model. With n_mis = 0
// this *is* the ordinary log-likelihood.
double extended_loglik(const ModelSpec& model, const Vector& psi,
                       const Vector& y_mis, const Dataset& data);

struct HLikValue {
  double value = 0.0;
  std::optional<Vector> grad_psi;
  std::optional<Vector> grad_v;
};

// h-likelihood on the model's scale:
//   h(psi, v) = extended_loglik(psi, g^{-1}(v)) + log|d y_mis / d v|.
// On a canonical scale, joint maximization over (psi, v) reproduces the
// marginal MLE of psi; on the raw scale the Jacobian term is zero and h is
// the plain extended log-likelihood (callers opting into that get exactly
// those semantics). Gradients are filled on request: analytic when the model
// supplies them, otherwise central finite differences.
HLikValue hlik(const ModelSpec& model, const Vector& psi, const Vector& v,
               const Dataset& data, bool with_gradients = false);

// Same h-likelihood expressed in natural coordinates:
//   h(psi, y_mis) = extended_loglik(psi, y_mis) + log|d y_mis / d v|(y_mis),
// i.e. hlik_in_y(y) == hlik(forward(y)) identically.
double hlik_in_y(const ModelSpec& model, const Vector& psi, const Vector& y_mis,
                 const Dataset& data);

// Evaluation helpers shared by the solver and inference layers. They evaluate
// h and its v-gradient/diagonal-Hessian using the analytic hooks when
// available, finite differences otherwise.
namespace detail {

double hlik_value(const ModelSpec& model, const Vector& psi, const Vector& v,
                  const Dataset& data);

// d h / d v (chain rule through the scale when analytic pieces exist).
Vector hlik_grad_v(const ModelSpec& model, const Vector& psi, const Vector& v,
                   const Dataset& data);

// Diagonal of d^2 h / d v^2.
Vector hlik_hess_v_diag(const ModelSpec& model, const Vector& psi, const Vector& v,
                        const Dataset& data);

// d h / d psi at fixed v (fourth-order central differences unless the model
// provides the full analytic h-gradient). Steps shrink near the boundary of
// positive-domain coordinates.
Vector hlik_grad_psi(const ModelSpec& model, const Vector& psi, const Vector& v,
                     const Dataset& data);

bool has_analytic_v_path(const ModelSpec& model);

Vector psi_fd_steps(const ModelSpec& model, const Vector& psi, double rel);

}  // namespace detail

}  // namespace hilma
