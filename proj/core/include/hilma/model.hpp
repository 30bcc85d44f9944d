#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hilma/dataset.hpp"
#include "hilma/mechanism.hpp"
#include "hilma/scale.hpp"
#include "hilma/types.hpp"

namespace hilma {

enum class ParamDomain { real_line, positive };

// Sparsity structure of the random-parameter information block. Every bundled
// model has conditionally independent random parameters, hence a diagonal
// block; `dense` is the general fallback (intended for moderate dimensions).
enum class VvStructure { diagonal, dense };

// Declarative description of a model: the extended log-likelihood over
// (fixed parameters psi, random parameters y_mis), the working scale for the
// random parameters, and whatever closed forms the model can offer (used for
// initialization, fast paths, and cross-checks). Functions must be pure;
// a ModelSpec is shared freely across threads.
//
// "y_mis" is the natural scale of the random parameters. For missing-response
// models that is the missing part of the response (dimension n_mis); for the
// one-way random-effects model it is the vector of random effects (dimension
// q), which is why the dimension is a model hook rather than a Dataset field.
struct ModelSpec {
  std::string tag;
  int param_dim = 0;
  std::vector<ParamDomain> param_domain;
  std::vector<std::string> param_names;

  // log f_psi(y_obs, y_mis, delta | x): natural-scale extended log-likelihood.
  // Throws DomainError when psi or y_mis leave the model's domain/support.
  std::function<double(const Vector& psi, const Vector& y_mis, const Dataset&)>
      extended_loglik;

  ScaleTransform scale;

  // Dimension of the random-parameter vector (defaults to n_mis when absent).
  std::function<int(const Dataset&)> random_dim;

  VvStructure vv_structure = VvStructure::diagonal;

  // ---- optional closed forms ----
  // Marginal log-likelihood with full normalizing constants.
  std::function<double(const Vector& psi, const Dataset&)> closed_marginal_loglik;
  // Mode of the h-likelihood over the random parameters at fixed psi,
  // returned on the natural y_mis scale.
  std::function<Vector(const Vector& psi, const Dataset&)> canonical_function;
  // Closed-form maximum likelihood estimate of psi.
  std::function<Vector(const Dataset&)> mle_oracle;
  // One full EM update psi -> psi': expectation of the complete-data
  // log-likelihood over the missing responses at the current psi, then the
  // M step. Present only for models with a registered EM step.
  std::function<Vector(const Vector& psi, const Dataset&)> em_step;

  // ---- optional analytic derivatives ----
  // d extended_loglik / d y_mis and its (diagonal) second derivative.
  std::function<Vector(const Vector& psi, const Vector& y_mis, const Dataset&)> grad_y;
  std::function<Vector(const Vector& psi, const Vector& y_mis, const Dataset&)>
      hess_y_diag;
  // Full analytic gradient of the h-likelihood on the model's primary scale:
  // fills d h/d psi (at fixed v, including any psi-dependence of the scale)
  // and d h/d v.
  std::function<void(const Vector& psi, const Vector& v, const Dataset&,
                     Vector& g_psi, Vector& g_v)>
      h_gradient;

  // ---- initialization ----
  std::function<Vector(const Dataset&)> complete_case_init;
  // Default starting point for the inner mode search (on the v scale).
  std::function<Vector(const Vector& psi, const Dataset&)> default_v_init;

  // Optional support bounds on the v scale (used by raw-scale variants whose
  // support is a half-line). Fills lo/hi with -inf/+inf where unbounded.
  std::function<void(const Vector& psi, const Dataset&, Vector& lo, Vector& hi)>
      v_bounds;

  // Normalizing transformation z = r(y_mis) whose h-likelihood is exactly (or
  // approximately, where documented) quadratic: identity for the bundled
  // models that declare one. Models without a declared transformation do not
  // support z-scale reports.
  struct Normalizing {
    bool identity = true;
    std::string note;
  };
  std::optional<Normalizing> normalizing;

  // A psi-free transformation of the random parameters onto full support
  // (e.g. b = log(y - c)), the base of the weak-canonical construction.
  std::optional<ScaleTransform> full_support_scale;

  // ---- simulation support ----
  MissingnessMechanism default_mechanism;
  std::function<SimulatedData(const Vector& params, const MissingnessMechanism&,
                              int n, std::uint64_t seed)>
      simulate;
  // Population mean of the response implied by params (the estimand of the
  // simulation studies). n matters only for fixed covariate grids.
  std::function<double(const Vector& params, int n)> true_eta;

  // Model-aware data validation (e.g. observed values above a censoring
  // threshold are impossible). Throws DataError.
  std::function<void(const Dataset&)> validate_data;

  int random_dimension(const Dataset& data) const {
    return random_dim ? random_dim(data) : data.n_mis();
  }
};

// Checks psi against param_dim/param_domain; throws DomainError naming the
// coordinate.
void check_params(const ModelSpec& model, const Vector& psi);

}  // namespace hilma
