#pragma once

#include <optional>
#include <string>

#include "hilma/dataset.hpp"
#include "hilma/model.hpp"
#include "hilma/solver.hpp"
#include "hilma/types.hpp"

namespace hilma {

// Everything a serialized fit report contains. `scale` names the working
// scale of the random parameters ("none" for scale-free fits such as EM).
struct ReportInputs {
  Vector psi_hat;
  std::optional<Vector> se_psi;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string scale;
  int n_obs = 0;
  int n_mis = 0;
};

// Compact JSON with the pinned key set psi_hat, se_psi, loglik, converged,
// iterations, scale, n_obs, n_mis. se_psi serializes as null when absent.
std::string fit_report_json(const ReportInputs& inputs);

// Builds the inputs from a joint fit: standard errors from the profile
// information when blocks are available, log-likelihood from the model's
// closed marginal form when it has one (the maximized h value otherwise).
ReportInputs report_from_fit(const ModelSpec& model, const FitResult& fit,
                             const Dataset& data);

}  // namespace hilma
