#include "hilma/report.hpp"

#include <json.hpp>

#include "hilma/inference.hpp"

namespace hilma {

namespace {

// nlohmann serializes doubles with the shortest round-trip representation
// (and non-finite values as null), so reports are byte-stable for identical
// fits.
nlohmann::ordered_json vector_json(const Vector& v) {
  auto arr = nlohmann::ordered_json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

std::string fit_report_json(const ReportInputs& inputs) {
  nlohmann::ordered_json j;
  j["psi_hat"] = vector_json(inputs.psi_hat);
  j["se_psi"] = inputs.se_psi ? vector_json(*inputs.se_psi)
                              : nlohmann::ordered_json(nullptr);
  j["loglik"] = inputs.loglik;
  j["converged"] = inputs.converged;
  j["iterations"] = inputs.iterations;
  j["scale"] = inputs.scale;
  j["n_obs"] = inputs.n_obs;
  j["n_mis"] = inputs.n_mis;
  return j.dump(2) + "\n";
}

ReportInputs report_from_fit(const ModelSpec& model, const FitResult& fit,
                             const Dataset& data) {
  ReportInputs inputs;
  inputs.psi_hat = fit.psi_hat;
  if (fit.blocks) {
    inputs.se_psi = var_fixed(*fit.blocks).diagonal().cwiseSqrt().eval();
  }
  inputs.loglik = model.closed_marginal_loglik
                      ? model.closed_marginal_loglik(fit.psi_hat, data)
                      : fit.h_value;
  inputs.converged = fit.converged;
  inputs.iterations = fit.iterations;
  inputs.scale = to_string(fit.scale_kind);
  inputs.n_obs = data.n_obs();
  inputs.n_mis = data.n_mis();
  return inputs;
}

}  // namespace hilma
