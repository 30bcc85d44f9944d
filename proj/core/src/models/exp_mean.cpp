#include <cmath>
#include <string>

#include "hilma/errors.hpp"
#include "hilma/models.hpp"
#include "hilma/rng.hpp"
#include "model_internal.hpp"

namespace hilma {
namespace models {

namespace {

void check_support(const Vector& y_mis) {
  for (int i = 0; i < y_mis.size(); ++i) {
    if (!(y_mis[i] > 0)) {
      throw DomainError("y_mis[" + std::to_string(i) + "] = " +
                        std::to_string(y_mis[i]) +
                        " is outside the exponential support (0, inf)");
    }
  }
}

}  // namespace

ModelSpec exponential_mean() {
  ModelSpec m;
  m.tag = "exp_mean";
  m.param_dim = 1;
  m.param_domain = {ParamDomain::positive};
  m.param_names = {"theta"};
  m.scale = ScaleTransform::log_scale();
  m.vv_structure = VvStructure::diagonal;

  m.extended_loglik = [](const Vector& psi, const Vector& y_mis,
                         const Dataset& data) {
    check_support(y_mis);
    const double theta = psi[0];
    return -data.n() * std::log(theta) -
           (data.sum_observed() + y_mis.sum()) / theta;
  };

  m.grad_y = [](const Vector& psi, const Vector& y_mis, const Dataset&) {
    return Vector::Constant(y_mis.size(), -1.0 / psi[0]).eval();
  };
  m.hess_y_diag = [](const Vector&, const Vector& y_mis, const Dataset&) {
    return Vector::Zero(y_mis.size()).eval();
  };

  // h(theta, v) = -n log(theta) - (S_obs + sum exp(v_i))/theta + sum v_i
  m.h_gradient = [](const Vector& psi, const Vector& v, const Dataset& data,
                    Vector& g_psi, Vector& g_v) {
    const double theta = psi[0];
    const Vector ey = v.array().exp().matrix();
    g_psi.resize(1);
    g_psi[0] = -data.n() / theta +
               (data.sum_observed() + ey.sum()) / (theta * theta);
    g_v = (1.0 - ey.array() / theta).matrix();
  };

  m.closed_marginal_loglik = [](const Vector& psi, const Dataset& data) {
    const double theta = psi[0];
    return -data.n_obs() * std::log(theta) - data.sum_observed() / theta;
  };

  m.canonical_function = [](const Vector& psi, const Dataset& data) {
    return Vector::Constant(data.n_mis(), psi[0]).eval();
  };

  m.mle_oracle = [](const Dataset& data) {
    detail::require_observed(data, "exp_mean");
    Vector psi(1);
    psi[0] = data.sum_observed() / data.n_obs();
    return psi;
  };

  m.em_step = [](const Vector& psi, const Dataset& data) {
    // E[y | missing] = theta, so the update averages the observed responses
    // with n_mis copies of the current mean.
    Vector next(1);
    next[0] = (data.sum_observed() + data.n_mis() * psi[0]) / data.n();
    return next;
  };

  m.complete_case_init = [](const Dataset& data) {
    detail::require_observed(data, "exp_mean");
    Vector psi(1);
    psi[0] = data.sum_observed() / data.n_obs();
    return psi;
  };

  m.default_v_init = [](const Vector& psi, const Dataset& data) {
    return Vector::Constant(data.n_mis(), std::log(psi[0])).eval();
  };

  m.normalizing = ModelSpec::Normalizing{
      true, "reports are on the response scale itself"};
  m.full_support_scale = ScaleTransform::log_scale();

  m.validate_data = [](const Dataset& data) {
    detail::require_observed(data, "exp_mean");
    for (int i = 0; i < data.n_obs(); ++i) {
      if (data.response()[i] < 0) {
        throw DataError("row " + std::to_string(i) + ": response " +
                        std::to_string(data.response()[i]) +
                        " is negative; exponential responses cannot be");
      }
    }
  };

  m.default_mechanism = MissingnessMechanism::fixed_pattern_at({});

  m.simulate = [](const Vector& params, const MissingnessMechanism& mech, int n,
                  std::uint64_t seed) {
    if (n < 2) throw UsageError("simulation needs n >= 2");
    const double theta = params[0];
    Rng rng(seed);
    for (int attempt = 0; attempt < 100; ++attempt) {
      Vector y(n);
      for (int i = 0; i < n; ++i) y[i] = rng.exponential(theta);
      const auto delta = detail::draw_delta(rng, mech, y, Vector());
      bool any_obs = false;
      for (auto d : delta) any_obs = any_obs || d;
      if (!any_obs) continue;
      return detail::assemble_simulated(Matrix(n, 0), y, delta);
    }
    throw DataError("simulation produced no observed responses in 100 attempts");
  };

  m.true_eta = [](const Vector& params, int) { return params[0]; };

  return m;
}

}  // namespace models
}  // namespace hilma
