#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hilma/errors.hpp"
#include "hilma/models.hpp"
#include "hilma/rng.hpp"
#include "model_internal.hpp"

namespace hilma {
namespace models {

namespace {

// Parts shared by the canonical model and its raw-scale negative control.
// `closed_support` admits y_mis = c (the raw joint maximizer sits exactly on
// that boundary); the log(y - c) scale needs the open half-line.
ModelSpec censored_base(double c, bool closed_support) {
  if (!std::isfinite(c) || c <= 0) {
    throw UsageError("censoring threshold must be positive and finite, got " +
                     std::to_string(c));
  }
  ModelSpec m;
  m.tag = "censored_exp";
  m.param_dim = 1;
  m.param_domain = {ParamDomain::positive};
  m.param_names = {"theta"};
  m.vv_structure = VvStructure::diagonal;

  m.extended_loglik = [c, closed_support](const Vector& psi, const Vector& y_mis,
                                          const Dataset& data) {
    for (int i = 0; i < y_mis.size(); ++i) {
      const bool ok = closed_support ? (y_mis[i] >= c) : (y_mis[i] > c);
      if (!ok) {
        throw DomainError("y_mis[" + std::to_string(i) + "] = " +
                          std::to_string(y_mis[i]) +
                          " violates the support y > " + std::to_string(c) +
                          " implied by a missing (uncensored) response");
      }
    }
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

  m.complete_case_init = [](const Dataset& data) {
    detail::require_observed(data, "censored_exp");
    Vector psi(1);
    psi[0] = std::max(data.sum_observed() / data.n_obs(), 1e-8);
    return psi;
  };

  m.validate_data = [c](const Dataset& data) {
    detail::require_observed(data, "censored_exp");
    for (int i = 0; i < data.n_obs(); ++i) {
      const double y = data.response()[i];
      if (y < 0) {
        throw DataError("row " + std::to_string(i) + ": response " +
                        std::to_string(y) + " is negative");
      }
      if (y > c) {
        throw DataError("row " + std::to_string(i) + ": observed response " +
                        std::to_string(y) +
                        " exceeds the censoring threshold " + std::to_string(c) +
                        "; such a value could not have been observed");
      }
    }
  };

  m.default_mechanism = MissingnessMechanism::threshold_censor(c);
  m.full_support_scale = ScaleTransform::log_shift(c);

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

}  // namespace

ModelSpec censored_exponential(double c) {
  ModelSpec m = censored_base(c, /*closed_support=*/false);
  m.scale = ScaleTransform::log_shift(c);

  // h(theta, v) = -n log(theta) - (S_obs + sum_i (c + exp(v_i)))/theta + sum v
  m.h_gradient = [c](const Vector& psi, const Vector& v, const Dataset& data,
                     Vector& g_psi, Vector& g_v) {
    const double theta = psi[0];
    const Vector ev = v.array().exp().matrix();
    g_psi.resize(1);
    g_psi[0] = -data.n() / theta +
               (data.sum_observed() + v.size() * c + ev.sum()) / (theta * theta);
    g_v = (1.0 - ev.array() / theta).matrix();
  };

  m.closed_marginal_loglik = [c](const Vector& psi, const Dataset& data) {
    // Each missing response contributes P(Y > c) = exp(-c/theta).
    const double theta = psi[0];
    return -data.n_obs() * std::log(theta) - data.sum_observed() / theta -
           data.n_mis() * c / theta;
  };

  m.canonical_function = [c](const Vector& psi, const Dataset& data) {
    return Vector::Constant(data.n_mis(), psi[0] + c).eval();
  };

  m.mle_oracle = [c](const Dataset& data) {
    detail::require_observed(data, "censored_exp");
    Vector psi(1);
    psi[0] = (data.sum_observed() + data.n_mis() * c) / data.n_obs();
    return psi;
  };

  m.em_step = [c](const Vector& psi, const Dataset& data) {
    // E[y | y > c] = theta + c by lack of memory.
    Vector next(1);
    next[0] = (data.sum_observed() + data.n_mis() * (psi[0] + c)) / data.n();
    return next;
  };

  m.default_v_init = [](const Vector& psi, const Dataset& data) {
    return Vector::Constant(data.n_mis(), std::log(psi[0])).eval();
  };

  m.normalizing = ModelSpec::Normalizing{
      true, "reports are on the response scale itself"};

  return m;
}

ModelSpec censored_exponential_raw(double c) {
  ModelSpec m = censored_base(c, /*closed_support=*/true);
  m.tag = "censored_exp_raw";
  m.scale = ScaleTransform::raw_scale();

  m.v_bounds = [c](const Vector&, const Dataset& data, Vector& lo, Vector& hi) {
    lo = Vector::Constant(data.n_mis(), c);
    hi = Vector::Constant(data.n_mis(), std::numeric_limits<double>::infinity());
  };

  m.h_gradient = [](const Vector& psi, const Vector& v, const Dataset& data,
                    Vector& g_psi, Vector& g_v) {
    const double theta = psi[0];
    g_psi.resize(1);
    g_psi[0] = -data.n() / theta +
               (data.sum_observed() + v.sum()) / (theta * theta);
    g_v = Vector::Constant(v.size(), -1.0 / theta);
  };

  m.default_v_init = [c](const Vector& psi, const Dataset& data) {
    return Vector::Constant(data.n_mis(), c + psi[0]).eval();
  };

  return m;
}

}  // namespace models
}  // namespace hilma
