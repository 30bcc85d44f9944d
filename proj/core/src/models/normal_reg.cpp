#include <algorithm>
#include <cmath>
#include <string>

#include "hilma/errors.hpp"
#include "hilma/models.hpp"
#include "hilma/rng.hpp"
#include "hilma/stats.hpp"
#include "model_internal.hpp"

namespace hilma {
namespace models {

namespace {

// v = y / sigma with sigma^2 = psi[sigma2_index]. The psi-dependence of the
// transform is what makes this scale canonical for the Gaussian likelihood.
ScaleTransform over_sigma_scale(int sigma2_index) {
  ScaleTransform s;
  s.kind = ScaleKind::canonical;
  s.name = "response_over_sigma";
  s.forward = [sigma2_index](const Vector& psi, const Dataset&, const Vector& y) {
    return (y / std::sqrt(psi[sigma2_index])).eval();
  };
  s.inverse = [sigma2_index](const Vector& psi, const Dataset&, const Vector& v) {
    return (v * std::sqrt(psi[sigma2_index])).eval();
  };
  s.log_jacobian = [sigma2_index](const Vector& psi, const Dataset&,
                                  const Vector& y) {
    return 0.5 * y.size() * std::log(psi[sigma2_index]);
  };
  s.dy_dv = [sigma2_index](const Vector& psi, const Dataset&, const Vector& v) {
    return Vector::Constant(v.size(), std::sqrt(psi[sigma2_index])).eval();
  };
  s.d2y_dv2 = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Zero(v.size()).eval();
  };
  s.dlogjac_dv = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Zero(v.size()).eval();
  };
  s.d2logjac_dv2 = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Zero(v.size()).eval();
  };
  return s;
}

Vector fitted_means(const Vector& psi, const Dataset& data, int first_row,
                    int n_rows) {
  Vector mu(n_rows);
  for (int i = 0; i < n_rows; ++i) {
    mu[i] = psi[0] + psi[1] * data.covariate(first_row + i, 0);
  }
  return mu;
}

double gaussian_rows_loglik(const Vector& psi, const Vector& y_mis,
                            const Dataset& data) {
  const double s = psi[2];
  const Vector mu_obs = fitted_means(psi, data, 0, data.n_obs());
  const Vector mu_mis = fitted_means(psi, data, data.n_obs(), data.n_mis());
  const double rss_obs =
      (data.observed_response() - mu_obs).squaredNorm();
  const double rss_mis = (y_mis - mu_mis).squaredNorm();
  return -data.n() * (kLogSqrt2Pi + 0.5 * std::log(s)) -
         (rss_obs + rss_mis) / (2.0 * s);
}

Vector ols_init(const Dataset& data) {
  const Matrix design = detail::intercept_design(data, 0, data.n_obs());
  const Vector beta = detail::least_squares(design, data.observed_response());
  const double rss = (data.observed_response() - design * beta).squaredNorm();
  Vector psi(3);
  psi << beta[0], beta[1], std::max(rss / data.n_obs(), 1e-8);
  return psi;
}

void validate_regression_data(const Dataset& data) {
  detail::require_covariate(data, "normal_reg");
  if (data.n_obs() < 3) {
    throw DataError("normal_reg needs at least 3 observed responses to "
                    "identify (beta0, beta1, sigma2); got " +
                    std::to_string(data.n_obs()));
  }
}

SimulatedData simulate_gaussian(const Vector& params,
                                const MissingnessMechanism& mech, int n,
                                std::uint64_t seed) {
  if (n < 2) throw UsageError("simulation needs n >= 2");
  Rng rng(seed);
  const double sigma = std::sqrt(params[2]);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Matrix x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = rng.uniform(-1.0, 1.0);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = params[0] + params[1] * x(i, 0) + sigma * rng.normal();
    }
    const auto delta = detail::draw_delta(rng, mech, y, x.col(0));
    int n_obs = 0;
    for (auto d : delta) n_obs += d;
    if (n_obs < 3) continue;
    auto sim = detail::assemble_simulated(x, y, delta);
    return sim;
  }
  throw DataError("simulation produced fewer than 3 observed responses in "
                  "100 attempts");
}

}  // namespace

ModelSpec normal_regression() {
  ModelSpec m;
  m.tag = "normal_reg";
  m.param_dim = 3;
  m.param_domain = {ParamDomain::real_line, ParamDomain::real_line,
                    ParamDomain::positive};
  m.param_names = {"beta0", "beta1", "sigma2"};
  m.scale = over_sigma_scale(2);
  m.vv_structure = VvStructure::diagonal;

  // The logistic selection is missing-at-random given x, so the mechanism
  // factor is omitted: it carries no information about (beta, sigma2).
  m.extended_loglik = gaussian_rows_loglik;

  m.grad_y = [](const Vector& psi, const Vector& y_mis, const Dataset& data) {
    const Vector mu = fitted_means(psi, data, data.n_obs(), data.n_mis());
    return ((mu - y_mis) / psi[2]).eval();
  };
  m.hess_y_diag = [](const Vector& psi, const Vector& y_mis, const Dataset&) {
    return Vector::Constant(y_mis.size(), -1.0 / psi[2]).eval();
  };

  // h(psi, v) = -n (log sqrt(2 pi) + log(s)/2) - RSS_obs/(2s)
  //             - (1/2) sum_i (v_i - mu_i/sqrt(s))^2 + (m/2) log(s)
  m.h_gradient = [](const Vector& psi, const Vector& v, const Dataset& data,
                    Vector& g_psi, Vector& g_v) {
    const double s = psi[2];
    const double sqrt_s = std::sqrt(s);
    const int m_dim = static_cast<int>(v.size());
    const Vector mu_obs = fitted_means(psi, data, 0, data.n_obs());
    const Vector mu_mis = fitted_means(psi, data, data.n_obs(), m_dim);
    const Vector r = data.observed_response() - mu_obs;
    const Vector d = v - mu_mis / sqrt_s;

    g_psi = Vector::Zero(psi.size());
    for (int i = 0; i < data.n_obs(); ++i) {
      g_psi[0] += r[i] / s;
      g_psi[1] += r[i] * data.covariate(i, 0) / s;
    }
    for (int i = 0; i < m_dim; ++i) {
      const double xi = data.covariate(data.n_obs() + i, 0);
      g_psi[0] += d[i] / sqrt_s;
      g_psi[1] += d[i] * xi / sqrt_s;
    }
    g_psi[2] = -data.n() / (2.0 * s) + r.squaredNorm() / (2.0 * s * s) -
               d.dot(mu_mis) / (2.0 * s * sqrt_s) + m_dim / (2.0 * s);
    g_v = -d;
  };

  m.closed_marginal_loglik = [](const Vector& psi, const Dataset& data) {
    const double s = psi[2];
    const Vector mu_obs = fitted_means(psi, data, 0, data.n_obs());
    const double rss = (data.observed_response() - mu_obs).squaredNorm();
    return -data.n_obs() * (kLogSqrt2Pi + 0.5 * std::log(s)) - rss / (2.0 * s);
  };

  m.canonical_function = [](const Vector& psi, const Dataset& data) {
    return fitted_means(psi, data, data.n_obs(), data.n_mis());
  };

  m.mle_oracle = [](const Dataset& data) {
    validate_regression_data(data);
    return ols_init(data);
  };

  m.em_step = [](const Vector& psi, const Dataset& data) {
    // E step: fill the missing responses with their conditional means and
    // carry the conditional variance sigma2_old into the scale update.
    const int n = data.n();
    const int n_obs = data.n_obs();
    Vector filled = data.response();
    const Vector mu_mis = fitted_means(psi, data, n_obs, data.n_mis());
    for (int i = 0; i < data.n_mis(); ++i) filled[n_obs + i] = mu_mis[i];

    Matrix design = detail::intercept_design(data, 0, n);
    const Vector beta = detail::least_squares(design, filled);
    const double rss = (filled - design * beta).squaredNorm();
    Vector next(3);
    next << beta[0], beta[1], (rss + data.n_mis() * psi[2]) / n;
    return next;
  };

  m.complete_case_init = [](const Dataset& data) {
    validate_regression_data(data);
    return ols_init(data);
  };

  m.default_v_init = [](const Vector& psi, const Dataset& data) {
    const Vector mu = fitted_means(psi, data, data.n_obs(), data.n_mis());
    return (mu / std::sqrt(psi[2])).eval();
  };

  m.normalizing = ModelSpec::Normalizing{
      true, "reports are on the response scale itself"};
  m.full_support_scale = ScaleTransform::raw_scale();

  m.validate_data = validate_regression_data;
  m.default_mechanism = MissingnessMechanism::logistic_mar(1.0, 2.0, 0.3);
  m.simulate = simulate_gaussian;
  m.true_eta = [](const Vector& params, int) { return params[0]; };
  return m;
}

ModelSpec normal_regression_raw() {
  ModelSpec m = normal_regression();
  m.tag = "normal_reg_raw";
  m.scale = ScaleTransform::raw_scale();

  m.h_gradient = [](const Vector& psi, const Vector& v, const Dataset& data,
                    Vector& g_psi, Vector& g_v) {
    const double s = psi[2];
    const Vector mu_obs = fitted_means(psi, data, 0, data.n_obs());
    const Vector mu_mis = fitted_means(psi, data, data.n_obs(), data.n_mis());
    const Vector r = data.observed_response() - mu_obs;
    const Vector rm = v - mu_mis;
    g_psi = Vector::Zero(3);
    for (int i = 0; i < data.n_obs(); ++i) {
      g_psi[0] += r[i] / s;
      g_psi[1] += r[i] * data.covariate(i, 0) / s;
    }
    for (int i = 0; i < data.n_mis(); ++i) {
      g_psi[0] += rm[i] / s;
      g_psi[1] += rm[i] * data.covariate(data.n_obs() + i, 0) / s;
    }
    g_psi[2] = -data.n() / (2.0 * s) +
               (r.squaredNorm() + rm.squaredNorm()) / (2.0 * s * s);
    g_v = -rm / s;
  };

  // On the raw scale the inner mode is still the fitted mean; what breaks is
  // the outer profile in sigma2, which sees zero residuals from the filled
  // rows. Closed forms that describe the marginal likelihood or the ML
  // estimate no longer describe this objective, so they are dropped.
  m.closed_marginal_loglik = nullptr;
  m.mle_oracle = nullptr;
  m.em_step = nullptr;
  m.normalizing.reset();
  m.default_v_init = [](const Vector& psi, const Dataset& data) {
    return fitted_means(psi, data, data.n_obs(), data.n_mis());
  };
  return m;
}

ModelSpec normal_regression_with_mechanism() {
  ModelSpec m = normal_regression();
  m.tag = "normal_reg_mech";
  m.param_dim = 6;
  m.param_domain = {ParamDomain::real_line, ParamDomain::real_line,
                    ParamDomain::positive,  ParamDomain::real_line,
                    ParamDomain::real_line, ParamDomain::real_line};
  m.param_names = {"beta0", "beta1", "sigma2", "rho0", "rho1", "rho2"};

  m.extended_loglik = [](const Vector& psi, const Vector& y_mis,
                         const Dataset& data) {
    return gaussian_rows_loglik(psi, y_mis, data) +
           detail::logistic_mechanism_loglik(psi.tail(3), data);
  };

  const ModelSpec base = normal_regression();
  m.h_gradient = [base](const Vector& psi, const Vector& v, const Dataset& data,
                        Vector& g_psi, Vector& g_v) {
    Vector g_base;
    base.h_gradient(psi.head(3), v, data, g_base, g_v);
    g_psi = Vector::Zero(6);
    g_psi.head(3) = g_base;
    g_psi.tail(3) = detail::logistic_mechanism_score(psi.tail(3), data);
  };

  m.closed_marginal_loglik = [base](const Vector& psi, const Dataset& data) {
    return base.closed_marginal_loglik(psi.head(3), data) +
           detail::logistic_mechanism_loglik(psi.tail(3), data);
  };

  m.canonical_function = [base](const Vector& psi, const Dataset& data) {
    return base.canonical_function(psi.head(3), data);
  };
  m.default_v_init = [base](const Vector& psi, const Dataset& data) {
    return base.default_v_init(psi.head(3), data);
  };

  m.mle_oracle = nullptr;
  m.em_step = nullptr;

  m.complete_case_init = [](const Dataset& data) {
    validate_regression_data(data);
    Vector psi = Vector::Zero(6);
    psi.head(3) = ols_init(data);
    return psi;
  };

  m.simulate = [](const Vector& params, const MissingnessMechanism& mech, int n,
                  std::uint64_t seed) {
    return simulate_gaussian(params.head(3), mech, n, seed);
  };
  m.true_eta = [](const Vector& params, int) { return params[0]; };
  return m;
}

}  // namespace models
}  // namespace hilma
