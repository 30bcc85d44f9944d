#include <cmath>
#include <string>

#include "hilma/errors.hpp"
#include "hilma/models.hpp"
#include "hilma/rng.hpp"
#include "model_internal.hpp"

namespace hilma {
namespace models {

namespace {

Vector fitted_means(const Vector& beta, const Dataset& data, int first_row,
                    int n_rows) {
  Vector mu(n_rows);
  for (int i = 0; i < n_rows; ++i) {
    mu[i] = std::exp(beta[0] + beta[1] * data.covariate(first_row + i, 0));
  }
  return mu;
}

void check_support(const Vector& y_mis) {
  for (int i = 0; i < y_mis.size(); ++i) {
    if (!(y_mis[i] > 0)) {
      throw DomainError("y_mis[" + std::to_string(i) + "] = " +
                        std::to_string(y_mis[i]) +
                        " is outside the exponential support (0, inf)");
    }
  }
}

double exp_rows_loglik(const Vector& beta, const Vector& y_mis,
                       const Dataset& data) {
  check_support(y_mis);
  const Vector mu_obs = fitted_means(beta, data, 0, data.n_obs());
  const Vector mu_mis = fitted_means(beta, data, data.n_obs(), data.n_mis());
  double total = 0;
  for (int i = 0; i < data.n_obs(); ++i) {
    total += -std::log(mu_obs[i]) - data.response()[i] / mu_obs[i];
  }
  for (int i = 0; i < data.n_mis(); ++i) {
    total += -std::log(mu_mis[i]) - y_mis[i] / mu_mis[i];
  }
  return total;
}

Vector log_linear_init(const Dataset& data) {
  const Matrix design = detail::intercept_design(data, 0, data.n_obs());
  Vector logy(data.n_obs());
  for (int i = 0; i < data.n_obs(); ++i) {
    logy[i] = std::log(std::max(data.response()[i], 1e-8));
  }
  return detail::least_squares(design, logy);
}

void validate_exp_reg_data(const Dataset& data) {
  detail::require_covariate(data, "exp_reg");
  if (data.n_obs() < 2) {
    throw DataError("exp_reg needs at least 2 observed responses to identify "
                    "(beta0, beta1); got " + std::to_string(data.n_obs()));
  }
  for (int i = 0; i < data.n_obs(); ++i) {
    if (data.response()[i] < 0) {
      throw DataError("row " + std::to_string(i) + ": response " +
                      std::to_string(data.response()[i]) + " is negative");
    }
  }
}

// Maximizes sum_i [-xb_i - filled_i / exp(xb_i)] over beta by Newton steps
// with halving; this is the M step on exponentially filled responses.
Vector m_step_newton(const Dataset& data, const Vector& filled, Vector beta) {
  const int n = data.n();
  auto value = [&](const Vector& b) {
    double total = 0;
    for (int i = 0; i < n; ++i) {
      const double eta = b[0] + b[1] * data.covariate(i, 0);
      total += -eta - filled[i] * std::exp(-eta);
    }
    return total;
  };
  double current = value(beta);
  for (int iter = 0; iter < 100; ++iter) {
    Vector g = Vector::Zero(2);
    Matrix H = Matrix::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
      const double x = data.covariate(i, 0);
      const double eta = beta[0] + beta[1] * x;
      const double w = filled[i] * std::exp(-eta);  // y_i / mu_i
      g[0] += w - 1.0;
      g[1] += (w - 1.0) * x;
      H(0, 0) += w;
      H(0, 1) += w * x;
      H(1, 1) += w * x * x;
    }
    H(1, 0) = H(0, 1);
    if (g.cwiseAbs().maxCoeff() <= 1e-12) return beta;
    const Vector step = H.ldlt().solve(g);
    // Terminal phase: the objective moves by less than its own roundoff, so a
    // value-based line search can stall. H is positive definite here, the full
    // Newton step is an ascent direction, and its quadratic error is O(step^2)
    // — take it and stop.
    if (step.cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + beta.cwiseAbs().maxCoeff())) {
      return beta + step;
    }
    double t = 1.0;
    for (int halving = 0; halving < 50; ++halving) {
      const Vector cand = beta + t * step;
      const double cand_value = value(cand);
      if (std::isfinite(cand_value) && cand_value >= current) {
        beta = cand;
        current = cand_value;
        break;
      }
      t *= 0.5;
    }
  }
  throw ConvergenceError("M step for exp_reg did not converge in 100 iterations");
}

SimulatedData simulate_exp_reg(const Vector& beta,
                               const MissingnessMechanism& mech, int n,
                               std::uint64_t seed) {
  if (n < 2) throw UsageError("simulation needs n >= 2");
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Matrix x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = rng.uniform(-1.0, 1.0);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = rng.exponential(std::exp(beta[0] + beta[1] * x(i, 0)));
    }
    const auto delta = detail::draw_delta(rng, mech, y, x.col(0));
    int n_obs = 0;
    for (auto d : delta) n_obs += d;
    if (n_obs < 2) continue;
    return detail::assemble_simulated(x, y, delta);
  }
  throw DataError("simulation produced fewer than 2 observed responses in "
                  "100 attempts");
}

}  // namespace

ModelSpec exponential_regression() {
  ModelSpec m;
  m.tag = "exp_reg";
  m.param_dim = 2;
  m.param_domain = {ParamDomain::real_line, ParamDomain::real_line};
  m.param_names = {"beta0", "beta1"};
  m.scale = ScaleTransform::log_scale();
  m.vv_structure = VvStructure::diagonal;

  m.extended_loglik = [](const Vector& psi, const Vector& y_mis,
                         const Dataset& data) {
    return exp_rows_loglik(psi, y_mis, data);
  };

  m.grad_y = [](const Vector& psi, const Vector& /*y_mis*/, const Dataset& data) {
    const Vector mu = fitted_means(psi, data, data.n_obs(), data.n_mis());
    return (-mu.cwiseInverse()).eval();
  };
  m.hess_y_diag = [](const Vector&, const Vector& y_mis, const Dataset&) {
    return Vector::Zero(y_mis.size()).eval();
  };

  // h(beta, v) = sum_obs [-xb - y/mu] + sum_mis [-xb - exp(v)/mu + v]
  m.h_gradient = [](const Vector& psi, const Vector& v, const Dataset& data,
                    Vector& g_psi, Vector& g_v) {
    const Vector mu_obs = fitted_means(psi, data, 0, data.n_obs());
    const Vector mu_mis = fitted_means(psi, data, data.n_obs(), data.n_mis());
    g_psi = Vector::Zero(2);
    for (int i = 0; i < data.n_obs(); ++i) {
      const double w = data.response()[i] / mu_obs[i] - 1.0;
      g_psi[0] += w;
      g_psi[1] += w * data.covariate(i, 0);
    }
    g_v.resize(v.size());
    for (int i = 0; i < data.n_mis(); ++i) {
      const double w = std::exp(v[i]) / mu_mis[i] - 1.0;
      g_psi[0] += w;
      g_psi[1] += w * data.covariate(data.n_obs() + i, 0);
      g_v[i] = -w;
    }
  };

  m.closed_marginal_loglik = [](const Vector& psi, const Dataset& data) {
    const Vector mu = fitted_means(psi, data, 0, data.n_obs());
    double total = 0;
    for (int i = 0; i < data.n_obs(); ++i) {
      total += -std::log(mu[i]) - data.response()[i] / mu[i];
    }
    return total;
  };

  m.canonical_function = [](const Vector& psi, const Dataset& data) {
    return fitted_means(psi, data, data.n_obs(), data.n_mis());
  };

  m.em_step = [](const Vector& psi, const Dataset& data) {
    Vector filled = data.response();
    const Vector mu_mis = fitted_means(psi, data, data.n_obs(), data.n_mis());
    for (int i = 0; i < data.n_mis(); ++i) filled[data.n_obs() + i] = mu_mis[i];
    return m_step_newton(data, filled, psi);
  };

  m.complete_case_init = [](const Dataset& data) {
    validate_exp_reg_data(data);
    return log_linear_init(data);
  };

  m.default_v_init = [](const Vector& psi, const Dataset& data) {
    Vector v(data.n_mis());
    for (int i = 0; i < data.n_mis(); ++i) {
      v[i] = psi[0] + psi[1] * data.covariate(data.n_obs() + i, 0);
    }
    return v;
  };

  m.normalizing = ModelSpec::Normalizing{
      true, "reports are on the response scale itself"};
  m.full_support_scale = ScaleTransform::log_scale();

  m.validate_data = validate_exp_reg_data;
  m.default_mechanism = MissingnessMechanism::logistic_mar(1.0, 2.0, 0.3);
  m.simulate = simulate_exp_reg;

  m.true_eta = [](const Vector& params, int) {
    // E exp(b0 + b1 X) with X ~ Uniform(-1, 1)
    const double b1 = params[1];
    if (std::abs(b1) < 1e-12) return std::exp(params[0]);
    return std::exp(params[0]) * std::sinh(b1) / b1;
  };
  return m;
}

ModelSpec exponential_regression_with_mechanism() {
  ModelSpec m = exponential_regression();
  m.tag = "exp_reg_mech";
  m.param_dim = 5;
  m.param_domain = {ParamDomain::real_line, ParamDomain::real_line,
                    ParamDomain::real_line, ParamDomain::real_line,
                    ParamDomain::real_line};
  m.param_names = {"beta0", "beta1", "rho0", "rho1", "rho2"};

  m.extended_loglik = [](const Vector& psi, const Vector& y_mis,
                         const Dataset& data) {
    return exp_rows_loglik(psi.head(2), y_mis, data) +
           detail::logistic_mechanism_loglik(psi.tail(3), data);
  };

  const ModelSpec base = exponential_regression();
  m.h_gradient = [base](const Vector& psi, const Vector& v, const Dataset& data,
                        Vector& g_psi, Vector& g_v) {
    Vector g_base;
    base.h_gradient(psi.head(2), v, data, g_base, g_v);
    g_psi = Vector::Zero(5);
    g_psi.head(2) = g_base;
    g_psi.tail(3) = detail::logistic_mechanism_score(psi.tail(3), data);
  };

  m.closed_marginal_loglik = [base](const Vector& psi, const Dataset& data) {
    return base.closed_marginal_loglik(psi.head(2), data) +
           detail::logistic_mechanism_loglik(psi.tail(3), data);
  };

  m.canonical_function = [base](const Vector& psi, const Dataset& data) {
    return base.canonical_function(psi.head(2), data);
  };
  m.default_v_init = [base](const Vector& psi, const Dataset& data) {
    return base.default_v_init(psi.head(2), data);
  };

  m.em_step = nullptr;

  m.complete_case_init = [](const Dataset& data) {
    validate_exp_reg_data(data);
    Vector psi = Vector::Zero(5);
    psi.head(2) = log_linear_init(data);
    return psi;
  };

  m.simulate = [](const Vector& params, const MissingnessMechanism& mech, int n,
                  std::uint64_t seed) {
    return simulate_exp_reg(params.head(2), mech, n, seed);
  };
  m.true_eta = [base](const Vector& params, int n) {
    return base.true_eta(params.head(2), n);
  };
  return m;
}

}  // namespace models
}  // namespace hilma
