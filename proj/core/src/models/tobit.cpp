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

Vector fitted_means(const Vector& psi, const Dataset& data, int first_row,
                    int n_rows) {
  Vector mu(n_rows);
  for (int i = 0; i < n_rows; ++i) {
    mu[i] = psi[0] + psi[1] * data.covariate(first_row + i, 0);
  }
  return mu;
}

// Positive root of t^2 + (c - mu) t - sigma2 = 0: the exceedance y - c at the
// mode of the log(y - c) likelihood. Written to avoid cancellation when the
// fitted mean sits far below the threshold.
double mode_exceedance(double m, double sigma2) {
  const double root = std::sqrt(m * m + 4.0 * sigma2);
  return (m >= 0) ? 0.5 * (m + root) : 2.0 * sigma2 / (root - m);
}

// Slope k_i of the canonical transformation v_i = k_i b_i: the predictive
// density of b_i = log(y_i - c) evaluated at its own mode.
Vector canonical_slopes(const Vector& psi, const Dataset& data, double c) {
  const double sigma = std::sqrt(psi[2]);
  const Vector mu = fitted_means(psi, data, data.n_obs(), data.n_mis());
  Vector k(data.n_mis());
  for (int i = 0; i < data.n_mis(); ++i) {
    const double m = mu[i] - c;
    const double t = mode_exceedance(m, psi[2]);
    const double log_k = log_norm_pdf((t - m) / sigma) - std::log(sigma) +
                         std::log(t) - log_norm_cdf(m / sigma);
    k[i] = std::exp(log_k);
  }
  return k;
}

void check_support(const Vector& y_mis, double c) {
  for (int i = 0; i < y_mis.size(); ++i) {
    if (!(y_mis[i] > c)) {
      throw DomainError("y_mis[" + std::to_string(i) + "] = " +
                        std::to_string(y_mis[i]) +
                        " violates the support y > " + std::to_string(c) +
                        " implied by a missing response");
    }
  }
}

}  // namespace

ModelSpec tobit(double c) {
  if (!std::isfinite(c)) {
    throw UsageError("threshold must be finite");
  }
  ModelSpec m;
  m.tag = "tobit";
  m.param_dim = 3;
  m.param_domain = {ParamDomain::real_line, ParamDomain::real_line,
                    ParamDomain::positive};
  m.param_names = {"beta0", "beta1", "sigma2"};
  m.vv_structure = VvStructure::diagonal;

  m.extended_loglik = [c](const Vector& psi, const Vector& y_mis,
                          const Dataset& data) {
    check_support(y_mis, c);
    const double s = psi[2];
    const Vector mu_obs = fitted_means(psi, data, 0, data.n_obs());
    const Vector mu_mis = fitted_means(psi, data, data.n_obs(), data.n_mis());
    const double rss = (data.observed_response() - mu_obs).squaredNorm() +
                       (y_mis - mu_mis).squaredNorm();
    return -data.n() * (kLogSqrt2Pi + 0.5 * std::log(s)) - rss / (2.0 * s);
  };

  // v_i = k_i(psi) log(y_i - c); dy/dv = (y - c)/k_i.
  {
    ScaleTransform s;
    s.kind = ScaleKind::canonical;
    s.name = "tobit_predictive";
    s.forward = [c](const Vector& psi, const Dataset& data, const Vector& y) {
      check_support(y, c);
      const Vector k = canonical_slopes(psi, data, c);
      return (k.array() * (y.array() - c).log()).matrix().eval();
    };
    s.inverse = [c](const Vector& psi, const Dataset& data, const Vector& v) {
      const Vector k = canonical_slopes(psi, data, c);
      return (c + (v.array() / k.array()).exp()).matrix().eval();
    };
    s.log_jacobian = [c](const Vector& psi, const Dataset& data,
                         const Vector& y) {
      check_support(y, c);
      const Vector k = canonical_slopes(psi, data, c);
      return ((y.array() - c).log() - k.array().log()).sum();
    };
    s.dy_dv = [c](const Vector& psi, const Dataset& data, const Vector& v) {
      const Vector k = canonical_slopes(psi, data, c);
      return ((v.array() / k.array()).exp() / k.array()).matrix().eval();
    };
    s.d2y_dv2 = [c](const Vector& psi, const Dataset& data, const Vector& v) {
      const Vector k = canonical_slopes(psi, data, c);
      return ((v.array() / k.array()).exp() / k.array().square())
          .matrix()
          .eval();
    };
    s.dlogjac_dv = [c](const Vector& psi, const Dataset& data,
                       const Vector& /*v*/) {
      const Vector k = canonical_slopes(psi, data, c);
      return k.cwiseInverse().eval();
    };
    s.d2logjac_dv2 = [](const Vector&, const Dataset&, const Vector& v) {
      return Vector::Zero(v.size()).eval();
    };
    m.scale = s;
  }

  m.grad_y = [](const Vector& psi, const Vector& y_mis, const Dataset& data) {
    const Vector mu = fitted_means(psi, data, data.n_obs(), data.n_mis());
    return ((mu - y_mis) / psi[2]).eval();
  };
  m.hess_y_diag = [](const Vector& psi, const Vector& y_mis, const Dataset&) {
    return Vector::Constant(y_mis.size(), -1.0 / psi[2]).eval();
  };

  m.closed_marginal_loglik = [c](const Vector& psi, const Dataset& data) {
    const double s = psi[2];
    const double sigma = std::sqrt(s);
    const Vector mu_obs = fitted_means(psi, data, 0, data.n_obs());
    const Vector mu_mis = fitted_means(psi, data, data.n_obs(), data.n_mis());
    double total = -data.n_obs() * (kLogSqrt2Pi + 0.5 * std::log(s)) -
                   (data.observed_response() - mu_obs).squaredNorm() / (2.0 * s);
    for (int i = 0; i < data.n_mis(); ++i) {
      total += log_norm_cdf((mu_mis[i] - c) / sigma);
    }
    return total;
  };

  m.canonical_function = [c](const Vector& psi, const Dataset& data) {
    const Vector mu = fitted_means(psi, data, data.n_obs(), data.n_mis());
    Vector y(data.n_mis());
    for (int i = 0; i < data.n_mis(); ++i) {
      y[i] = c + mode_exceedance(mu[i] - c, psi[2]);
    }
    return y;
  };

  m.complete_case_init = [](const Dataset& data) {
    detail::require_covariate(data, "tobit");
    if (data.n_obs() < 3) {
      throw DataError("tobit needs at least 3 observed responses to identify "
                      "(beta0, beta1, sigma2); got " +
                      std::to_string(data.n_obs()));
    }
    const Matrix design = detail::intercept_design(data, 0, data.n_obs());
    const Vector beta = detail::least_squares(design, data.observed_response());
    const double rss = (data.observed_response() - design * beta).squaredNorm();
    Vector psi(3);
    psi << beta[0], beta[1], std::max(rss / data.n_obs(), 1e-8);
    return psi;
  };

  m.normalizing = ModelSpec::Normalizing{
      true, "reports are on the response scale itself"};
  m.full_support_scale = ScaleTransform::log_shift(c);

  m.validate_data = [c](const Dataset& data) {
    detail::require_covariate(data, "tobit");
    if (data.n_obs() < 3) {
      throw DataError("tobit needs at least 3 observed responses; got " +
                      std::to_string(data.n_obs()));
    }
    for (int i = 0; i < data.n_obs(); ++i) {
      if (data.response()[i] > c) {
        throw DataError("row " + std::to_string(i) + ": observed response " +
                        std::to_string(data.response()[i]) +
                        " exceeds the threshold " + std::to_string(c) +
                        "; such a value could not have been observed");
      }
    }
  };

  m.default_mechanism = MissingnessMechanism::threshold_censor(c);

  m.simulate = [c](const Vector& params, const MissingnessMechanism& mech,
                   int n, std::uint64_t seed) {
    if (n < 4) throw UsageError("simulation needs n >= 4");
    Rng rng(seed);
    const double sigma = std::sqrt(params[2]);
    Matrix x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = -1.0 + 2.0 * (i + 1) / n;
    for (int attempt = 0; attempt < 100; ++attempt) {
      Vector y(n);
      for (int i = 0; i < n; ++i) {
        y[i] = params[0] + params[1] * x(i, 0) + sigma * rng.normal();
      }
      const auto delta = detail::draw_delta(rng, mech, y, x.col(0));
      int n_obs = 0;
      for (auto d : delta) n_obs += d;
      if (n_obs < 3) continue;
      return detail::assemble_simulated(x, y, delta);
    }
    throw DataError("simulation produced fewer than 3 observed responses in "
                    "100 attempts");
  };

  m.true_eta = [](const Vector& params, int n) {
    // mean of the fixed design x_i = -1 + 2i/n is 1/n
    return params[0] + params[1] / n;
  };
  return m;
}

}  // namespace models
}  // namespace hilma
