#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hilma/errors.hpp"
#include "hilma/mechanism.hpp"
#include "hilma/models.hpp"
#include "model_internal.hpp"

namespace hilma {

MissingnessMechanism MissingnessMechanism::logistic_mar(double rho0, double rho1,
                                                        double rho2) {
  MissingnessMechanism m;
  m.kind = Kind::logistic_mar;
  m.rho = Vector(3);
  m.rho << rho0, rho1, rho2;
  return m;
}

MissingnessMechanism MissingnessMechanism::threshold_censor(double threshold) {
  MissingnessMechanism m;
  m.kind = Kind::threshold_censor;
  m.threshold = threshold;
  return m;
}

MissingnessMechanism MissingnessMechanism::fixed_pattern_at(std::vector<int> indices) {
  MissingnessMechanism m;
  m.kind = Kind::fixed_pattern;
  m.pattern = std::move(indices);
  return m;
}

MissingnessMechanism MissingnessMechanism::none_observed_all() {
  return MissingnessMechanism{};
}

double MissingnessMechanism::prob_observed(double x) const {
  if (kind != Kind::logistic_mar) {
    throw UsageError("prob_observed is defined only for the logistic mechanism");
  }
  const double eta = rho[0] + rho[1] * x + rho[2] * x * x;
  // Stable logistic.
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

std::string MissingnessMechanism::describe() const {
  switch (kind) {
    case Kind::logistic_mar:
      return "logistic(rho0=" + std::to_string(rho[0]) +
             ", rho1=" + std::to_string(rho[1]) +
             ", rho2=" + std::to_string(rho[2]) + ")";
    case Kind::threshold_censor:
      return "observed iff y <= " + std::to_string(threshold);
    case Kind::fixed_pattern: {
      if (pattern.empty()) return "fixed pattern (last row missing)";
      std::string s = "fixed pattern (missing rows:";
      for (int i : pattern) s += " " + std::to_string(i);
      return s + ")";
    }
    case Kind::none:
      return "fully observed";
  }
  return "unknown";
}

namespace models {

ModelSpec by_tag(const std::string& tag, const TagOptions& options) {
  if (tag == "exp_mean") return exponential_mean();
  if (tag == "mixed_oneway") return one_way_mixed(options.groups, options.per_group);
  if (tag == "censored_exp") return censored_exponential(options.censor);
  if (tag == "normal_reg") return normal_regression();
  if (tag == "exp_reg") return exponential_regression();
  if (tag == "tobit") return tobit(options.censor);
  std::string known;
  for (const auto& t : known_tags()) known += (known.empty() ? "" : ", ") + t;
  throw UsageError("unknown model tag '" + tag + "' (known tags: " + known + ")");
}

std::vector<std::string> known_tags() {
  return {"exp_mean", "mixed_oneway", "censored_exp",
          "normal_reg", "exp_reg",     "tobit"};
}

ScaleTransform default_b_scale(const ModelSpec& model) {
  if (!model.full_support_scale) {
    throw UsageError("model '" + model.tag +
                     "' declares no full-support random-parameter scale");
  }
  return *model.full_support_scale;
}

namespace detail {

std::vector<std::uint8_t> draw_delta(Rng& rng, const MissingnessMechanism& mech,
                                     const Vector& y, const Vector& x) {
  const int n = static_cast<int>(y.size());
  std::vector<std::uint8_t> delta(static_cast<std::size_t>(n), 1);
  switch (mech.kind) {
    case MissingnessMechanism::Kind::none:
      break;
    case MissingnessMechanism::Kind::fixed_pattern: {
      std::vector<int> idx = mech.pattern;
      if (idx.empty()) idx.push_back(n - 1);
      for (int i : idx) {
        if (i < 0 || i >= n) {
          throw UsageError("fixed missing index " + std::to_string(i) +
                           " is outside 0.." + std::to_string(n - 1));
        }
        delta[static_cast<std::size_t>(i)] = 0;
      }
      break;
    }
    case MissingnessMechanism::Kind::threshold_censor:
      for (int i = 0; i < n; ++i) {
        delta[static_cast<std::size_t>(i)] = (y[i] <= mech.threshold) ? 1 : 0;
      }
      break;
    case MissingnessMechanism::Kind::logistic_mar:
      for (int i = 0; i < n; ++i) {
        const double xi = (x.size() > 0) ? x[i] : 0.0;
        delta[static_cast<std::size_t>(i)] =
            rng.bernoulli(mech.prob_observed(xi)) ? 1 : 0;
      }
      break;
  }
  return delta;
}

SimulatedData assemble_simulated(const Matrix& covariates, const Vector& y,
                                 const std::vector<std::uint8_t>& delta) {
  const int n = static_cast<int>(y.size());
  Vector masked = y;
  for (int i = 0; i < n; ++i) {
    if (!delta[static_cast<std::size_t>(i)]) {
      masked[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  auto [data, order] = reorder_observed_first(covariates, masked);
  Vector y_mis_true(data.n_mis());
  for (int k = 0; k < data.n_mis(); ++k) {
    y_mis_true[k] = y[order[static_cast<std::size_t>(data.n_obs() + k)]];
  }
  SimulatedData out{std::move(data), std::move(y_mis_true), y.mean(), Vector()};
  return out;
}

Vector least_squares(const Matrix& design, const Vector& response) {
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < design.cols()) {
    throw RankError("regression design matrix is rank deficient (rank " +
                    std::to_string(qr.rank()) + " < " +
                    std::to_string(design.cols()) + " columns)");
  }
  return qr.solve(response);
}

Matrix intercept_design(const Dataset& data, int first_row, int n_rows) {
  Matrix design(n_rows, 2);
  for (int i = 0; i < n_rows; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = data.covariate(first_row + i, 0);
  }
  return design;
}

void require_covariate(const Dataset& data, const char* tag) {
  if (data.n_covariates() < 1) {
    throw DataError(std::string(tag) + " requires a covariate column");
  }
}

double logistic_mechanism_loglik(const Vector& rho, const Dataset& data) {
  double total = 0;
  for (int i = 0; i < data.n(); ++i) {
    const double x = data.covariate(i, 0);
    const double eta = rho[0] + rho[1] * x + rho[2] * x * x;
    // log p with log(1 - p) = log p - eta, both evaluated stably
    const double lp = (eta < 0) ? eta - std::log1p(std::exp(eta))
                                : -std::log1p(std::exp(-eta));
    total += data.observed(i) ? lp : (lp - eta);
  }
  return total;
}

Vector logistic_mechanism_score(const Vector& rho, const Dataset& data) {
  Vector score = Vector::Zero(3);
  for (int i = 0; i < data.n(); ++i) {
    const double x = data.covariate(i, 0);
    const double eta = rho[0] + rho[1] * x + rho[2] * x * x;
    const double p = 1.0 / (1.0 + std::exp(-eta));
    const double w = (data.observed(i) ? 1.0 : 0.0) - p;
    score[0] += w;
    score[1] += w * x;
    score[2] += w * x * x;
  }
  return score;
}

void require_observed(const Dataset& data, const char* tag) {
  if (data.n_obs() < 1) {
    throw DataError(std::string(tag) +
                    ": every response is missing; nothing to estimate from");
  }
}

}  // namespace detail
}  // namespace models
}  // namespace hilma
