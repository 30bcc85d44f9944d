#pragma once

#include <string>
#include <vector>

#include "hilma/model.hpp"

namespace hilma {
namespace models {

// ---- bundled model builders ----
//
// Each builder returns a fully wired ModelSpec: extended log-likelihood,
// working scale for the random parameters, closed forms where they exist,
// analytic derivatives, simulation protocol, and validation. The returned
// spec is self-contained (all settings captured by value) and safe to share
// across threads.

// I.i.d. exponential responses with a fixed missingness pattern.
// psi = (theta) with theta > 0 the mean.
ModelSpec exponential_mean();

// Exponential responses observed only below a known threshold c (the
// indicator is informative: a missing response is known to exceed c).
// psi = (theta).
ModelSpec censored_exponential(double c);

// Negative control: the same censored-exponential likelihood maximized over
// the raw missing responses (no transformation, no Jacobian). Its joint
// maximizer is the documented nonsense point, kept around so tests can pin
// down exactly how the naive approach fails.
ModelSpec censored_exponential_raw(double c);

// Balanced one-way random-effects model: y_ij = mu + u_i + e_ij with
// u_i ~ N(0, lambda2), e_ij ~ N(0, sigma2). psi = (mu, sigma2, lambda2);
// the random parameters are the q effects u. `groups`/`per_group` configure
// the simulation protocol; fits read the layout from the data.
ModelSpec one_way_mixed(int groups = 10, int per_group = 5);

// Negative control: maximizes the joint likelihood in (psi, u) directly on
// the raw u scale. The u-estimates are the classical shrinkage predictors,
// but the variance components differ from maximum likelihood.
ModelSpec one_way_mixed_raw(int groups = 10, int per_group = 5);

// Normal linear regression y = b0 + b1 x + e with responses missing at
// random given x. psi = (beta0, beta1, sigma2).
ModelSpec normal_regression();

// Negative control: joint maximization over the raw missing responses. The
// regression coefficients survive but the variance estimate collapses to the
// complete-sample denominator.
ModelSpec normal_regression_raw();

// Variant of normal_regression that carries the logistic selection model
// inside the extended likelihood: psi = (beta0, beta1, sigma2, rho0, rho1,
// rho2). Used to verify that modelling an ignorable mechanism leaves the
// response-parameter estimates unchanged.
ModelSpec normal_regression_with_mechanism();

// Exponential regression: y | x ~ Exponential(mean exp(b0 + b1 x)), missing
// at random given x. psi = (beta0, beta1).
ModelSpec exponential_regression();

// As above, with the logistic selection model included in psi.
ModelSpec exponential_regression_with_mechanism();

// Gaussian responses on a fixed covariate grid, missing exactly when the
// response exceeds c. psi = (beta0, beta1, sigma2).
ModelSpec tobit(double c);

// ---- tag lookup ----

// Model-specific knobs that cannot be encoded in a tag string.
struct TagOptions {
  double censor = 3.0;   // censored_exp / tobit threshold
  int groups = 10;       // mixed_oneway layout (simulation only)
  int per_group = 5;
};

// Resolves one of: exp_mean | mixed_oneway | censored_exp | normal_reg |
// exp_reg | tobit. Throws UsageError for unknown tags.
ModelSpec by_tag(const std::string& tag, const TagOptions& options = {});

std::vector<std::string> known_tags();

// The model's declared full-support random-parameter scale (the base of the
// weak-canonical construction): log y for the exponential models, log(y - c)
// for the thresholded models, the identity for Gaussian responses. Throws
// UsageError when the model declares none.
ScaleTransform default_b_scale(const ModelSpec& model);

}  // namespace models
}  // namespace hilma
