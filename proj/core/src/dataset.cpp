#include "hilma/dataset.hpp"

#include <cmath>
#include <string>

#include "hilma/errors.hpp"

namespace hilma {

Dataset::Dataset(Matrix covariates, Vector response, std::vector<std::uint8_t> delta)
    : covariates_(std::move(covariates)), response_(std::move(response)) {
  if (static_cast<int>(delta.size()) != response_.size()) {
    throw DataError("dataset: delta length " + std::to_string(delta.size()) +
                    " does not match response length " +
                    std::to_string(response_.size()));
  }
  int nobs = 0;
  while (nobs < static_cast<int>(delta.size()) && delta[nobs]) ++nobs;
  for (int i = nobs; i < static_cast<int>(delta.size()); ++i) {
    if (delta[i]) {
      throw DataError("dataset: rows must be ordered observed-first; row " +
                      std::to_string(i) + " is observed after a missing row");
    }
  }
  n_obs_ = nobs;
  validate();
}

Dataset::Dataset(Matrix covariates, Vector response)
    : covariates_(std::move(covariates)), response_(std::move(response)) {
  int nobs = 0;
  while (nobs < response_.size() && !std::isnan(response_[nobs])) ++nobs;
  n_obs_ = nobs;
  validate();
}

void Dataset::validate() const {
  if (covariates_.size() > 0 && covariates_.rows() != response_.size()) {
    throw DataError("dataset: covariate rows (" + std::to_string(covariates_.rows()) +
                    ") do not match response length (" +
                    std::to_string(response_.size()) + ")");
  }
  for (int i = 0; i < response_.size(); ++i) {
    const bool nan = std::isnan(response_[i]);
    if (i < n_obs_ && nan) {
      throw DataError("dataset: observed row " + std::to_string(i) +
                      " has a NaN response");
    }
    if (i >= n_obs_ && !nan) {
      throw DataError("dataset: missing row " + std::to_string(i) +
                      " must have a NaN response slot");
    }
    if (i < n_obs_ && !std::isfinite(response_[i])) {
      throw DataError("dataset: response at row " + std::to_string(i) +
                      " is not finite");
    }
  }
  for (int i = 0; i < covariates_.rows(); ++i) {
    for (int j = 0; j < covariates_.cols(); ++j) {
      if (!std::isfinite(covariates_(i, j))) {
        throw DataError("dataset: covariate (" + std::to_string(i) + "," +
                        std::to_string(j) + ") is not finite");
      }
    }
  }
}

std::vector<std::uint8_t> Dataset::delta() const {
  std::vector<std::uint8_t> d(n());
  for (int i = 0; i < n(); ++i) d[i] = observed(i) ? 1 : 0;
  return d;
}

std::pair<Dataset, std::vector<int>> reorder_observed_first(
    const Matrix& covariates, const Vector& response_with_nan) {
  const int n = static_cast<int>(response_with_nan.size());
  std::vector<int> order;
  order.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (!std::isnan(response_with_nan[i])) order.push_back(i);
  }
  for (int i = 0; i < n; ++i) {
    if (std::isnan(response_with_nan[i])) order.push_back(i);
  }
  Matrix X(n, covariates.cols());
  Vector y(n);
  for (int k = 0; k < n; ++k) {
    if (covariates.cols() > 0) X.row(k) = covariates.row(order[k]);
    y[k] = response_with_nan[order[k]];
  }
  return {Dataset(std::move(X), std::move(y)), order};
}

}  // namespace hilma
