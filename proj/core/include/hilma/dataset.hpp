#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hilma/types.hpp"

namespace hilma {

// Immutable data container shared by every model.
//
// Rows are stored observed-first: row i is observed iff i < n_obs(). The
// response vector has length n() and holds NaN in the missing slots (the
// tail). Covariates are an n x p_x matrix (p_x may be zero). Construction
// validates all of this and throws DataError on violations; once built, a
// Dataset is safe to share across threads.
class Dataset {
 public:
  Dataset(Matrix covariates, Vector response, std::vector<std::uint8_t> delta);

  // Convenience: rows already observed-first, delta derived from NaN pattern.
  Dataset(Matrix covariates, Vector response);

  int n() const { return static_cast<int>(response_.size()); }
  int n_obs() const { return n_obs_; }
  int n_mis() const { return n() - n_obs_; }
  int n_covariates() const { return static_cast<int>(covariates_.cols()); }

  const Matrix& covariates() const { return covariates_; }
  double covariate(int i, int j = 0) const { return covariates_(i, j); }

  // Full response (NaN in missing slots).
  const Vector& response() const { return response_; }
  // The observed head of the response (length n_obs()).
  Vector observed_response() const { return response_.head(n_obs_); }
  double sum_observed() const { return response_.head(n_obs_).sum(); }

  bool observed(int i) const { return i < n_obs_; }
  std::vector<std::uint8_t> delta() const;

 private:
  void validate() const;

  Matrix covariates_;
  Vector response_;
  int n_obs_;
};

// Reorders arbitrary rows into the observed-first layout required by Dataset.
// Returns the dataset together with the permutation `order` such that dataset
// row k came from input row order[k]. The reorder is stable within the
// observed and missing groups.
std::pair<Dataset, std::vector<int>> reorder_observed_first(
    const Matrix& covariates, const Vector& response_with_nan);

}  // namespace hilma
