#pragma once

#include <cstdint>
#include <vector>

#include "hilma/dataset.hpp"
#include "hilma/mechanism.hpp"
#include "hilma/rng.hpp"
#include "hilma/types.hpp"

namespace hilma {
namespace models {
namespace detail {

// Draws the observation indicators for a realized sample. x is the first
// covariate column (may be empty for covariate-free models).
std::vector<std::uint8_t> draw_delta(Rng& rng, const MissingnessMechanism& mech,
                                     const Vector& y, const Vector& x);

// Packs (X, y, delta) into the observed-first Dataset plus the hidden truth.
// The realized missing responses are recorded in the order of the dataset's
// missing tail.
SimulatedData assemble_simulated(const Matrix& covariates, const Vector& y,
                                 const std::vector<std::uint8_t>& delta);

// Least squares via column-pivoted QR; throws RankError when the design is
// numerically rank deficient.
Vector least_squares(const Matrix& design, const Vector& response);

// Design matrix [1, x] built from the first covariate column.
Matrix intercept_design(const Dataset& data, int first_row, int n_rows);

// Requires at least one covariate column; throws DataError otherwise.
void require_covariate(const Dataset& data, const char* tag);

// Log-likelihood and score of the logistic observation model
// P(observed | x) = logistic(rho0 + rho1 x + rho2 x^2) over all rows.
double logistic_mechanism_loglik(const Vector& rho, const Dataset& data);
Vector logistic_mechanism_score(const Vector& rho, const Dataset& data);

// Requires n_obs >= 1; throws DataError otherwise.
void require_observed(const Dataset& data, const char* tag);

}  // namespace detail
}  // namespace models
}  // namespace hilma
