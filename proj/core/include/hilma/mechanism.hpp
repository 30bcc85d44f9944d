#pragma once

#include <string>
#include <vector>

#include "hilma/dataset.hpp"
#include "hilma/types.hpp"

namespace hilma {

// How response values go missing in simulated data.
//
//  - logistic_mar:     P(observed | x) = logistic(rho0 + rho1*x + rho2*x^2),
//                      independent of the response given x.
//  - threshold_censor: observed iff y <= threshold (non-ignorable; the
//                      indicator carries information about y).
//  - fixed_pattern:    a fixed index set is missing (empty pattern means
//                      "last row").
struct MissingnessMechanism {
  enum class Kind { logistic_mar, threshold_censor, fixed_pattern, none };

  Kind kind = Kind::none;
  Vector rho;                  // logistic coefficients (rho0, rho1, rho2)
  double threshold = 0.0;      // censoring threshold
  std::vector<int> pattern;    // fixed missing indices

  static MissingnessMechanism logistic_mar(double rho0, double rho1, double rho2);
  static MissingnessMechanism threshold_censor(double threshold);
  static MissingnessMechanism fixed_pattern_at(std::vector<int> indices);
  static MissingnessMechanism none_observed_all();

  double prob_observed(double x) const;  // logistic_mar only
  std::string describe() const;
};

// A simulated dataset together with the hidden truth used only for scoring
// estimators: the realized missing responses (aligned with the dataset's
// missing tail), the complete-sample mean, and — for random-effect models —
// the realized random parameters.
struct SimulatedData {
  Dataset data;
  Vector y_mis_true;
  double complete_mean = 0.0;
  Vector random_true;
};

}  // namespace hilma
