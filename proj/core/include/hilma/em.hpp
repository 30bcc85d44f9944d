#pragma once

#include "hilma/dataset.hpp"
#include "hilma/model.hpp"
#include "hilma/types.hpp"

namespace hilma {

struct EMOptions {
  double tol = 1e-10;  // sup-norm change in psi that counts as a fixed point
  int max_iters = 5000;
};

// Deliberately carries no variance estimate: the EM sweep never forms the
// curvature that standard errors require. Ask the h-likelihood fit for those.
struct EMResult {
  Vector psi_hat;
  int iterations = 0;
};

// Iterates the model's registered EM step to a fixed point. Throws
// UnsupportedError when the model registers no step and ConvergenceError when
// the iteration budget runs out before the fixed point is reached.
EMResult em_fit(const ModelSpec& model, const Dataset& data, const Vector& init,
                const EMOptions& options = {});

// Same, initialized from the model's complete-case estimate.
EMResult em_fit(const ModelSpec& model, const Dataset& data,
                const EMOptions& options = {});

}  // namespace hilma
