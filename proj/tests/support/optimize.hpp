#pragma once

#include <functional>

#include "hilma/types.hpp"

namespace testsupport {

struct NelderMeadOptions {
  int max_iters = 20000;
  double tol = 1e-12;        // simplex value spread at which to stop
  double initial_step = 0.25;
};

struct NelderMeadResult {
  hilma::Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Derivative-free maximization (Nelder-Mead on -f). Used only as an
// independent oracle in tests; deliberately shares no code with the library
// solvers.
NelderMeadResult nelder_mead_maximize(
    const std::function<double(const hilma::Vector&)>& f, hilma::Vector start,
    const NelderMeadOptions& options = {});

}  // namespace testsupport
