#include "hilma/em.hpp"

#include <string>
#include <vector>

#include "hilma/errors.hpp"

namespace hilma {

EMResult em_fit(const ModelSpec& model, const Dataset& data, const Vector& init,
                const EMOptions& options) {
  if (!model.em_step) {
    throw UnsupportedError("model '" + model.tag + "' registers no EM step");
  }
  if (model.validate_data) model.validate_data(data);
  check_params(model, init);

  EMResult result;
  result.psi_hat = init;
  for (int iter = 1; iter <= options.max_iters; ++iter) {
    const Vector next = model.em_step(result.psi_hat, data);
    const double change = (next - result.psi_hat).cwiseAbs().maxCoeff();
    result.psi_hat = next;
    result.iterations = iter;
    if (change <= options.tol) return result;
  }
  throw ConvergenceError(
      "EM did not reach a fixed point in " + std::to_string(options.max_iters) +
          " sweeps",
      std::vector<double>(result.psi_hat.data(),
                          result.psi_hat.data() + result.psi_hat.size()),
      0.0);
}

EMResult em_fit(const ModelSpec& model, const Dataset& data,
                const EMOptions& options) {
  if (!model.complete_case_init) {
    throw UsageError("model '" + model.tag +
                     "' has no complete-case initializer; pass an explicit "
                     "starting point");
  }
  return em_fit(model, data, model.complete_case_init(data), options);
}

}  // namespace hilma
