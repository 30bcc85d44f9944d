#include "hilma/rng.hpp"

#include <cmath>

#include "hilma/stats.hpp"

namespace hilma {

double Rng::normal(double mean, double sd) {
  return mean + sd * norm_quantile(uniform());
}

}  // namespace hilma
