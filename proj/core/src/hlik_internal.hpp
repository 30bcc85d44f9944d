#pragma once

#include <cmath>
#include <limits>

namespace hilma {
namespace detail {

// Relative finite-difference step constants shared by the evaluation layer.
inline const double kStepCentralRel =
    std::cbrt(std::numeric_limits<double>::epsilon());
inline const double kStepCentral4Rel =
    std::pow(std::numeric_limits<double>::epsilon(), 0.2);
inline const double kStepHessianRel =
    std::pow(std::numeric_limits<double>::epsilon(), 0.25);

}  // namespace detail
}  // namespace hilma
