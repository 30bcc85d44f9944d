#pragma once

#include <Eigen/Dense>

namespace hilma {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace hilma
