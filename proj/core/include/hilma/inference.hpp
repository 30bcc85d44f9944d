#pragma once

#include <vector>

#include "hilma/dataset.hpp"
#include "hilma/model.hpp"
#include "hilma/stats.hpp"
#include "hilma/types.hpp"

namespace hilma {

enum class BlockScale { v, y_mis };

// Negated second-derivative blocks of the h-likelihood at an evaluation
// point, i.e. observed-information blocks over (psi, v) or (psi, y_mis):
//
//   psi_psi = -d2h/dpsi dpsi'   (p x p)
//   psi_v   = -d2h/dpsi dv'     (p x m)
//   vv      = -d2h/dv dv'       (m x m, diagonal for the bundled models)
//
// Blocks are honest curvature: nothing here is ever Levenberg-shifted, and
// downstream variance routines refuse indefinite random blocks outright.
struct HessianBlocks {
  Matrix psi_psi;
  Matrix psi_v;
  VvStructure structure = VvStructure::diagonal;
  Vector vv_diag;    // structure == diagonal
  Matrix vv_dense;   // structure == dense
  Vector at_psi;
  Vector at_point;   // v or y_mis, per scale_tag
  BlockScale scale_tag = BlockScale::v;

  int m() const {
    return structure == VvStructure::diagonal ? static_cast<int>(vv_diag.size())
                                              : static_cast<int>(vv_dense.rows());
  }
  Matrix vv_matrix() const;
  bool vv_positive_definite() const;
  // Solves vv * X = B (Cholesky per block; diagonal fast path).
  Matrix vv_solve(const Matrix& B) const;
};

// Observed-information blocks of the h-likelihood at (psi, point).
// scale == BlockScale::v differentiates h(psi, v) on the model's working
// scale; scale == BlockScale::y_mis differentiates h(psi, y_mis) in natural
// coordinates (the form the random-parameter variance decomposition needs).
// Analytic gradients are finite-differenced once when available; otherwise
// second central differences with Richardson refinement are used.
HessianBlocks hessian_blocks_at(const ModelSpec& model, const Vector& psi,
                                const Vector& point, const Dataset& data,
                                BlockScale scale);

// Variance of the fixed-parameter estimate: the inverse of the profile
// (Schur-complement) information  psi_psi - psi_v * vv^{-1} * psi_v'.
// Throws CurvatureError if vv is not positive definite and RankError if the
// complement is singular.
Matrix var_fixed(const HessianBlocks& blocks);

// Sensitivity of the random-parameter mode to the fixed parameters:
// d vtilde' / d psi = -psi_v * vv^{-1}   (p x m).
Matrix dtilde_v_dpsi(const HessianBlocks& blocks);

struct PredictiveInterval {
  double lower = 0.0;
  double upper = 0.0;
};

struct VarianceReport {
  Matrix var_psi;
  Matrix var_y_estimation;  // propagated fixed-parameter uncertainty
  Matrix var_y_prediction;  // estimation + residual randomness
  Vector y_hat;
  std::vector<PredictiveInterval> intervals;
  double level = 0.95;
};

// Random-parameter variance decomposition at natural scale:
//   var_est  = yy^{-1} * y_psi * var_psi * psi_y * yy^{-1}
//   var_pred = var_est + yy^{-1}
// with central predictive intervals y_hat[i] +/- z * sqrt(var_pred[i,i]).
// Requires blocks computed with BlockScale::y_mis.
VarianceReport var_random(const HessianBlocks& y_blocks, const Matrix& var_psi,
                          double level = 0.95);

}  // namespace hilma
