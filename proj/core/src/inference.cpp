#include "hilma/inference.hpp"

#include <cmath>
#include <string>

#include "hilma/errors.hpp"
#include "hilma/hlik.hpp"
#include "hilma/numdiff.hpp"
#include "hlik_internal.hpp"

namespace hilma {

Matrix HessianBlocks::vv_matrix() const {
  if (structure == VvStructure::diagonal) {
    return Matrix(vv_diag.asDiagonal());
  }
  return vv_dense;
}

bool HessianBlocks::vv_positive_definite() const {
  if (structure == VvStructure::diagonal) {
    return (vv_diag.array() > 0.0).all();
  }
  if (vv_dense.rows() == 0) return true;
  Eigen::LLT<Matrix> llt(vv_dense);
  return llt.info() == Eigen::Success;
}

Matrix HessianBlocks::vv_solve(const Matrix& B) const {
  if (structure == VvStructure::diagonal) {
    if ((vv_diag.array() == 0.0).any()) {
      throw RankError("random-parameter information block is singular");
    }
    return vv_diag.cwiseInverse().asDiagonal() * B;
  }
  Eigen::LLT<Matrix> llt(vv_dense);
  if (llt.info() != Eigen::Success) {
    throw CurvatureError(
        "random-parameter information block is not positive definite");
  }
  return llt.solve(B);
}

namespace {

// Natural-scale derivative helpers for BlockScale::y_mis. The log-Jacobian
// term's y-derivatives are recovered from the scale's v-parameterized hooks:
// with y(v) and per-coordinate Jacobian term lam(v),
//   d lam/dy = lam' / y',   d2 lam/dy2 = lam''/y'^2 - lam' y''/y'^3.
bool has_analytic_y_path(const ModelSpec& model) {
  return static_cast<bool>(model.grad_y) && static_cast<bool>(model.hess_y_diag) &&
         model.scale.has_analytic_derivatives();
}

Vector grad_y_of_h(const ModelSpec& model, const Vector& psi, const Vector& y,
                   const Dataset& data) {
  const Vector v = model.scale.forward(psi, data, y);
  const Vector gy = model.grad_y(psi, y, data);
  const Vector dy = model.scale.dy_dv(psi, data, v);
  const Vector dlj = model.scale.dlogjac_dv(psi, data, v);
  return (gy.array() + dlj.array() / dy.array()).matrix();
}

Vector hess_y_of_h_diag(const ModelSpec& model, const Vector& psi, const Vector& y,
                        const Dataset& data) {
  const Vector v = model.scale.forward(psi, data, y);
  const Vector hyy = model.hess_y_diag(psi, y, data);
  const Vector dy = model.scale.dy_dv(psi, data, v);
  const Vector d2y = model.scale.d2y_dv2(psi, data, v);
  const Vector dlj = model.scale.dlogjac_dv(psi, data, v);
  const Vector d2lj = model.scale.d2logjac_dv2(psi, data, v);
  const auto yp = dy.array();
  return (hyy.array() + d2lj.array() / (yp * yp) -
          dlj.array() * d2y.array() / (yp * yp * yp))
      .matrix();
}

}  // namespace

HessianBlocks hessian_blocks_at(const ModelSpec& model, const Vector& psi,
                                const Vector& point, const Dataset& data,
                                BlockScale scale) {
  check_params(model, psi);
  const int p = model.param_dim;
  const int m = static_cast<int>(point.size());

  HessianBlocks out;
  out.at_psi = psi;
  out.at_point = point;
  out.scale_tag = scale;
  out.structure = model.vv_structure;

  const Vector psi_steps4 =
      detail::psi_fd_steps(model, psi, detail::kStepCentral4Rel);
  const Vector psi_steps_h =
      detail::psi_fd_steps(model, psi, detail::kStepHessianRel);

  const auto value_at = [&](const Vector& p_, const Vector& q_) {
    return scale == BlockScale::v ? detail::hlik_value(model, p_, q_, data)
                                  : hlik_in_y(model, p_, q_, data);
  };

  // ---- psi_psi ----
  const bool joint_grad = scale == BlockScale::v && model.h_gradient;
  if (joint_grad) {
    // one fourth-order Jacobian sweep of the analytic joint gradient
    Matrix J = numdiff::jacobian_central4(
        [&](const Vector& p_) {
          Vector gp, gv;
          model.h_gradient(p_, point, data, gp, gv);
          Vector g(p + m);
          g.head(p) = gp;
          g.tail(m) = gv;
          return g;
        },
        psi, p + m, psi_steps4);
    Matrix ipp = -J.topRows(p);
    out.psi_psi = 0.5 * (ipp + ipp.transpose());
    out.psi_v = -J.bottomRows(m).transpose();
  } else {
    out.psi_psi = -numdiff::hessian(
        [&](const Vector& p_) { return value_at(p_, point); }, psi,
        /*richardson=*/true, psi_steps_h);

    const bool grad_path = scale == BlockScale::v
                               ? detail::has_analytic_v_path(model)
                               : has_analytic_y_path(model);
    if (grad_path && m > 0) {
      Matrix J = numdiff::jacobian_central4(
          [&](const Vector& p_) {
            return scale == BlockScale::v
                       ? detail::hlik_grad_v(model, p_, point, data)
                       : grad_y_of_h(model, p_, point, data);
          },
          psi, m, psi_steps4);
      out.psi_v = -J.transpose();
    } else if (m > 0) {
      // cross second differences of h itself over the joint vector (psi, q)
      Vector joint(p + m);
      joint.head(p) = psi;
      joint.tail(m) = point;
      Vector steps(p + m);
      steps.head(p) = psi_steps_h;
      for (int i = 0; i < m; ++i) {
        steps[p + i] = numdiff::step_hessian(point[i]);
      }
      std::vector<int> rows(p), cols(m);
      for (int i = 0; i < p; ++i) rows[i] = i;
      for (int i = 0; i < m; ++i) cols[i] = p + i;
      out.psi_v = -numdiff::hessian_cross(
          [&](const Vector& x) {
            return value_at(x.head(p), x.tail(m));
          },
          joint, rows, cols, /*richardson=*/true, steps);
    } else {
      out.psi_v = Matrix(p, 0);
    }
  }
  if (joint_grad && out.psi_v.size() == 0) out.psi_v = Matrix(p, 0);

  // ---- vv ----
  if (model.vv_structure == VvStructure::diagonal) {
    if (m == 0) {
      out.vv_diag = Vector(0);
    } else if (scale == BlockScale::v) {
      out.vv_diag = -detail::hlik_hess_v_diag(model, psi, point, data);
    } else if (has_analytic_y_path(model)) {
      out.vv_diag = -hess_y_of_h_diag(model, psi, point, data);
    } else {
      out.vv_diag = -numdiff::hessian_diag(
          [&](const Vector& q_) { return value_at(psi, q_); }, point,
          /*richardson=*/true);
    }
  } else {
    out.vv_dense = -numdiff::hessian(
        [&](const Vector& q_) { return value_at(psi, q_); }, point,
        /*richardson=*/true);
  }
  return out;
}

Matrix var_fixed(const HessianBlocks& blocks) {
  const int p = static_cast<int>(blocks.psi_psi.rows());
  Matrix schur = blocks.psi_psi;
  if (blocks.m() > 0) {
    if (!blocks.vv_positive_definite()) {
      throw CurvatureError(
          "random-parameter information block is not positive definite at the "
          "evaluation point; refusing to build variances from shifted curvature");
    }
    schur -= blocks.psi_v * blocks.vv_solve(blocks.psi_v.transpose());
  }
  Eigen::LLT<Matrix> llt(schur);
  if (llt.info() != Eigen::Success) {
    throw RankError(
        "profile information (Schur complement) is singular or indefinite");
  }
  return llt.solve(Matrix::Identity(p, p));
}

Matrix dtilde_v_dpsi(const HessianBlocks& blocks) {
  if (blocks.m() == 0) {
    return Matrix(blocks.psi_psi.rows(), 0);
  }
  if (!blocks.vv_positive_definite()) {
    throw CurvatureError(
        "random-parameter information block is not positive definite");
  }
  return -blocks.vv_solve(blocks.psi_v.transpose()).transpose();
}

VarianceReport var_random(const HessianBlocks& y_blocks, const Matrix& var_psi,
                          double level) {
  if (y_blocks.scale_tag != BlockScale::y_mis) {
    throw UsageError(
        "var_random requires blocks on the natural y_mis scale "
        "(BlockScale::y_mis)");
  }
  const int m = y_blocks.m();
  if (!y_blocks.vv_positive_definite()) {
    throw CurvatureError(
        "random-parameter information block is not positive definite");
  }
  VarianceReport rep;
  rep.var_psi = var_psi;
  rep.level = level;
  rep.y_hat = y_blocks.at_point;
  // A = yy^{-1} * y_psi  (m x p)
  const Matrix A = y_blocks.vv_solve(y_blocks.psi_v.transpose());
  rep.var_y_estimation = A * var_psi * A.transpose();
  rep.var_y_prediction =
      rep.var_y_estimation + y_blocks.vv_solve(Matrix::Identity(m, m));
  const double z = interval_critical_value(level);
  rep.intervals.resize(m);
  for (int i = 0; i < m; ++i) {
    const double var_ii = rep.var_y_prediction(i, i);
    if (var_ii < 0.0) {
      throw CurvatureError("negative prediction variance for coordinate " +
                           std::to_string(i));
    }
    const double half = z * std::sqrt(var_ii);
    rep.intervals[i] = {rep.y_hat[i] - half, rep.y_hat[i] + half};
  }
  return rep;
}

}  // namespace hilma
