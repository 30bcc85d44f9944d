#include "hilma/laplace.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "hilma/errors.hpp"
#include "hilma/hlik.hpp"
#include "hilma/inference.hpp"
#include "hilma/numdiff.hpp"
#include "hilma/rng.hpp"
#include "hilma/stats.hpp"
#include "hlik_internal.hpp"

namespace hilma {

namespace {

const double kLog2Pi = 2.0 * kLogSqrt2Pi;

double sup_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// The model viewed through the b-scale. Primary-scale shortcuts are dropped
// unless the b-scale *is* the primary scale; natural-scale derivative hooks
// (grad_y / hess_y_diag) remain valid on any scale and are kept.
ModelSpec with_b_scale(const ModelSpec& model, const ScaleTransform& b_scale) {
  ModelSpec mb = model;
  const bool same_scale = model.scale.name == b_scale.name &&
                          model.scale.kind == b_scale.kind;
  mb.scale = b_scale;
  if (!same_scale) {
    mb.h_gradient = nullptr;
    mb.default_v_init = nullptr;
  }
  mb.v_bounds = nullptr;  // b-scales map the support onto all of R^m
  return mb;
}

// Inner mode on the b-scale. The closed-form canonical function gives the
// natural-scale mode directly whenever the model's canonical scale is a
// per-coordinate linear function of b (true for every bundled model); the
// gradient check below catches any model where that premise fails and falls
// back to a Newton solve.
Vector b_mode(const ModelSpec& mb, const Vector& psi, const Dataset& data,
              const SolveOptions& opts) {
  const int m = mb.random_dimension(data);
  if (m == 0) return Vector(0);
  Vector start;
  if (mb.canonical_function) {
    start = mb.scale.forward(psi, data, mb.canonical_function(psi, data));
    const Vector g = detail::hlik_grad_v(mb, psi, start, data);
    if (sup_norm(g) <= opts.grad_tol) return start;
  } else if (mb.default_v_init) {
    start = mb.default_v_init(psi, data);
  } else {
    start = Vector::Zero(m);
  }
  return inner_mode(mb, psi, data, start, opts);
}

struct Omega {
  bool diagonal = true;
  Vector b_tilde;
  Vector diag;
  Matrix dense;
  double log_det = 0.0;
};

Omega omega_at(const ModelSpec& mb, const Vector& psi, const Dataset& data,
               const SolveOptions& opts) {
  Omega om;
  om.diagonal = mb.vv_structure == VvStructure::diagonal;
  om.b_tilde = b_mode(mb, psi, data, opts);
  const int m = static_cast<int>(om.b_tilde.size());
  if (m == 0) {
    om.diag = Vector(0);
    return om;
  }
  if (om.diagonal) {
    om.diag = -detail::hlik_hess_v_diag(mb, psi, om.b_tilde, data);
    if (!(om.diag.array() > 0.0).all()) {
      throw CurvatureError(
          "curvature at the inner b-mode is not positive definite");
    }
    om.log_det = om.diag.array().log().sum();
  } else {
    om.dense = -numdiff::hessian(
        [&](const Vector& b) { return detail::hlik_value(mb, psi, b, data); },
        om.b_tilde, /*richardson=*/true);
    om.dense = 0.5 * (om.dense + om.dense.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(om.dense);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw CurvatureError(
          "curvature at the inner b-mode is not positive definite");
    }
    om.log_det = es.eigenvalues().array().log().sum();
  }
  return om;
}

Matrix spectral_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw CurvatureError("matrix square root of a non-positive matrix");
  }
  return es.eigenvectors() *
         es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

WeakCanonicalScale make_weak_canonical(const ModelSpec& model,
                                       const ScaleTransform& b_scale) {
  auto mb = std::make_shared<const ModelSpec>(with_b_scale(model, b_scale));
  auto base = std::make_shared<const ScaleTransform>(b_scale);
  const SolveOptions inner_opts;

  WeakCanonicalScale out;
  out.base_scale = b_scale;
  out.omega_sqrt = [mb, inner_opts](const Vector& psi,
                                    const Dataset& data) -> Matrix {
    const Omega om = omega_at(*mb, psi, data, inner_opts);
    if (om.diagonal) return Matrix(om.diag.cwiseSqrt().asDiagonal());
    return spectral_sqrt(om.dense);
  };

  ScaleTransform w;
  w.kind = ScaleKind::weak_canonical;
  w.name = "weak_canonical(" + b_scale.name + ")";
  w.forward = [mb, base, inner_opts](const Vector& psi, const Dataset& data,
                                     const Vector& y) -> Vector {
    const Omega om = omega_at(*mb, psi, data, inner_opts);
    const Vector b = base->forward(psi, data, y);
    if (om.diagonal) return om.diag.cwiseSqrt().cwiseProduct(b);
    return spectral_sqrt(om.dense) * b;
  };
  w.inverse = [mb, base, inner_opts](const Vector& psi, const Dataset& data,
                                     const Vector& wv) -> Vector {
    const Omega om = omega_at(*mb, psi, data, inner_opts);
    Vector b;
    if (om.diagonal) {
      b = wv.cwiseQuotient(om.diag.cwiseSqrt());
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> es(om.dense);
      b = es.eigenvectors() *
          es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
          es.eigenvectors().transpose() * wv;
    }
    return base->inverse(psi, data, b);
  };
  w.log_jacobian = [mb, base, inner_opts](const Vector& psi, const Dataset& data,
                                          const Vector& y) -> double {
    const Omega om = omega_at(*mb, psi, data, inner_opts);
    return base->log_jacobian(psi, data, y) - 0.5 * om.log_det;
  };

  if (mb->vv_structure == VvStructure::diagonal &&
      base->has_analytic_derivatives()) {
    w.dy_dv = [mb, base, inner_opts](const Vector& psi, const Dataset& data,
                                     const Vector& wv) -> Vector {
      const Omega om = omega_at(*mb, psi, data, inner_opts);
      const Vector r = om.diag.cwiseSqrt();
      return base->dy_dv(psi, data, wv.cwiseQuotient(r)).cwiseQuotient(r);
    };
    w.d2y_dv2 = [mb, base, inner_opts](const Vector& psi, const Dataset& data,
                                       const Vector& wv) -> Vector {
      const Omega om = omega_at(*mb, psi, data, inner_opts);
      const Vector r = om.diag.cwiseSqrt();
      return base->d2y_dv2(psi, data, wv.cwiseQuotient(r))
          .cwiseQuotient(om.diag);
    };
    w.dlogjac_dv = [mb, base, inner_opts](const Vector& psi, const Dataset& data,
                                          const Vector& wv) -> Vector {
      const Omega om = omega_at(*mb, psi, data, inner_opts);
      const Vector r = om.diag.cwiseSqrt();
      return base->dlogjac_dv(psi, data, wv.cwiseQuotient(r)).cwiseQuotient(r);
    };
    w.d2logjac_dv2 = [mb, base, inner_opts](const Vector& psi,
                                            const Dataset& data,
                                            const Vector& wv) -> Vector {
      const Omega om = omega_at(*mb, psi, data, inner_opts);
      const Vector r = om.diag.cwiseSqrt();
      return base->d2logjac_dv2(psi, data, wv.cwiseQuotient(r))
          .cwiseQuotient(om.diag);
    };
  }
  out.composed = w;
  return out;
}

ModelSpec weak_canonical_model(const ModelSpec& model,
                               const ScaleTransform& b_scale) {
  ModelSpec wm = model;
  wm.scale = make_weak_canonical(model, b_scale).composed;
  wm.h_gradient = nullptr;
  wm.v_bounds = nullptr;
  wm.default_v_init = nullptr;
  return wm;
}

double laplace_marginal(const ModelSpec& model, const Vector& psi,
                        const Dataset& data, const ScaleTransform& b_scale,
                        const SolveOptions& opts) {
  check_params(model, psi);
  const ModelSpec mb = with_b_scale(model, b_scale);
  const Omega om = omega_at(mb, psi, data, opts);
  const int m = static_cast<int>(om.b_tilde.size());
  const double h_at_mode = detail::hlik_value(mb, psi, om.b_tilde, data);
  return h_at_mode + 0.5 * m * kLog2Pi - 0.5 * om.log_det;
}

std::pair<Vector, Matrix> laplace_score_hessian(const ModelSpec& model,
                                                const Vector& psi,
                                                const Dataset& data,
                                                const ScaleTransform& b_scale,
                                                const SolveOptions& opts) {
  check_params(model, psi);
  const ModelSpec mb = with_b_scale(model, b_scale);
  const int p = model.param_dim;
  const int m = mb.random_dimension(data);

  const Vector b_tilde = b_mode(mb, psi, data, opts);
  const HessianBlocks blocks =
      hessian_blocks_at(mb, psi, b_tilde, data, BlockScale::v);

  Vector score = detail::hlik_grad_psi(mb, psi, b_tilde, data);
  Matrix neghess = blocks.psi_psi;
  if (m > 0) {
    if (!blocks.vv_positive_definite()) {
      throw CurvatureError(
          "curvature at the inner b-mode is not positive definite");
    }
    neghess -= blocks.psi_v * blocks.vv_solve(blocks.psi_v.transpose());
  }
  if (m == 0) return {score, neghess};

  const Vector steps1 = detail::psi_fd_steps(model, psi, detail::kStepCentralRel);
  const Vector steps2 = detail::psi_fd_steps(model, psi, detail::kStepHessianRel);

  if (mb.vv_structure == VvStructure::diagonal) {
    const auto omega_fn = [&](const Vector& ps) -> Vector {
      const Vector bt = b_mode(mb, ps, data, opts);
      return -detail::hlik_hess_v_diag(mb, ps, bt, data);
    };
    const Vector om0 = blocks.vv_diag;

    std::vector<Vector> d_om(p);
    for (int j = 0; j < p; ++j) {
      Vector hi = psi, lo = psi;
      hi[j] += steps1[j];
      lo[j] -= steps1[j];
      d_om[j] = (omega_fn(hi) - omega_fn(lo)) / (2.0 * steps1[j]);
      score[j] -= 0.5 * (d_om[j].array() / om0.array()).sum();
    }
    for (int j = 0; j < p; ++j) {
      for (int k = j; k < p; ++k) {
        Vector d2;
        if (j == k) {
          Vector hi = psi, lo = psi;
          hi[j] += steps2[j];
          lo[j] -= steps2[j];
          d2 = (omega_fn(hi) - 2.0 * om0 + omega_fn(lo)) / (steps2[j] * steps2[j]);
        } else {
          Vector pp = psi, pm = psi, mp = psi, mm = psi;
          pp[j] += steps2[j];
          pp[k] += steps2[k];
          pm[j] += steps2[j];
          pm[k] -= steps2[k];
          mp[j] -= steps2[j];
          mp[k] += steps2[k];
          mm[j] -= steps2[j];
          mm[k] -= steps2[k];
          d2 = (omega_fn(pp) - omega_fn(pm) - omega_fn(mp) + omega_fn(mm)) /
               (4.0 * steps2[j] * steps2[k]);
        }
        const double tr = 0.5 * ((d2.array() / om0.array()) -
                                 (d_om[j].array() * d_om[k].array() /
                                  (om0.array() * om0.array())))
                                    .sum();
        neghess(j, k) += tr;
        if (k != j) neghess(k, j) += tr;
      }
    }
  } else {
    const auto omega_fn = [&](const Vector& ps) -> Matrix {
      const Vector bt = b_mode(mb, ps, data, opts);
      Matrix h = -numdiff::hessian(
          [&](const Vector& b) { return detail::hlik_value(mb, ps, b, data); },
          bt, /*richardson=*/true);
      return 0.5 * (h + h.transpose());
    };
    const Matrix om0 = blocks.vv_dense;
    Eigen::LLT<Matrix> llt(om0);
    if (llt.info() != Eigen::Success) {
      throw CurvatureError(
          "curvature at the inner b-mode is not positive definite");
    }
    std::vector<Matrix> d_om(p);
    for (int j = 0; j < p; ++j) {
      Vector hi = psi, lo = psi;
      hi[j] += steps1[j];
      lo[j] -= steps1[j];
      d_om[j] = (omega_fn(hi) - omega_fn(lo)) / (2.0 * steps1[j]);
      score[j] -= 0.5 * llt.solve(d_om[j]).trace();
    }
    for (int j = 0; j < p; ++j) {
      for (int k = j; k < p; ++k) {
        Matrix d2;
        if (j == k) {
          Vector hi = psi, lo = psi;
          hi[j] += steps2[j];
          lo[j] -= steps2[j];
          d2 = (omega_fn(hi) - 2.0 * om0 + omega_fn(lo)) / (steps2[j] * steps2[j]);
        } else {
          Vector pp = psi, pm = psi, mp = psi, mm = psi;
          pp[j] += steps2[j];
          pp[k] += steps2[k];
          pm[j] += steps2[j];
          pm[k] -= steps2[k];
          mp[j] -= steps2[j];
          mp[k] += steps2[k];
          mm[j] -= steps2[j];
          mm[k] -= steps2[k];
          d2 = (omega_fn(pp) - omega_fn(pm) - omega_fn(mp) + omega_fn(mm)) /
               (4.0 * steps2[j] * steps2[k]);
        }
        const double tr = 0.5 * (llt.solve(d2).trace() -
                                 (llt.solve(d_om[j]) * llt.solve(d_om[k])).trace());
        neghess(j, k) += tr;
        if (k != j) neghess(k, j) += tr;
      }
    }
  }
  return {score, neghess};
}

FitResult approx_mle(const ModelSpec& model, const Dataset& data,
                     const ScaleTransform& b_scale, const SolveOptions& opts) {
  const ModelSpec wm = weak_canonical_model(model, b_scale);
  FitResult fit = joint_maximize(wm, data, opts);

  // Newton polish on the approximate-likelihood score itself, so the
  // reported solution zeros that score rather than merely the joint one.
  Vector psi = fit.psi_hat;
  Vector score;
  Matrix info;
  std::tie(score, info) = laplace_score_hessian(model, psi, data, b_scale, opts);
  double snorm = sup_norm(score);
  int polish = 0;
  while (snorm > 0.5 * opts.grad_tol && polish < 8) {
    Eigen::LLT<Matrix> llt(info);
    if (llt.info() != Eigen::Success) break;
    const Vector step = llt.solve(score);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      const Vector cand = psi + t * step;
      try {
        check_params(model, cand);
        Vector s2;
        Matrix h2;
        std::tie(s2, h2) = laplace_score_hessian(model, cand, data, b_scale, opts);
        if (sup_norm(s2) < snorm) {
          psi = cand;
          score = s2;
          info = h2;
          snorm = sup_norm(s2);
          accepted = true;
          break;
        }
      } catch (const Error&) {
        // out-of-domain trial: shrink
      }
      t *= 0.5;
    }
    if (!accepted) break;
    ++polish;
  }

  if (polish > 0) {
    fit.psi_hat = psi;
    fit.v_hat = inner_mode(wm, psi, data, fit.v_hat, opts);
    fit.y_mis_hat = wm.scale.inverse(psi, data, fit.v_hat);
    fit.h_value = detail::hlik_value(wm, psi, fit.v_hat, data);
    fit.iterations += polish;
    if (opts.compute_blocks) {
      try {
        fit.blocks = hessian_blocks_at(wm, psi, fit.v_hat, data, BlockScale::v);
      } catch (const Error&) {
        fit.blocks.reset();
      }
    }
  }
  return fit;
}

BartlettCheckResult bartlett_check(const ModelSpec& model,
                                   const Vector& psi_true,
                                   const ScaleTransform& b_scale, int n,
                                   int n_draws, std::uint64_t seed) {
  if (!model.simulate) {
    throw UnsupportedError("model '" + model.tag +
                           "' does not support simulation");
  }
  if (n_draws < 1000) {
    throw UsageError("bartlett_check needs at least 1000 draws, got " +
                     std::to_string(n_draws));
  }
  check_params(model, psi_true);
  const ModelSpec mb = with_b_scale(model, b_scale);
  const int p = model.param_dim;
  const int dim = p + 1;

  Vector sum_s = Vector::Zero(dim);
  Vector sum_s2 = Vector::Zero(dim);
  Matrix sum_m = Matrix::Zero(dim, dim);
  Matrix sum_m2 = Matrix::Zero(dim, dim);

  for (int d = 0; d < n_draws; ++d) {
    const SimulatedData sim = model.simulate(
        psi_true, model.default_mechanism, n,
        derive_stream(seed, static_cast<std::uint64_t>(d)));
    const Dataset& data = sim.data;
    const int m = mb.random_dimension(data);
    const Vector b =
        m > 0 ? mb.scale.forward(psi_true, data, sim.y_mis_true) : Vector(0);

    Vector s(dim);
    s.head(p) = detail::hlik_grad_psi(mb, psi_true, b, data);
    s[p] = m > 0 ? detail::hlik_grad_v(mb, psi_true, b, data).sum() : 0.0;

    const HessianBlocks blk =
        hessian_blocks_at(mb, psi_true, b, data, BlockScale::v);
    Matrix hess(dim, dim);
    hess.topLeftCorner(p, p) = -blk.psi_psi;
    const Vector hpb =
        m > 0 ? Vector(-blk.psi_v.rowwise().sum()) : Vector(Vector::Zero(p));
    hess.block(0, p, p, 1) = hpb;
    hess.block(p, 0, 1, p) = hpb.transpose();
    hess(p, p) = m == 0 ? 0.0
                        : (blk.structure == VvStructure::diagonal
                               ? -blk.vv_diag.sum()
                               : -blk.vv_dense.sum());

    const Matrix contrib = s * s.transpose() + hess;
    sum_s += s;
    sum_s2 += s.cwiseProduct(s);
    sum_m += contrib;
    sum_m2 += contrib.cwiseProduct(contrib);
  }

  const double nd = static_cast<double>(n_draws);
  BartlettCheckResult out;
  out.n_draws = n_draws;
  out.score_mean = sum_s / nd;
  out.score_mean_se =
      ((sum_s2 / nd - out.score_mean.cwiseProduct(out.score_mean))
           .cwiseMax(0.0) / nd)
          .cwiseSqrt();
  out.second_identity_residual = sum_m / nd;
  out.second_identity_se =
      ((sum_m2 / nd -
        out.second_identity_residual.cwiseProduct(out.second_identity_residual))
           .cwiseMax(0.0) / nd)
          .cwiseSqrt();
  return out;
}

}  // namespace hilma
