#include "hilma/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hilma/errors.hpp"
#include "hilma/hlik.hpp"
#include "hilma/numdiff.hpp"
#include "hilma/rng.hpp"
#include "hlik_internal.hpp"

namespace hilma {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEtaBox = 50.0;  // |log psi| beyond this is a boundary escape

std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// ---- natural <-> unconstrained parameterization -------------------------

Vector to_eta(const ModelSpec& model, const Vector& psi) {
  Vector eta = psi;
  for (int i = 0; i < psi.size(); ++i) {
    if (model.param_domain[i] == ParamDomain::positive) eta[i] = std::log(psi[i]);
  }
  return eta;
}

Vector to_psi(const ModelSpec& model, const Vector& eta) {
  Vector psi = eta;
  for (int i = 0; i < eta.size(); ++i) {
    if (model.param_domain[i] == ParamDomain::positive) psi[i] = std::exp(eta[i]);
  }
  return psi;
}

Vector dpsi_deta(const ModelSpec& model, const Vector& eta) {
  Vector d = Vector::Ones(eta.size());
  for (int i = 0; i < eta.size(); ++i) {
    if (model.param_domain[i] == ParamDomain::positive) d[i] = std::exp(eta[i]);
  }
  return d;
}

// ---- support bounds on the v scale ---------------------------------------

struct VBounds {
  Vector lo, hi;
  bool any = false;
};

VBounds v_bounds_of(const ModelSpec& model, const Vector& psi, const Dataset& data,
                    int m) {
  VBounds b;
  b.lo = Vector::Constant(m, -kInf);
  b.hi = Vector::Constant(m, kInf);
  if (model.v_bounds) {
    model.v_bounds(psi, data, b.lo, b.hi);
    b.any = (b.lo.array() > -kInf).any() || (b.hi.array() < kInf).any();
  }
  return b;
}

Vector clamp_to(const Vector& v, const VBounds& b) {
  if (!b.any) return v;
  return v.cwiseMax(b.lo).cwiseMin(b.hi);
}

// KKT-projected gradient for maximization over a box: ascent components that
// point out of the feasible set at an active bound are zeroed.
Vector projected_gradient(const Vector& g, const Vector& v, const VBounds& b) {
  if (!b.any) return g;
  Vector pg = g;
  for (int i = 0; i < g.size(); ++i) {
    if (v[i] <= b.lo[i] && g[i] < 0.0) pg[i] = 0.0;
    if (v[i] >= b.hi[i] && g[i] > 0.0) pg[i] = 0.0;
  }
  return pg;
}

std::vector<int> active_set(const Vector& v, const VBounds& b) {
  std::vector<int> act;
  if (!b.any) return act;
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] <= b.lo[i] || v[i] >= b.hi[i]) act.push_back(i);
  }
  return act;
}

double sup_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

Vector default_inner_start(const ModelSpec& model, const Vector& psi,
                           const Dataset& data, int m) {
  if (model.default_v_init) return model.default_v_init(psi, data);
  if (model.canonical_function) {
    return model.scale.forward(psi, data, model.canonical_function(psi, data));
  }
  return Vector::Zero(m);
}

// Newton direction from a (possibly indefinite) diagonal curvature: solve
// (-H + shift) d = g with the smallest shift making the system positive.
Vector newton_direction_diag(const Vector& g, const Vector& hess_diag) {
  Vector neg = -hess_diag;
  const double scale = std::max(1.0, sup_norm(neg));
  const double floor_val = 1e-8 * scale;
  double shift = 0.0;
  const double mn = neg.size() ? neg.minCoeff() : 0.0;
  if (mn < floor_val) shift = floor_val - mn;
  return (g.array() / (neg.array() + shift)).matrix();
}

Vector newton_direction_dense(const Vector& g, const Matrix& hess) {
  Matrix A = -hess;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  double tau = 0.0;
  for (int tries = 0; tries < 60; ++tries) {
    Eigen::LLT<Matrix> llt(A + tau * Matrix::Identity(A.rows(), A.cols()));
    if (llt.info() == Eigen::Success) return llt.solve(g);
    tau = tau == 0.0 ? 1e-10 * scale : 10.0 * tau;
  }
  throw RankError("could not regularize the inner Newton system");
}

double try_value(const ModelSpec& model, const Vector& psi, const Vector& v,
                 const Dataset& data) {
  try {
    const double f = detail::hlik_value(model, psi, v, data);
    return std::isfinite(f) ? f : -kInf;
  } catch (const DomainError&) {
    return -kInf;
  }
}

}  // namespace

Vector inner_mode(const ModelSpec& model, const Vector& psi, const Dataset& data,
                  const Vector& init_v, const SolveOptions& opts) {
  check_params(model, psi);
  const int m = model.random_dimension(data);
  if (init_v.size() != m) {
    throw UsageError("inner_mode: init has length " +
                     std::to_string(init_v.size()) + ", expected " +
                     std::to_string(m));
  }
  if (m == 0) return Vector(0);

  const VBounds bounds = v_bounds_of(model, psi, data, m);
  Vector v = clamp_to(init_v, bounds);
  double fv = detail::hlik_value(model, psi, v, data);
  if (!std::isfinite(fv)) {
    throw DomainError("inner_mode: starting point has non-finite h value");
  }

  Vector g = detail::hlik_grad_v(model, psi, v, data);
  for (int iter = 0; iter < opts.max_inner_iters; ++iter) {
    const Vector pg = projected_gradient(g, v, bounds);
    if (sup_norm(pg) <= opts.grad_tol) return v;

    Vector d;
    if (model.vv_structure == VvStructure::diagonal) {
      d = newton_direction_diag(g, detail::hlik_hess_v_diag(model, psi, v, data));
    } else {
      const Matrix H = numdiff::hessian(
          [&](const Vector& vv) { return detail::hlik_value(model, psi, vv, data); },
          v);
      d = newton_direction_dense(g, H);
    }

    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vector cand = clamp_to(v + t * d, bounds);
      const double fc = try_value(model, psi, cand, data);
      // sufficient increase along the projected path
      const double incr = g.dot(cand - v);
      if (fc > -kInf && fc >= fv + opts.armijo_slope * incr && (cand - v).norm() > 0) {
        v = cand;
        fv = fc;
        accepted = true;
        break;
      }
      t *= opts.backtrack;
    }
    if (!accepted) {
      // No admissible increase left: either we are at the numerical optimum
      // (FD noise floor) or genuinely stuck.
      const Vector pg2 = projected_gradient(g, v, bounds);
      if (sup_norm(pg2) <= 1e2 * opts.grad_tol) return v;
      throw ConvergenceError("inner_mode: line search failed at gradient norm " +
                                 std::to_string(sup_norm(pg2)),
                             to_std(v), sup_norm(pg2));
    }
    g = detail::hlik_grad_v(model, psi, v, data);
  }
  const Vector pg = projected_gradient(g, v, bounds);
  if (sup_norm(pg) <= opts.grad_tol) return v;
  throw ConvergenceError("inner_mode: iteration budget exhausted", to_std(v),
                         sup_norm(pg));
}

double profile_loglik(const ModelSpec& model, const Vector& psi,
                      const Dataset& data, const SolveOptions& opts) {
  const int m = model.random_dimension(data);
  Vector start =
      opts.init_v ? *opts.init_v : default_inner_start(model, psi, data, m);
  const Vector v = inner_mode(model, psi, data, start, opts);
  return detail::hlik_value(model, psi, v, data);
}

namespace {

// Profile curvature in the unconstrained eta coordinates:
//   S = I_ee - I_ev * I_vv^{-1} * I_ve
// restricted to inactive v coordinates (bound-pinned modes do not move with
// psi). Used only to shape Newton steps, so Levenberg-style floors are fine.
Matrix profile_curvature_eta(const ModelSpec& model, const Vector& eta,
                             const Vector& v, const Dataset& data,
                             const std::vector<int>& active) {
  const int p = model.param_dim;
  const int m = static_cast<int>(v.size());

  Matrix i_ee(p, p);
  Matrix i_ev(p, m);
  Vector i_vv_diag;
  Matrix i_vv_dense;

  if (model.h_gradient) {
    const Matrix J = numdiff::jacobian_central4(
        [&](const Vector& e) {
          const Vector psi_e = to_psi(model, e);
          Vector gp, gv;
          model.h_gradient(psi_e, v, data, gp, gv);
          Vector g(p + m);
          g.head(p) = gp.cwiseProduct(dpsi_deta(model, e));
          g.tail(m) = gv;
          return g;
        },
        eta, p + m);
    i_ee = -0.5 * (J.topRows(p) + J.topRows(p).transpose());
    i_ev = -J.bottomRows(m).transpose();
    if (model.vv_structure == VvStructure::diagonal) {
      i_vv_diag =
          -detail::hlik_hess_v_diag(model, to_psi(model, eta), v, data);
    } else {
      const Vector psi = to_psi(model, eta);
      i_vv_dense = -numdiff::hessian(
          [&](const Vector& vv) { return detail::hlik_value(model, psi, vv, data); },
          v);
    }
  } else {
    const auto f_eta = [&](const Vector& e) {
      return detail::hlik_value(model, to_psi(model, e), v, data);
    };
    i_ee = -numdiff::hessian(f_eta, eta);
    if (detail::has_analytic_v_path(model) && m > 0) {
      const Matrix J = numdiff::jacobian_central4(
          [&](const Vector& e) {
            return detail::hlik_grad_v(model, to_psi(model, e), v, data);
          },
          eta, m);
      i_ev = -J.transpose();
    } else if (m > 0) {
      Vector joint(p + m);
      joint.head(p) = eta;
      joint.tail(m) = v;
      std::vector<int> rows(p), cols(m);
      for (int i = 0; i < p; ++i) rows[i] = i;
      for (int i = 0; i < m; ++i) cols[i] = p + i;
      i_ev = -numdiff::hessian_cross(
          [&](const Vector& x) {
            return detail::hlik_value(model, to_psi(model, x.head(p)), x.tail(m),
                                      data);
          },
          joint, rows, cols);
    }
    if (model.vv_structure == VvStructure::diagonal) {
      i_vv_diag = -detail::hlik_hess_v_diag(model, to_psi(model, eta), v, data);
    } else {
      const Vector psi = to_psi(model, eta);
      i_vv_dense = -numdiff::hessian(
          [&](const Vector& vv) { return detail::hlik_value(model, psi, vv, data); },
          v);
    }
  }

  // drop bound-pinned coordinates from the correction
  std::vector<int> keep;
  keep.reserve(m);
  {
    std::vector<bool> is_active(m, false);
    for (int a : active) is_active[a] = true;
    for (int i = 0; i < m; ++i) {
      if (!is_active[i]) keep.push_back(i);
    }
  }
  if (keep.empty()) return i_ee;

  if (model.vv_structure == VvStructure::diagonal) {
    Matrix S = i_ee;
    for (int k : keep) {
      const double floor_val = 1e-10 * std::max(1.0, sup_norm(i_vv_diag));
      const double dkk = std::max(i_vv_diag[k], floor_val);
      S -= (i_ev.col(k) * i_ev.col(k).transpose()) / dkk;
    }
    return S;
  }
  Matrix vv(keep.size(), keep.size());
  Matrix ev(p, keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a) {
    ev.col(a) = i_ev.col(keep[a]);
    for (std::size_t b = 0; b < keep.size(); ++b) {
      vv(a, b) = i_vv_dense(keep[a], keep[b]);
    }
  }
  const double scale = std::max(1.0, vv.cwiseAbs().maxCoeff());
  double tau = 0.0;
  for (int tries = 0; tries < 60; ++tries) {
    Eigen::LLT<Matrix> llt(vv + tau * Matrix::Identity(vv.rows(), vv.cols()));
    if (llt.info() == Eigen::Success) {
      return i_ee - ev * llt.solve(ev.transpose());
    }
    tau = tau == 0.0 ? 1e-10 * scale : 10.0 * tau;
  }
  throw RankError("could not regularize the random-parameter block");
}

FitResult run_joint_once(const ModelSpec& model, const Dataset& data,
                         const SolveOptions& opts, const Vector& psi0) {
  const int m = model.random_dimension(data);
  Vector eta = to_eta(model, psi0);
  Vector v = opts.init_v ? *opts.init_v
                         : default_inner_start(model, psi0, data, m);

  FitResult fit;
  fit.scale_kind = model.scale.kind;
  bool converged = false;
  int outer = 0;
  Vector psi = psi0;
  double fv = -kInf;
  double score_norm = kInf;

  for (outer = 1; outer <= opts.max_outer_iters; ++outer) {
    psi = to_psi(model, eta);
    v = inner_mode(model, psi, data, v, opts);
    fv = detail::hlik_value(model, psi, v, data);
    fit.ascent_trace.push_back(fv);

    const Vector g_nat = detail::hlik_grad_psi(model, psi, v, data);
    const VBounds bounds = v_bounds_of(model, psi, data, m);
    const Vector g_v =
        m > 0 ? detail::hlik_grad_v(model, psi, v, data) : Vector(0);
    const Vector pg_v = projected_gradient(g_v, v, bounds);
    score_norm = std::max(sup_norm(g_nat), sup_norm(pg_v));
    if (score_norm <= opts.grad_tol) {
      converged = true;
      break;
    }

    const std::vector<int> active = active_set(v, bounds);
    const Matrix S = profile_curvature_eta(model, eta, v, data, active);
    const Vector g_eta = g_nat.cwiseProduct(dpsi_deta(model, eta));
    const Vector d = newton_direction_dense(g_eta, -S);

    const double slope = g_eta.dot(d);

    // Terminal phase: once the predicted quadratic gain drops below the
    // objective's own roundoff resolution, a value-based acceptance test is
    // comparing noise and may reject every trial.  The damped Newton step is
    // tiny and still contracts the score quadratically, so take it whole and
    // let the next gradient check decide.
    if (slope <= 1e-12 * (1.0 + std::abs(fv)) &&
        sup_norm(d) <= 1e-6 * (1.0 + sup_norm(eta))) {
      const Vector eta_t = eta + d;
      if (sup_norm(eta_t) <= kEtaBox) {
        try {
          const Vector psi_t = to_psi(model, eta_t);
          const Vector v_t = inner_mode(model, psi_t, data, v, opts);
          if (std::isfinite(detail::hlik_value(model, psi_t, v_t, data))) {
            eta = eta_t;
            v = v_t;
            continue;
          }
        } catch (const Error&) {
          // infeasible: fall back to the guarded search below
        }
      }
    }

    double t = 1.0;
    bool accepted = false;
    Vector eta_c, v_c;
    double f_c = -kInf;
    for (int ls = 0; ls < 60; ++ls) {
      eta_c = eta + t * d;
      if (sup_norm(eta_c) <= kEtaBox) {
        try {
          const Vector psi_c = to_psi(model, eta_c);
          v_c = inner_mode(model, psi_c, data, v, opts);
          f_c = detail::hlik_value(model, psi_c, v_c, data);
          if (std::isfinite(f_c) &&
              f_c >= fv + opts.armijo_slope * t * slope) {
            accepted = true;
            break;
          }
        } catch (const Error&) {
          // infeasible trial point: shrink the step
        }
      }
      t *= opts.backtrack;
    }
    if (!accepted) {
      throw ConvergenceError(
          "joint_maximize: outer line search failed at score sup-norm " +
              std::to_string(std::max(sup_norm(g_nat), sup_norm(pg_v))),
          to_std(psi), std::max(sup_norm(g_nat), sup_norm(pg_v)));
    }
    eta = eta_c;
    v = v_c;
    if (sup_norm(eta) > kEtaBox) {
      throw BoundaryError(
          "joint_maximize: iterates escaped to the parameter-domain boundary "
          "(|log psi| > 50)");
    }
  }

  if (!converged) {
    throw ConvergenceError("joint_maximize: outer iteration budget exhausted",
                           to_std(psi), score_norm);
  }

  fit.psi_hat = psi;
  fit.v_hat = v;
  fit.y_mis_hat = model.scale.inverse(psi, data, v);
  fit.h_value = fv;
  fit.converged = true;
  fit.iterations = outer;
  const VBounds bounds = v_bounds_of(model, psi, data, m);
  fit.active_bounds = active_set(v, bounds);
  if (opts.compute_blocks && fit.active_bounds.empty()) {
    try {
      fit.blocks = hessian_blocks_at(model, psi, v, data, BlockScale::v);
    } catch (const Error&) {
      fit.blocks.reset();
    }
  }
  return fit;
}

}  // namespace

FitResult joint_maximize(const ModelSpec& model, const Dataset& data,
                         const SolveOptions& opts) {
  if (model.validate_data) model.validate_data(data);
  Vector psi0;
  if (opts.init_psi) {
    psi0 = *opts.init_psi;
    check_params(model, psi0);
  } else if (model.complete_case_init) {
    psi0 = model.complete_case_init(data);
  } else {
    throw UsageError("joint_maximize: no starting point (model '" + model.tag +
                     "' has no complete-case initializer)");
  }

  if (opts.multistart <= 0) return run_joint_once(model, data, opts, psi0);

  std::optional<FitResult> best;
  std::exception_ptr last_error;
  for (int k = 0; k <= opts.multistart; ++k) {
    Vector start = psi0;
    if (k > 0) {
      Rng rng(derive_stream(opts.multistart_seed, static_cast<std::uint64_t>(k)));
      Vector eta = to_eta(model, psi0);
      for (int i = 0; i < eta.size(); ++i) eta[i] += 0.5 * rng.normal();
      start = to_psi(model, eta);
    }
    try {
      FitResult fit = run_joint_once(model, data, opts, start);
      if (!best || fit.h_value > best->h_value) best = std::move(fit);
    } catch (const Error&) {
      last_error = std::current_exception();
    }
  }
  if (best) return *std::move(best);
  std::rethrow_exception(last_error);
}

Vector solve_random_given_psi(const ModelSpec& model, const Vector& psi,
                              const Dataset& data, const SolveOptions& opts) {
  check_params(model, psi);
  const int m = model.random_dimension(data);
  Vector start =
      opts.init_v ? *opts.init_v : default_inner_start(model, psi, data, m);
  const Vector v = inner_mode(model, psi, data, start, opts);
  return model.scale.inverse(psi, data, v);
}

HessianBlocks hessian_blocks(const ModelSpec& model, const FitResult& fit,
                             const Dataset& data, BlockScale scale) {
  const Vector& point = scale == BlockScale::v ? fit.v_hat : fit.y_mis_hat;
  return hessian_blocks_at(model, fit.psi_hat, point, data, scale);
}

VarianceReport z_scale_report(const ModelSpec& model, const FitResult& fit,
                              const Dataset& data, double level) {
  if (!model.normalizing) {
    throw UnsupportedError("model '" + model.tag +
                           "' declares no normalizing transformation");
  }
  // The declared transformations are identities on the natural scale, so the
  // z-scale report is the natural-scale variance decomposition.
  const Matrix var_psi =
      fit.blocks ? var_fixed(*fit.blocks)
                 : var_fixed(hessian_blocks(model, fit, data, BlockScale::v));
  const HessianBlocks y_blocks = hessian_blocks(model, fit, data, BlockScale::y_mis);
  return var_random(y_blocks, var_psi, level);
}

}  // namespace hilma
