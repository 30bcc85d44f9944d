#include "hlik_internal.hpp"

#include <cmath>
#include <string>

#include "hilma/errors.hpp"
#include "hilma/hlik.hpp"
#include "hilma/numdiff.hpp"

namespace hilma {

void check_params(const ModelSpec& model, const Vector& psi) {
  if (psi.size() != model.param_dim) {
    throw DomainError("psi has length " + std::to_string(psi.size()) +
                      " but the model '" + model.tag + "' expects " +
                      std::to_string(model.param_dim));
  }
  for (int i = 0; i < psi.size(); ++i) {
    const std::string name = i < static_cast<int>(model.param_names.size())
                                 ? model.param_names[i]
                                 : ("psi[" + std::to_string(i) + "]");
    if (!std::isfinite(psi[i])) {
      throw DomainError("psi[" + std::to_string(i) + "] (" + name +
                        ") is not finite");
    }
    if (model.param_domain[i] == ParamDomain::positive && !(psi[i] > 0.0)) {
      throw DomainError("psi[" + std::to_string(i) + "] (" + name + ") = " +
                        std::to_string(psi[i]) + " must be positive");
    }
  }
}

double extended_loglik(const ModelSpec& model, const Vector& psi,
                       const Vector& y_mis, const Dataset& data) {
  check_params(model, psi);
  const int m = model.random_dimension(data);
  if (y_mis.size() != m) {
    throw DomainError("y_mis has length " + std::to_string(y_mis.size()) +
                      " but the model expects " + std::to_string(m));
  }
  return model.extended_loglik(psi, y_mis, data);
}

double hlik_in_y(const ModelSpec& model, const Vector& psi, const Vector& y_mis,
                 const Dataset& data) {
  return extended_loglik(model, psi, y_mis, data) +
         model.scale.log_jacobian(psi, data, y_mis);
}

namespace detail {

double hlik_value(const ModelSpec& model, const Vector& psi, const Vector& v,
                  const Dataset& data) {
  const Vector y = model.scale.inverse(psi, data, v);
  return model.extended_loglik(psi, y, data) +
         model.scale.log_jacobian(psi, data, y);
}

bool has_analytic_v_path(const ModelSpec& model) {
  return static_cast<bool>(model.grad_y) && static_cast<bool>(model.hess_y_diag) &&
         model.scale.has_analytic_derivatives();
}

Vector psi_fd_steps(const ModelSpec& model, const Vector& psi, double rel) {
  Vector steps(psi.size());
  for (int i = 0; i < psi.size(); ++i) {
    double h = rel * std::max(1.0, std::abs(psi[i]));
    if (model.param_domain[i] == ParamDomain::positive) {
      // keep psi - 2h comfortably inside the domain
      h = std::min(h, 0.2 * psi[i]);
    }
    steps[i] = h;
  }
  return steps;
}

Vector hlik_grad_v(const ModelSpec& model, const Vector& psi, const Vector& v,
                   const Dataset& data) {
  if (model.h_gradient) {
    Vector gp, gv;
    model.h_gradient(psi, v, data, gp, gv);
    return gv;
  }
  if (has_analytic_v_path(model)) {
    const Vector y = model.scale.inverse(psi, data, v);
    const Vector gy = model.grad_y(psi, y, data);
    const Vector dy = model.scale.dy_dv(psi, data, v);
    const Vector dlj = model.scale.dlogjac_dv(psi, data, v);
    return (gy.array() * dy.array() + dlj.array()).matrix();
  }
  return numdiff::gradient_central4(
      [&](const Vector& vv) { return hlik_value(model, psi, vv, data); }, v);
}

Vector hlik_hess_v_diag(const ModelSpec& model, const Vector& psi, const Vector& v,
                        const Dataset& data) {
  if (has_analytic_v_path(model)) {
    const Vector y = model.scale.inverse(psi, data, v);
    const Vector gy = model.grad_y(psi, y, data);
    const Vector hyy = model.hess_y_diag(psi, y, data);
    const Vector dy = model.scale.dy_dv(psi, data, v);
    const Vector d2y = model.scale.d2y_dv2(psi, data, v);
    const Vector d2lj = model.scale.d2logjac_dv2(psi, data, v);
    return (hyy.array() * dy.array().square() + gy.array() * d2y.array() +
            d2lj.array())
        .matrix();
  }
  return numdiff::hessian_diag(
      [&](const Vector& vv) { return hlik_value(model, psi, vv, data); }, v);
}

Vector hlik_grad_psi(const ModelSpec& model, const Vector& psi, const Vector& v,
                     const Dataset& data) {
  if (model.h_gradient) {
    Vector gp, gv;
    model.h_gradient(psi, v, data, gp, gv);
    return gp;
  }
  const Vector steps = psi_fd_steps(model, psi, kStepCentral4Rel);
  return numdiff::gradient_central4(
      [&](const Vector& p) { return hlik_value(model, p, v, data); }, psi, steps);
}

}  // namespace detail

HLikValue hlik(const ModelSpec& model, const Vector& psi, const Vector& v,
               const Dataset& data, bool with_gradients) {
  check_params(model, psi);
  const int m = model.random_dimension(data);
  if (v.size() != m) {
    throw DomainError("v has length " + std::to_string(v.size()) +
                      " but the model expects " + std::to_string(m));
  }
  HLikValue out;
  out.value = detail::hlik_value(model, psi, v, data);
  if (!with_gradients) return out;

  if (model.h_gradient) {
    Vector gp, gv;
    model.h_gradient(psi, v, data, gp, gv);
    out.grad_psi = std::move(gp);
    out.grad_v = std::move(gv);
    return out;
  }
  // documented default: plain central differences with the cbrt(eps) step
  const Vector steps = detail::psi_fd_steps(model, psi, detail::kStepCentralRel);
  out.grad_psi = numdiff::gradient_central(
      [&](const Vector& p) { return detail::hlik_value(model, p, v, data); }, psi,
      steps);
  if (detail::has_analytic_v_path(model)) {
    out.grad_v = detail::hlik_grad_v(model, psi, v, data);
  } else {
    out.grad_v = numdiff::gradient_central(
        [&](const Vector& vv) { return detail::hlik_value(model, psi, vv, data); },
        v);
  }
  return out;
}

}  // namespace hilma
