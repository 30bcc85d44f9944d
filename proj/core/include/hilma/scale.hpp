#pragma once

#include <functional>
#include <string>

#include "hilma/dataset.hpp"
#include "hilma/types.hpp"

namespace hilma {

enum class ScaleKind { raw, canonical, weak_canonical };

const char* to_string(ScaleKind k);

// Coordinate-wise change of variable v = g(y_mis) for the random parameters.
//
// `forward`/`inverse` map between the natural scale y and the working scale
// v; `log_jacobian` returns log|dy/dv| evaluated at a natural-scale point y
// (the additive correction that turns the extended log-likelihood in y into
// the one in v). Transforms may depend on the fixed parameters (e.g. v =
// y/sigma), in which case all psi-dependence must flow through the psi
// argument so that objective derivatives in psi see it.
//
// The derivative hooks are optional analytic helpers used by the inner
// Newton solver; when absent, everything falls back to finite differences.
// All functions are pure; a ScaleTransform may be shared across threads.
struct ScaleTransform {
  ScaleKind kind = ScaleKind::raw;
  std::string name = "identity";

  std::function<Vector(const Vector& psi, const Dataset&, const Vector& y)> forward;
  std::function<Vector(const Vector& psi, const Dataset&, const Vector& v)> inverse;
  std::function<double(const Vector& psi, const Dataset&, const Vector& y)> log_jacobian;

  // Optional coordinate-wise derivatives as functions of v (diagonal maps):
  //   dy_dv[i]        = d y_i / d v_i
  //   d2y_dv2[i]      = d^2 y_i / d v_i^2
  //   dlogjac_dv[i]   = d/d v_i of the i-th term of log|dy/dv|
  //   d2logjac_dv2[i] = second derivative of that term
  std::function<Vector(const Vector& psi, const Dataset&, const Vector& v)> dy_dv;
  std::function<Vector(const Vector& psi, const Dataset&, const Vector& v)> d2y_dv2;
  std::function<Vector(const Vector& psi, const Dataset&, const Vector& v)> dlogjac_dv;
  std::function<Vector(const Vector& psi, const Dataset&, const Vector& v)> d2logjac_dv2;

  bool has_analytic_derivatives() const {
    return static_cast<bool>(dy_dv) && static_cast<bool>(d2y_dv2) &&
           static_cast<bool>(dlogjac_dv) && static_cast<bool>(d2logjac_dv2);
  }

  // v = y (log-Jacobian zero)
  static ScaleTransform raw_scale();
  // v = log(y)
  static ScaleTransform log_scale(ScaleKind kind = ScaleKind::canonical);
  // v = log(y - shift), support y > shift
  static ScaleTransform log_shift(double shift, ScaleKind kind = ScaleKind::canonical);
  // v = a * y for a fixed constant a != 0 (mostly for tests)
  static ScaleTransform linear(double a, ScaleKind kind = ScaleKind::raw);
};

}  // namespace hilma
