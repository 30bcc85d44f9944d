#include "hilma/scale.hpp"

#include <cmath>
#include <string>

#include "hilma/errors.hpp"

namespace hilma {

const char* to_string(ScaleKind k) {
  switch (k) {
    case ScaleKind::raw: return "raw";
    case ScaleKind::canonical: return "canonical";
    case ScaleKind::weak_canonical: return "weak_canonical";
  }
  return "?";
}

ScaleTransform ScaleTransform::raw_scale() {
  ScaleTransform s;
  s.kind = ScaleKind::raw;
  s.name = "identity";
  s.forward = [](const Vector&, const Dataset&, const Vector& y) { return y; };
  s.inverse = [](const Vector&, const Dataset&, const Vector& v) { return v; };
  s.log_jacobian = [](const Vector&, const Dataset&, const Vector&) { return 0.0; };
  s.dy_dv = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Ones(v.size()).eval();
  };
  s.d2y_dv2 = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Zero(v.size()).eval();
  };
  s.dlogjac_dv = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Zero(v.size()).eval();
  };
  s.d2logjac_dv2 = s.dlogjac_dv;
  return s;
}

ScaleTransform ScaleTransform::log_shift(double shift, ScaleKind kind) {
  ScaleTransform s;
  s.kind = kind;
  s.name = shift == 0.0 ? "log" : ("log(y - " + std::to_string(shift) + ")");
  s.forward = [shift](const Vector&, const Dataset&, const Vector& y) {
    Vector v(y.size());
    for (int i = 0; i < y.size(); ++i) {
      if (!(y[i] > shift)) {
        throw DomainError("scale: y_mis[" + std::to_string(i) + "] = " +
                          std::to_string(y[i]) + " must exceed " +
                          std::to_string(shift) + " for the log transform");
      }
      v[i] = std::log(y[i] - shift);
    }
    return v;
  };
  s.inverse = [shift](const Vector&, const Dataset&, const Vector& v) {
    Vector y(v.size());
    for (int i = 0; i < v.size(); ++i) y[i] = shift + std::exp(v[i]);
    return y;
  };
  // log|dy/dv| at y: each coordinate contributes log(y_i - shift) = v_i
  s.log_jacobian = [shift](const Vector&, const Dataset&, const Vector& y) {
    double lj = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      if (!(y[i] > shift)) {
        throw DomainError("scale: y_mis[" + std::to_string(i) + "] = " +
                          std::to_string(y[i]) + " must exceed " +
                          std::to_string(shift) + " for the log transform");
      }
      lj += std::log(y[i] - shift);
    }
    return lj;
  };
  s.dy_dv = [](const Vector&, const Dataset&, const Vector& v) {
    return v.array().exp().matrix().eval();
  };
  s.d2y_dv2 = s.dy_dv;
  s.dlogjac_dv = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Ones(v.size()).eval();
  };
  s.d2logjac_dv2 = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Zero(v.size()).eval();
  };
  return s;
}

ScaleTransform ScaleTransform::log_scale(ScaleKind kind) { return log_shift(0.0, kind); }

ScaleTransform ScaleTransform::linear(double a, ScaleKind kind) {
  if (a == 0.0) throw UsageError("linear scale: slope must be nonzero");
  ScaleTransform s;
  s.kind = kind;
  s.name = "linear(" + std::to_string(a) + ")";
  s.forward = [a](const Vector&, const Dataset&, const Vector& y) {
    return (a * y).eval();
  };
  s.inverse = [a](const Vector&, const Dataset&, const Vector& v) {
    return (v / a).eval();
  };
  s.log_jacobian = [a](const Vector&, const Dataset&, const Vector& y) {
    return -static_cast<double>(y.size()) * std::log(std::abs(a));
  };
  s.dy_dv = [a](const Vector&, const Dataset&, const Vector& v) {
    return (Vector::Ones(v.size()) / a).eval();
  };
  s.d2y_dv2 = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Zero(v.size()).eval();
  };
  s.dlogjac_dv = [](const Vector&, const Dataset&, const Vector& v) {
    return Vector::Zero(v.size()).eval();
  };
  s.d2logjac_dv2 = s.dlogjac_dv;
  return s;
}

}  // namespace hilma
