#include "hilma/numdiff.hpp"

#include <cmath>
#include <limits>

namespace hilma {
namespace numdiff {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
const double kStepC = std::cbrt(kEps);            // ~6.1e-6
const double kStepC4 = std::pow(kEps, 0.2);       // ~7.4e-4
const double kStepH = std::pow(kEps, 0.25);       // ~1.2e-4

double pick(const Vector& steps, int i, double fallback) {
  return steps.size() > 0 ? steps[i] : fallback;
}
}  // namespace

double step_central(double x) { return kStepC * std::max(1.0, std::abs(x)); }
double step_central4(double x) { return kStepC4 * std::max(1.0, std::abs(x)); }
double step_hessian(double x) { return kStepH * std::max(1.0, std::abs(x)); }

double partial_central(const ScalarFn& f, Vector x, int i, double step) {
  const double xi = x[i];
  x[i] = xi + step;
  const double fp = f(x);
  x[i] = xi - step;
  const double fm = f(x);
  x[i] = xi;
  return (fp - fm) / (2.0 * step);
}

double partial_central4(const ScalarFn& f, Vector x, int i, double step) {
  const double xi = x[i];
  x[i] = xi + step;
  const double f1 = f(x);
  x[i] = xi - step;
  const double f2 = f(x);
  x[i] = xi + 2.0 * step;
  const double f3 = f(x);
  x[i] = xi - 2.0 * step;
  const double f4 = f(x);
  x[i] = xi;
  return (8.0 * (f1 - f2) - (f3 - f4)) / (12.0 * step);
}

Vector gradient_central(const ScalarFn& f, const Vector& x, const Vector& steps) {
  Vector g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    g[i] = partial_central(f, x, i, pick(steps, i, step_central(x[i])));
  }
  return g;
}

Vector gradient_central4(const ScalarFn& f, const Vector& x, const Vector& steps) {
  Vector g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    g[i] = partial_central4(f, x, i, pick(steps, i, step_central4(x[i])));
  }
  return g;
}

double second_central(const ScalarFn& f, Vector x, int i, double step) {
  const double xi = x[i];
  const double f0 = f(x);
  x[i] = xi + step;
  const double fp = f(x);
  x[i] = xi - step;
  const double fm = f(x);
  x[i] = xi;
  return (fp - 2.0 * f0 + fm) / (step * step);
}

Vector hessian_diag(const ScalarFn& f, const Vector& x, bool richardson,
                    const Vector& steps) {
  Vector d(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double h = pick(steps, i, step_hessian(x[i]));
    const double dh = second_central(f, x, i, h);
    if (!richardson) {
      d[i] = dh;
    } else {
      const double dh2 = second_central(f, x, i, 0.5 * h);
      d[i] = (4.0 * dh2 - dh) / 3.0;
    }
  }
  return d;
}

namespace {
// plain 4-point mixed second difference at step (hi, hj)
double mixed_once(const ScalarFn& f, Vector x, int i, int j, double hi, double hj) {
  const double xi = x[i], xj = x[j];
  x[i] = xi + hi; x[j] = xj + hj;
  const double fpp = f(x);
  x[i] = xi + hi; x[j] = xj - hj;
  const double fpm = f(x);
  x[i] = xi - hi; x[j] = xj + hj;
  const double fmp = f(x);
  x[i] = xi - hi; x[j] = xj - hj;
  const double fmm = f(x);
  return (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
}

double mixed_partial(const ScalarFn& f, const Vector& x, int i, int j,
                     double hi, double hj, bool richardson) {
  const double d = mixed_once(f, x, i, j, hi, hj);
  if (!richardson) return d;
  const double d2 = mixed_once(f, x, i, j, 0.5 * hi, 0.5 * hj);
  return (4.0 * d2 - d) / 3.0;
}
}  // namespace

Matrix hessian(const ScalarFn& f, const Vector& x, bool richardson,
               const Vector& steps) {
  const int n = static_cast<int>(x.size());
  Matrix H(n, n);
  const Vector diag = hessian_diag(f, x, richardson, steps);
  for (int i = 0; i < n; ++i) H(i, i) = diag[i];
  for (int i = 0; i < n; ++i) {
    const double hi = pick(steps, i, step_hessian(x[i]));
    for (int j = i + 1; j < n; ++j) {
      const double hj = pick(steps, j, step_hessian(x[j]));
      H(i, j) = H(j, i) = mixed_partial(f, x, i, j, hi, hj, richardson);
    }
  }
  return H;
}

Matrix hessian_cross(const ScalarFn& f, const Vector& x,
                     const std::vector<int>& rows, const std::vector<int>& cols,
                     bool richardson, const Vector& steps) {
  Matrix H(rows.size(), cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    const int i = rows[a];
    const double hi = pick(steps, i, step_hessian(x[i]));
    for (std::size_t b = 0; b < cols.size(); ++b) {
      const int j = cols[b];
      const double hj = pick(steps, j, step_hessian(x[j]));
      H(a, b) = mixed_partial(f, x, i, j, hi, hj, richardson);
    }
  }
  return H;
}

Matrix jacobian_central4(const VectorFn& g, const Vector& x, int out_dim,
                         const Vector& steps) {
  const int n = static_cast<int>(x.size());
  Matrix J(out_dim, n);
  Vector xt = x;
  for (int j = 0; j < n; ++j) {
    const double h = pick(steps, j, step_central4(x[j]));
    const double xj = x[j];
    xt[j] = xj + h;
    Vector g1 = g(xt);
    xt[j] = xj - h;
    Vector g2 = g(xt);
    xt[j] = xj + 2.0 * h;
    Vector g3 = g(xt);
    xt[j] = xj - 2.0 * h;
    Vector g4 = g(xt);
    xt[j] = xj;
    J.col(j) = (8.0 * (g1 - g2) - (g3 - g4)) / (12.0 * h);
  }
  return J;
}

}  // namespace numdiff
}  // namespace hilma
