#pragma once

#include <functional>
#include <vector>

#include "hilma/types.hpp"

namespace hilma {
namespace numdiff {

using ScalarFn = std::function<double(const Vector&)>;
using VectorFn = std::function<Vector(const Vector&)>;

// Step sizes scale with max(1, |x|). The classic central-difference step is
// cbrt(eps); first derivatives that feed convergence checks use the
// fourth-order rule whose optimal step is eps^(1/5); second differences use
// eps^(1/4).
double step_central(double x);
double step_central4(double x);
double step_hessian(double x);

// Second-order central difference of a single coordinate.
double partial_central(const ScalarFn& f, Vector x, int i, double step);

// Fourth-order (five-point) central difference of a single coordinate.
double partial_central4(const ScalarFn& f, Vector x, int i, double step);

// Gradients. `steps` may be empty (auto) or give a per-coordinate step.
Vector gradient_central(const ScalarFn& f, const Vector& x,
                        const Vector& steps = Vector());
Vector gradient_central4(const ScalarFn& f, const Vector& x,
                         const Vector& steps = Vector());

// Pure second central difference along coordinate i.
double second_central(const ScalarFn& f, Vector x, int i, double step);

// Diagonal of the Hessian. With `richardson`, combines steps h and h/2 to
// cancel the leading O(h^2) error term.
Vector hessian_diag(const ScalarFn& f, const Vector& x, bool richardson = false,
                    const Vector& steps = Vector());

// Full (symmetric) Hessian by central differences, optionally Richardson
// refined.
Matrix hessian(const ScalarFn& f, const Vector& x, bool richardson = false,
               const Vector& steps = Vector());

// Mixed block d^2 f / dx_A dx_B for two disjoint index sets.
Matrix hessian_cross(const ScalarFn& f, const Vector& x,
                     const std::vector<int>& rows, const std::vector<int>& cols,
                     bool richardson = false, const Vector& steps = Vector());

// Jacobian of a vector-valued map, fourth-order columns: J(i,j) = d g_i / d x_j.
Matrix jacobian_central4(const VectorFn& g, const Vector& x, int out_dim,
                         const Vector& steps = Vector());

}  // namespace numdiff
}  // namespace hilma
