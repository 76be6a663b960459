#pragma once

#include <functional>

#include "imbl/matrix.hpp"

namespace imbl {

/// Solves A x = b by Gaussian elimination with partial pivoting.
///
/// Intended for strictly diagonally dominant or symmetric positive-definite
/// systems; residual satisfies ||Ax - b||_inf <= 1e-9 * (1 + ||b||_inf) for
/// such inputs. Throws on shape mismatch and on pivots below 1e-12, naming
/// the offending row.
Vector solve_dd(const Matrix& a, const Vector& b);

/// Central-difference gradient of a scalar function of a matrix:
/// (f(P + hE_ij) - f(P - hE_ij)) / (2h) entry-wise. Throws if any probe
/// evaluates non-finite.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& p, double h);

} // namespace imbl
