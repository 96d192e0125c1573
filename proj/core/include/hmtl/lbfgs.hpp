#pragma once

#include <functional>

#include "hmtl/types.hpp"

namespace hmtl {

struct LbfgsOptions {
    double grad_tol = 1e-6;     // stop when ‖g‖∞ ≤ grad_tol
    int max_iters = 200;
    int history_size = 10;
    double armijo_c = 1e-4;
    double shrink = 0.5;
    int max_backtracks = 60;
};

struct LbfgsResult {
    Vector x;
    double value = 0.0;
    double grad_inf_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Writes the gradient into `grad` and returns the objective value.
using ValueGradFn = std::function<double(const Vector& x, Vector& grad)>;

/// Applies an approximation of the inverse Hessian; seeds the two-loop
/// recursion in place of the scaled identity.
using PreconditionFn = std::function<Vector(const Vector& g)>;

/**
 * Limited-memory BFGS with a backtracking Armijo line search.
 *
 * The returned point never has a larger objective than `x0`. A trial point
 * with a non-finite objective raises SolverFailure carrying the last
 * accepted iterate (as a column vector).
 */
LbfgsResult lbfgs_minimize(const ValueGradFn& fn, Vector x0, const LbfgsOptions& opts,
                           const PreconditionFn& precondition = nullptr);

}  // namespace hmtl
