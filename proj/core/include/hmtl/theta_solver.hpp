#pragma once

#include <utility>
#include <vector>

#include "hmtl/types.hpp"

namespace hmtl {

struct ThetaSolveConfig {
    double grad_tol = 1e-6;  // ∞-norm of the gradient
    int max_iters = 200;
    int history_size = 10;
    bool precondition = true;  // per-sub-task block-diagonal initial metric
};

/// Value and gradient of the weight-step objective for one super-task:
///   Σ_k ‖X_k θ_k − y_k‖² + λ₀ tr(S Ω),  S = (1/d) ΘᵀΘ.
/// Evaluated directly from the residuals.
std::pair<double, Matrix> theta_value_grad(const SuperTask& tasks, const Matrix& theta, const Matrix& omega,
                                           double lambda0);

/// Same objective, with per-task Gram matrices cached so each evaluation costs
/// O(m d²) independent of the sample counts. Used inside the solver.
class ThetaObjective {
public:
    ThetaObjective(const SuperTask& tasks, Matrix omega, double lambda0);

    double value_grad(const Matrix& theta, Matrix& grad) const;
    double value(const Matrix& theta) const;

    /// Block-diagonal Hessian approximation, one d×d block per sub-task:
    /// 2 XᵀX + (2λ₀/d) Ω_kk I, factored once.
    std::vector<Eigen::LLT<Matrix>> block_factors() const;

    Index d() const noexcept { return d_; }
    Index m() const noexcept { return m_; }

private:
    Index d_;
    Index m_;
    std::vector<Matrix> gram_;  // XᵀX
    std::vector<Vector> xty_;   // Xᵀy
    std::vector<double> yty_;
    Matrix omega_;
    double lambda0_;
};

struct ThetaStepResult {
    Matrix theta;
    double value = 0.0;
    double grad_inf_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Minimizes the weight-step objective for one super-task with L-BFGS,
/// starting from `init`. The result's objective never exceeds the objective
/// at `init`.
ThetaStepResult solve_theta_step(const SuperTask& tasks, const Matrix& omega, double lambda0, const Matrix& init,
                                 const ThetaSolveConfig& cfg = {});

}  // namespace hmtl
