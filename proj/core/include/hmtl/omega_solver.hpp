#pragma once

#include <span>
#include <string>
#include <vector>

#include "hmtl/types.hpp"

namespace hmtl {

struct AdmmConfig {
    double rho = 1.0;
    double abs_tol = 1e-5;
    double rel_tol = 1e-4;
    int max_iters = 500;
    int threads = 1;  // concurrent per-super-task Ω-updates
    // Residual balancing: ρ is multiplied or divided by rho_scale whenever one
    // residual exceeds the other by more than rho_balance (checked every
    // rho_interval iterations). Deterministic; disabled when false.
    bool adaptive_rho = true;
    double rho_balance = 10.0;
    double rho_scale = 2.0;
    int rho_interval = 10;
};

/// Primal iterates, consensus copies and scaled duals of the joint ADMM.
/// Passing a state back into solve_omega_step warm-starts the next solve.
struct AdmmState {
    std::vector<Matrix> omegas;
    std::vector<Matrix> zs;
    std::vector<Matrix> us;
    std::vector<double> rhos;  // penalty each loop ended with; empty = config value

    static AdmmState identity(Index T, Index m);
};

struct AdmmReport {
    int iterations = 0;
    bool converged = false;
    double final_rho = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double min_omega_eigenvalue = 0.0;  // smallest eigenvalue of any Ω iterate
    bool used_masked_fallback = false;  // Z was not PD; returned Ω masked by Z's support
    std::string warning;
};

struct OmegaStepResult {
    PrecisionSet precisions;
    AdmmReport report;
};

/**
 * Proximal operator of the smooth part of the precision subproblem:
 *
 *   argmin_Ω  −log|Ω| + λ₀ tr(S Ω) + (ρ/2) ‖Ω − A‖²_F
 *
 * Closed form through the eigendecomposition λ₀S − ρA = V D Vᵀ; every
 * eigenvalue of the result is (−d + √(d² + 4ρ)) / (2ρ) > 0. If
 * `min_eigenvalue` is non-null it receives the smallest of them.
 */
Matrix prox_logdet(const Matrix& a, const Matrix& s, double lambda0, double rho, double* min_eigenvalue = nullptr);

/// Z-update of the joint ADMM: diagonals pass through; each off-diagonal
/// group (k, j) across super-tasks is soft-thresholded by `t1` elementwise,
/// then its cross-super-task vector is scaled by max(1 − t2/‖·‖₂, 0).
std::vector<Matrix> group_soft_threshold(std::span<const Matrix> stack, double t1, double t2);

/// Value of the precision subproblem,
///   Σ_t [−log|Ω⁽ᵗ⁾| + λ₀ tr(S⁽ᵗ⁾Ω⁽ᵗ⁾)] + R_G({Ω}).
double omega_step_objective(std::span<const Matrix> s_set, std::span<const Matrix> omegas, const Hyperparams& h);

/**
 * Joint estimation of T sparse precision matrices by ADMM.
 *
 * Returns the consensus iterate Z, so zeros in the result are exact. When
 * λ₂ = 0 the problem separates and each super-task runs its own ADMM loop
 * with its own stopping test. `warm` (optional) supplies the starting state
 * and receives the final one.
 */
OmegaStepResult solve_omega_step(std::span<const Matrix> s_set, const Hyperparams& h, const AdmmConfig& cfg = {},
                                 AdmmState* warm = nullptr);

}  // namespace hmtl
