#pragma once

#include <span>

#include "hmtl/types.hpp"

namespace hmtl {

/// Uncentered second moment of the task parameters, S = (1/d) Θᵀ Θ.
/// Rows of Θ are treated as d draws of an m-dimensional vector.
Matrix sample_covariance(const Matrix& theta);

/// Log-determinant of a symmetric positive-definite matrix via Cholesky.
/// Throws DomainError if the factorization fails.
double log_det_spd(const Matrix& a);

/// Returns (a + aᵀ) / 2.
Matrix symmetrize(const Matrix& a);

/// λ₁ Σ_t Σ_{k≠j} |Ω_kj| + λ₂ Σ_{k≠j} sqrt(Σ_t Ω_kj²).
double group_penalty(std::span<const Matrix> omegas, double lambda1, double lambda2);

/// Squared-error data term Σ_k ‖X_k θ_k − y_k‖² of one super-task.
double squared_loss(const SuperTask& tasks, const Matrix& theta);

/**
 * Full hierarchical cost:
 *
 *   Σ_t [ Σ_k ‖X θ − y‖² − log|Ω⁽ᵗ⁾| + λ₀ tr(S⁽ᵗ⁾ Ω⁽ᵗ⁾) ] + R_G({Ω})
 *
 * with S⁽ᵗ⁾ = sample_covariance(Θ⁽ᵗ⁾). Terms are accumulated in super-task
 * index order so the result does not depend on how it was computed upstream.
 */
double hmtl_objective(const HierarchicalDataset& data, const WeightSet& w, const PrecisionSet& p,
                      const Hyperparams& h);

/// ŷ = X θ.
Vector predict(const Matrix& X, const Vector& theta);

/// Root-mean-squared error. Throws InvalidInput on length mismatch or empty input.
double rmse(const Vector& pred, const Vector& obs);

}  // namespace hmtl
