#pragma once

#include "hmtl/types.hpp"

namespace hmtl {

/// Regular lattice; location index = row * cols + col.
struct GridSpec {
    Index rows = 1;
    Index cols = 1;

    Index size() const noexcept { return rows * cols; }
    Index index(Index row, Index col) const noexcept { return row * cols + col; }
};

/// Independent least squares per sub-task; minimal-norm solution when XᵀX is singular.
Matrix fit_ols(const SuperTask& tasks);

/// Multi-model average: equal weights 1/d, i.e. the row means of X.
Vector predict_mma(const Matrix& X);

/// Column of X with the smallest training MSE against y (lowest index on ties).
Index select_best_esm(const SubTaskData& task);

/// L = D − A over the 4-neighbour lattice, no wraparound.
Matrix build_grid_laplacian(const GridSpec& grid);

/**
 * Laplacian-smoothed least squares across locations:
 *
 *   min_Θ  Σ_k ‖X_k θ_k − y_k‖² + λ tr(Θ L Θᵀ)
 *
 * Solved as one sparse symmetric system over the stacked d·m unknowns with
 * conjugate gradients. λ = 0 reduces to fit_ols.
 */
Matrix fit_s2m2r(const SuperTask& tasks, const Matrix& laplacian, double lambda);

}  // namespace hmtl
