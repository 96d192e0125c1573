#pragma once

#include <cstdint>
#include <optional>

#include "hmtl/omega_solver.hpp"
#include "hmtl/theta_solver.hpp"
#include "hmtl/types.hpp"

namespace hmtl {

struct DriverConfig {
    double outer_tol = 1e-4;  // relative objective change
    int max_outer_iters = 50;
    std::uint64_t rng_seed = 42;
    int threads = 1;  // concurrent per-super-task solves
};

/// Starting weights: entries uniform on (−0.5, 0.5), drawn from a single
/// stream seeded with `seed` and consumed super-task by super-task.
WeightSet initial_weights(Index T, Index d, Index m, std::uint64_t seed);

/**
 * Alternating minimization of the hierarchical cost.
 *
 * Starts from Ω⁽ᵗ⁾ = I and uniform random Θ⁽ᵗ⁾ (see initial_weights, or
 * `init` when given), then repeats a weight step for every super-task
 * followed by the joint precision step. Stops when the relative change of
 * the full objective drops below `cfg.outer_tol` or after
 * `cfg.max_outer_iters` iterations.
 *
 * With λ₂ = 0 the super-tasks are independent problems and each one runs its
 * own alternation with its own stopping test; the report then holds the
 * per-iteration sum of the super-task objectives.
 *
 * With λ₀ = 0 the precision step has no data term and is unbounded, so the
 * precisions stay at the identity.
 */
HmtlModel fit_hmtl(const HierarchicalDataset& data, const Hyperparams& h, const DriverConfig& cfg = {},
                   const ThetaSolveConfig& theta_cfg = {}, const AdmmConfig& admm_cfg = {},
                   const std::optional<WeightSet>& init = std::nullopt);

/// Single-super-task special case (λ₂ ignored): fit_hmtl on {super_task} with λ₂ = 0.
HmtlModel fit_mssl(const SuperTask& super_task, const Hyperparams& h, const DriverConfig& cfg = {},
                   const ThetaSolveConfig& theta_cfg = {}, const AdmmConfig& admm_cfg = {},
                   const std::optional<Matrix>& init = std::nullopt);

}  // namespace hmtl
