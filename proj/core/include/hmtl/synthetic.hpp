#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hmtl/data_io.hpp"
#include "hmtl/types.hpp"

namespace hmtl {

/// Seeded random stream. One instance is consumed in a fixed order so
/// generated data is a deterministic function of the seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    Vector normal_vector(Index n);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

struct SyntheticSpec {
    Index T = 7;
    Index m = 15;
    Index d = 50;
    Index n = 100;
    Index dof = 10;
    Index groups = 3;
    double noise_var = 0.1;
    double within = 0.7;   // scale-matrix correlation inside a group
    double ridge = 0.01;   // added to each Wishart draw
    std::uint64_t seed = 1;
};

/// Block scale matrix: 1 on the diagonal, `within` inside each of `groups`
/// contiguous blocks (sizes differ by at most one), 0 elsewhere, plus
/// `jitter` on the diagonal.
Matrix make_group_scale_matrix(Index m, Index groups, double within = 0.7, double jitter = 0.0);

/// W = Σ_{i<dof} g_i g_iᵀ, g_i ~ N(0, scale), then W + ridge·I.
Matrix sample_wishart(const Matrix& scale, Index dof, Rng& rng, double ridge = 0.01);

struct SyntheticData {
    HierarchicalDataset data;
    WeightSet true_weights;
    PrecisionSet true_precisions;
    Matrix scale;
};

/**
 * Per super-task: Ω from sample_wishart(Λ, dof); rows of Θ drawn from
 * N(0, Ω⁻¹); X entries i.i.d. N(0, 1); y = Xθ + ε with ε ~ N(0, noise_var).
 * The stream is consumed as all Ω, then all Θ, then all X, then all ε, each
 * in super-task/sub-task index order.
 */
SyntheticData generate_hierarchical_dataset(const SyntheticSpec& spec);

/// Pseudo-climate table for exercising the experiment harness end to end.
struct ClimateSynthSpec {
    std::vector<std::string> variables{"pr", "tas"};
    Index rows = 5;
    Index cols = 5;
    Index esms = 32;
    int start_year = 1901;
    int years = 100;
    double obs_noise = 0.3;       // observation noise std
    double esm_noise = 1.0;       // per-ESM deviation std from the shared signal
    double weight_spread = 0.15;  // std of per-location weight deviations
    std::uint64_t seed = 7;
};

/**
 * Each variable has a seasonal climatology plus interannual anomalies per
 * location. Every ESM reports that signal with its own bias, gain and noise;
 * observations are a location-specific weighted combination of the ESM
 * outputs plus noise, with weights varying smoothly over the grid and shared
 * in shape across variables. Locations carry grid metadata.
 */
ClimateTable generate_climate_table(const ClimateSynthSpec& spec);

}  // namespace hmtl
