#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmtl/baselines.hpp"
#include "hmtl/data_io.hpp"
#include "hmtl/driver.hpp"
#include "hmtl/synthetic.hpp"

namespace hmtl {

enum class Method { hmtl, mssl, ols, mma, best_esm, s2m2r };

Method parse_method(const std::string& name);
const char* method_name(Method m);
/// True for methods that take hyperparameters (hmtl, mssl, s2m2r).
bool has_hyperparameters(Method m);

/// One grid point. lambda0..2 drive hmtl/mssl, `lambda` drives s2m2r.
struct HyperPoint {
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda = 0.0;

    friend bool operator==(const HyperPoint&, const HyperPoint&) = default;
};

struct SolverSettings {
    DriverConfig driver;
    ThetaSolveConfig theta;
    AdmmConfig admm;
};

/// A fitted method, able to predict any sub-task of the dataset it was fit on.
struct Predictor {
    Method method = Method::ols;
    std::vector<Matrix> weights;            // per super-task d×m (weight-based methods)
    std::vector<std::vector<Index>> best;   // per super-task, chosen column (best_esm)

    Vector predict(Index t, Index k, const Matrix& X) const;
};

Predictor fit_method(Method method, const HierarchicalDataset& train, const HyperPoint& hp,
                     const SolverSettings& solver, const std::optional<GridSpec>& grid = std::nullopt);

/// RMSE per (super-task, sub-task) on `test`; result is T×m.
Matrix evaluate(const Predictor& predictor, const HierarchicalDataset& test);

struct GridSearchResult {
    HyperPoint chosen;
    std::size_t chosen_index = 0;
    std::vector<double> validation_rmse;  // empty for singleton grids (nothing fit)
};

/**
 * Temporal hold-out selection. Each sub-task's rows (assumed time-ordered)
 * are split into the first 80% for fitting and the last 20% for validation;
 * the grid point with the lowest mean validation RMSE over all sub-tasks and
 * super-tasks wins, ties going to the earlier point. A singleton grid is
 * returned as is.
 */
GridSearchResult grid_search(const HierarchicalDataset& train_block, std::span<const HyperPoint> grid, Method method,
                             const SolverSettings& solver, const std::optional<GridSpec>& grid_spec = std::nullopt);

/// Splits every sub-task at floor(0.8 n) rows. Requires n >= 5.
std::pair<HierarchicalDataset, HierarchicalDataset> temporal_holdout(const HierarchicalDataset& block,
                                                                     double fit_fraction = 0.8);

struct ExperimentConfig {
    enum class Source { csv, synthetic_climate, synthetic };
    Source source = Source::synthetic_climate;
    std::string data_path;
    std::string grid_path;
    ClimateSynthSpec climate;
    SyntheticSpec synthetic;

    std::vector<Method> methods{Method::hmtl, Method::mssl, Method::ols, Method::mma, Method::best_esm,
                                Method::s2m2r};
    std::vector<int> train_years{20, 30, 50};
    int test_years = 10;
    int step_years = 0;  // 0 = test_years
    Season season = Season::year;
    SeasonMapping season_mapping;
    std::map<Method, std::vector<HyperPoint>> grids;

    std::uint64_t seed = 42;
    int threads = 1;
    std::string output_dir = "hmtl_out";
    SolverSettings solver;
};

/// Grid used for `method`: the configured one, or the built-in default.
std::vector<HyperPoint> grid_for(const ExperimentConfig& cfg, Method method);

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

/// Loads or generates the table named by the config's source, season extracted.
ClimateTable load_experiment_table(const ExperimentConfig& cfg);

struct SummaryRow {
    std::string variable;
    int train_years = 0;
    Method method = Method::ols;
    double mean_rmse = 0.0;
    double std_rmse = 0.0;
    int windows = 0;
    int failed = 0;
};

struct WindowRow {
    std::string variable;
    int train_years = 0;
    int window = 0;
    WindowSplit split;
    Method method = Method::ols;
    std::optional<double> rmse;  // mean over locations; empty when the cell failed
    std::string status;
    HyperPoint hyper;
};

struct ExperimentResult {
    std::vector<SummaryRow> summary;
    std::vector<WindowRow> windows;
    std::vector<std::string> warnings;
};

/**
 * For every training length and moving window: selects hyperparameters on
 * the training block, refits, predicts the test block and records RMSE per
 * (method, super-task, location, window). Writes into cfg.output_dir:
 *
 *   summary.csv               mean/std over windows of the location-averaged RMSE
 *   windows.csv               one row per (variable, train length, window, method)
 *   per_location_<method>.csv RMSE per location averaged over windows
 *   manifest.json             resolved config, seed and versions
 *
 * A failing (method, window) cell is recorded with its reason and the run
 * continues.
 */
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::string library_version();

}  // namespace hmtl
