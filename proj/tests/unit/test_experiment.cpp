#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hmtl/experiment.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace hmtl;

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream is(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

ExperimentConfig small_synthetic_config(const std::string& out) {
    ExperimentConfig cfg;
    cfg.source = ExperimentConfig::Source::synthetic;
    cfg.synthetic.T = 2;
    cfg.synthetic.m = 4;
    cfg.synthetic.d = 6;
    cfg.synthetic.n = 120;
    cfg.synthetic.dof = 6;
    cfg.synthetic.groups = 2;
    cfg.methods = {Method::ols, Method::mma};
    cfg.train_years = {3, 5};
    cfg.test_years = 2;
    cfg.output_dir = out;
    return cfg;
}

}  // namespace

TEST_CASE("method names") {
    for (const char* name : {"hmtl", "mssl", "ols", "mma", "best_esm", "s2m2r"})
        CHECK(std::string(method_name(parse_method(name))) == name);
    CHECK_THROWS_AS(parse_method("lasso"), InvalidInput);
    CHECK(has_hyperparameters(Method::s2m2r));
    CHECK_FALSE(has_hyperparameters(Method::mma));
}

TEST_CASE("temporal holdout") {
    std::mt19937_64 rng(1);
    HierarchicalDataset block{{oracle::random_super_task(2, 3, 10, rng)}};
    const auto [fit, val] = temporal_holdout(block);
    CHECK(fit.super_tasks[0][0].n() == 8);
    CHECK(val.super_tasks[0][0].n() == 2);
    CHECK(val.super_tasks[0][1].y(0) == block.super_tasks[0][1].y(8));
    HierarchicalDataset tiny{{oracle::random_super_task(1, 2, 4, rng)}};
    CHECK_THROWS_AS(temporal_holdout(tiny), InvalidInput);
}

TEST_CASE("grid search basics") {
    std::mt19937_64 rng(2);
    HierarchicalDataset block{{oracle::random_super_task(4, 3, 20, rng)}};
    const std::vector<HyperPoint> single{{0.5, 0.1, 0.2, 0.0}};
    const auto one = grid_search(block, single, Method::hmtl, {});
    CHECK(one.chosen == single[0]);
    CHECK(one.validation_rmse.empty());

    const std::vector<HyperPoint> twins{{0, 0, 0, 5.0}, {0, 0, 0, 5.0}};
    const auto tie = grid_search(block, twins, Method::s2m2r, {}, GridSpec{2, 2});
    CHECK(tie.chosen_index == 0);
    CHECK(tie.validation_rmse.size() == 2);
    CHECK(tie.validation_rmse[0] == tie.validation_rmse[1]);

    CHECK_THROWS_AS(grid_search(block, std::vector<HyperPoint>{}, Method::ols, {}), InvalidInput);
}

TEST_CASE("grid search picks the lighter regularization on rough data") {
    int hits = 0;
    for (int seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(100 + static_cast<unsigned>(seed));
        std::normal_distribution<double> noise(0.0, std::sqrt(0.1));
        SuperTask st;
        for (int k = 0; k < 4; ++k) {
            const Matrix x = oracle::random_matrix(40, 5, rng, -2.0, 2.0);
            const Vector th = 3.0 * oracle::random_vector(5, rng);  // unrelated across locations
            Vector y = x * th;
            for (Index i = 0; i < y.size(); ++i)
                y(i) += noise(rng);
            st.push_back({x, y});
        }
        const std::vector<HyperPoint> grid{{0, 0, 0, 10.0}, {0, 0, 0, 1.0}};
        const auto res = grid_search(HierarchicalDataset{{st}}, grid, Method::s2m2r, {}, GridSpec{2, 2});
        hits += res.chosen_index == 1 ? 1 : 0;
    }
    CHECK(hits >= 9);
}

TEST_CASE("cross-validated mssl beats least squares on group-structured data") {
    SyntheticSpec spec;
    spec.T = 1;
    spec.m = 6;
    spec.d = 12;
    spec.n = 40;
    spec.dof = 4;
    spec.groups = 2;
    spec.seed = 3;
    const auto syn = generate_hierarchical_dataset(spec);
    HierarchicalDataset train, test;
    SuperTask a, b;
    for (const auto& t : syn.data.super_tasks[0]) {
        a.push_back({t.X.topRows(10), t.y.head(10)});
        b.push_back({t.X.bottomRows(30), t.y.tail(30)});
    }
    train.super_tasks.push_back(a);
    test.super_tasks.push_back(b);
    const std::vector<HyperPoint> grid{{1.0, 0.01, 0.0, 0.0}, {1.0, 0.1, 0.0, 0.0}, {1.0, 1.0, 0.0, 0.0}};
    const auto chosen = grid_search(train, grid, Method::mssl, {}).chosen;
    const double mssl = evaluate(fit_method(Method::mssl, train, chosen, {}), test).mean();
    const double ols = evaluate(fit_method(Method::ols, train, {}, {}), test).mean();
    CHECK(mssl < ols);
}

TEST_CASE("config parsing") {
    const std::string text = R"({
        "source": {"type": "synthetic_climate", "rows": 3, "cols": 2, "years": 40},
        "methods": ["hmtl", "mma"],
        "windows": {"train_years": [20, 30], "test_years": 5},
        "season": "summer",
        "grid": {"hmtl": [{"lambda0": 0.1, "lambda1": 0.0002, "lambda2": 0.01}],
                 "mssl": {"lambda0": [0.1, 1], "lambda1": [0.01, 0.1]}},
        "seed": 9,
        "solver": {"admm_adaptive_rho": false, "max_outer_iters": 7}
    })";
    const ExperimentConfig cfg = parse_experiment_config(text);
    CHECK(cfg.climate.rows == 3);
    CHECK(cfg.methods.size() == 2);
    CHECK(cfg.train_years == std::vector<int>{20, 30});
    CHECK(cfg.season == Season::summer);
    const auto hmtl_grid = grid_for(cfg, Method::hmtl);
    REQUIRE(hmtl_grid.size() == 1);
    CHECK(hmtl_grid[0].lambda0 == 0.1);
    CHECK(hmtl_grid[0].lambda1 == 0.0002);
    CHECK(hmtl_grid[0].lambda2 == 0.01);
    const auto mssl_grid = grid_for(cfg, Method::mssl);
    REQUIRE(mssl_grid.size() == 4);
    CHECK(mssl_grid[1].lambda0 == 0.1);
    CHECK(mssl_grid[1].lambda1 == 0.1);
    CHECK_FALSE(cfg.solver.admm.adaptive_rho);
    CHECK(cfg.solver.driver.max_outer_iters == 7);

    const ExperimentConfig again = parse_experiment_config(experiment_config_to_json(cfg));
    CHECK(experiment_config_to_json(again) == experiment_config_to_json(cfg));

    CHECK_THROWS_AS(parse_experiment_config("{"), ParseError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"methods": ["nope"]})"), InvalidInput);
    CHECK_THROWS_AS(parse_experiment_config(R"({"grid": {"hmtl": []}})"), InvalidInput);
    CHECK_THROWS_AS(parse_experiment_config(R"({"season": "spring"})"), InvalidInput);
}

TEST_CASE("config file paths resolve next to the file") {
    oracle::TempDir dir;
    std::filesystem::create_directories(dir.path() / "cfg");
    dir.write("cfg/run.json", R"({"source": {"type": "csv", "data": "../data.csv", "grid": "grid.csv"}})");
    const ExperimentConfig cfg = load_experiment_config(dir.file("cfg/run.json"));
    CHECK(std::filesystem::path(cfg.data_path) == (dir.path() / "data.csv").lexically_normal());
    CHECK(std::filesystem::path(cfg.grid_path) == (dir.path() / "cfg" / "grid.csv").lexically_normal());
}

TEST_CASE("experiment on synthetic data") {
    oracle::TempDir dir;
    const ExperimentConfig cfg = small_synthetic_config(dir.file("out"));
    const ExperimentResult res = run_experiment(cfg);
    // 2 variables × 2 lengths × 2 methods
    REQUIRE(res.summary.size() == 8);
    for (const auto& s : res.summary) {
        CHECK(s.windows > 0);
        CHECK(s.failed == 0);
    }
    for (std::size_t i = 0; i < res.summary.size(); i += 2) {
        CHECK(res.summary[i].method == Method::ols);
        CHECK(res.summary[i + 1].mean_rmse >= res.summary[i].mean_rmse);
    }
    for (const char* f : {"summary.csv", "windows.csv", "per_location_ols.csv", "per_location_mma.csv",
                          "manifest.json"})
        CHECK(std::filesystem::exists(dir.path() / "out" / f));

    // Summary statistics recompute from windows.csv.
    const auto windows = read_csv(dir.file("out/windows.csv"));
    const auto summary = read_csv(dir.file("out/summary.csv"));
    for (std::size_t r = 1; r < summary.size(); ++r) {
        std::vector<double> vals;
        for (std::size_t w = 1; w < windows.size(); ++w)
            if (windows[w][1] == summary[r][1] && windows[w][2] == summary[r][2] && windows[w][8] == summary[r][3])
                vals.push_back(std::stod(windows[w][9]));
        double mean = 0.0;
        for (double v : vals)
            mean += v;
        mean /= static_cast<double>(vals.size());
        double ss = 0.0;
        for (double v : vals)
            ss += (v - mean) * (v - mean);
        const double sd = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
        CHECK(std::abs(std::stod(summary[r][4]) - mean) < 1e-12);
        CHECK(std::abs(std::stod(summary[r][5]) - sd) < 1e-12);
    }

    // Test years never overlap training years.
    for (const auto& w : res.windows)
        CHECK(w.split.train_last < w.split.test_first);
}

TEST_CASE("experiment output is byte-identical across reruns and thread counts") {
    oracle::TempDir dir;
    ExperimentConfig a = small_synthetic_config(dir.file("a"));
    a.methods = {Method::hmtl, Method::mssl, Method::ols};
    a.train_years = {4};
    a.grids[Method::hmtl] = {{1.0, 0.1, 0.1, 0.0}, {1.0, 0.3, 0.3, 0.0}};
    ExperimentConfig b = a;
    b.output_dir = dir.file("b");
    b.threads = 3;
    run_experiment(a);
    run_experiment(b);
    for (const char* f : {"summary.csv", "windows.csv", "per_location_hmtl.csv"})
        CHECK(oracle::read_file(dir.file(std::string("a/") + f)) == oracle::read_file(dir.file(std::string("b/") + f)));
}

TEST_CASE("failing cells are recorded and the run continues") {
    oracle::TempDir dir;
    ExperimentConfig cfg = small_synthetic_config(dir.file("out"));
    cfg.methods = {Method::s2m2r, Method::mma};  // no grid metadata for s2m2r
    cfg.train_years = {3};
    const ExperimentResult res = run_experiment(cfg);
    bool saw_failure = false;
    for (const auto& w : res.windows) {
        if (w.method == Method::s2m2r) {
            CHECK_FALSE(w.rmse.has_value());
            CHECK(w.status.rfind("failed:", 0) == 0);
            saw_failure = true;
        } else {
            CHECK(w.rmse.has_value());
        }
    }
    CHECK(saw_failure);
}

TEST_CASE("paper-layout window lengths") {
    oracle::TempDir dir;
    ExperimentConfig cfg;
    cfg.climate.rows = 2;
    cfg.climate.cols = 2;
    cfg.climate.esms = 4;
    cfg.methods = {Method::mma, Method::best_esm};
    cfg.output_dir = dir.file("out");
    const ExperimentResult res = run_experiment(cfg);
    for (int len : {20, 30, 50}) {
        bool found = false;
        for (const auto& s : res.summary)
            found = found || (s.train_years == len && s.windows > 0);
        CHECK(found);
    }
}
