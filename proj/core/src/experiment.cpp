#include "hmtl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "hmtl/model_core.hpp"
#include "hmtl/model_io.hpp"
#include "hmtl/parallel.hpp"

namespace hmtl {

using nlohmann::json;

namespace {

constexpr Method kAllMethods[] = {Method::hmtl, Method::mssl, Method::ols, Method::mma, Method::best_esm, Method::s2m2r};

}  // namespace

std::string library_version() { return "hmtl 0.1.0"; }

Method parse_method(const std::string& name) {
    for (Method m : kAllMethods)
        if (name == method_name(m))
            return m;
    throw InvalidInput("unknown method '" + name + "' (expected hmtl, mssl, ols, mma, best_esm or s2m2r)");
}

const char* method_name(Method m) {
    switch (m) {
        case Method::hmtl: return "hmtl";
        case Method::mssl: return "mssl";
        case Method::ols: return "ols";
        case Method::mma: return "mma";
        case Method::best_esm: return "best_esm";
        case Method::s2m2r: return "s2m2r";
    }
    return "?";
}

bool has_hyperparameters(Method m) { return m == Method::hmtl || m == Method::mssl || m == Method::s2m2r; }

Vector Predictor::predict(Index t, Index k, const Matrix& X) const {
    const auto ut = static_cast<std::size_t>(t);
    switch (method) {
        case Method::mma: return predict_mma(X);
        case Method::best_esm: return X.col(best.at(ut).at(static_cast<std::size_t>(k)));
        default: return hmtl::predict(X, weights.at(ut).col(k));
    }
}

Predictor fit_method(Method method, const HierarchicalDataset& train, const HyperPoint& hp,
                     const SolverSettings& solver, const std::optional<GridSpec>& grid) {
    validate(train);
    Predictor p;
    p.method = method;
    switch (method) {
        case Method::hmtl:
        case Method::mssl: {
            Hyperparams h{hp.lambda0, hp.lambda1, method == Method::hmtl ? hp.lambda2 : 0.0};
            HmtlModel model = fit_hmtl(train, h, solver.driver, solver.theta, solver.admm);
            p.weights = std::move(model.weights.thetas);
            break;
        }
        case Method::ols:
            for (const auto& st : train.super_tasks)
                p.weights.push_back(fit_ols(st));
            break;
        case Method::s2m2r: {
            if (!grid || grid->size() != train.m())
                throw InvalidInput("s2m2r needs grid metadata covering every location");
            const Matrix lap = build_grid_laplacian(*grid);
            for (const auto& st : train.super_tasks)
                p.weights.push_back(fit_s2m2r(st, lap, hp.lambda));
            break;
        }
        case Method::mma:
            break;
        case Method::best_esm:
            for (const auto& st : train.super_tasks) {
                std::vector<Index> cols;
                for (const auto& task : st)
                    cols.push_back(select_best_esm(task));
                p.best.push_back(std::move(cols));
            }
            break;
    }
    return p;
}

Matrix evaluate(const Predictor& predictor, const HierarchicalDataset& test) {
    Matrix out(test.T(), test.m());
    for (Index t = 0; t < test.T(); ++t)
        for (Index k = 0; k < test.m(); ++k) {
            const auto& task = test.super_tasks[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
            out(t, k) = rmse(predictor.predict(t, k, task.X), task.y);
        }
    return out;
}

std::pair<HierarchicalDataset, HierarchicalDataset> temporal_holdout(const HierarchicalDataset& block,
                                                                     double fit_fraction) {
    HierarchicalDataset fit, val;
    for (const auto& st : block.super_tasks) {
        SuperTask f, v;
        for (const auto& task : st) {
            const Index n = task.n();
            if (n < 5)
                throw InvalidInput("grid search needs at least 5 timestamps in the training block");
            const auto n_fit = static_cast<Index>(std::floor(fit_fraction * static_cast<double>(n)));
            f.push_back({task.X.topRows(n_fit), task.y.head(n_fit)});
            v.push_back({task.X.bottomRows(n - n_fit), task.y.tail(n - n_fit)});
        }
        fit.super_tasks.push_back(std::move(f));
        val.super_tasks.push_back(std::move(v));
    }
    return {std::move(fit), std::move(val)};
}

GridSearchResult grid_search(const HierarchicalDataset& train_block, std::span<const HyperPoint> grid, Method method,
                             const SolverSettings& solver, const std::optional<GridSpec>& grid_spec) {
    if (grid.empty())
        throw InvalidInput("grid search: empty grid");
    GridSearchResult res;
    res.chosen = grid.front();
    if (grid.size() == 1)
        return res;
    const auto [fit, val] = temporal_holdout(train_block);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double score = std::numeric_limits<double>::infinity();
        try {
            const Predictor p = fit_method(method, fit, grid[i], solver, grid_spec);
            score = evaluate(p, val).mean();
        } catch (const Error&) {
            // An unusable grid point simply loses.
        }
        res.validation_rmse.push_back(score);
        if (score < best) {
            best = score;
            res.chosen_index = i;
        }
    }
    if (!std::isfinite(best))
        throw SolverFailure("grid search: every grid point failed", Matrix());
    res.chosen = grid[res.chosen_index];
    return res;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::vector<HyperPoint> default_grid(Method m) {
    switch (m) {
        case Method::hmtl: return {{0.1, 0.0002, 0.01, 0.0}};
        case Method::mssl: return {{0.1, 0.1, 0.0, 0.0}};
        case Method::s2m2r: return {{0.0, 0.0, 0.0, 1000.0}};
        default: return {HyperPoint{}};
    }
}

std::vector<double> number_list(const json& j) {
    if (j.is_number())
        return {j.get<double>()};
    if (!j.is_array() || j.empty())
        throw InvalidInput("config: expected a number or a non-empty array of numbers");
    return j.get<std::vector<double>>();
}

// Either a list of explicit points or an object of per-parameter lists
// expanded as a cartesian product (lambda0 outermost).
std::vector<HyperPoint> parse_grid(const json& j) {
    std::vector<HyperPoint> out;
    auto field = [](const json& obj, const char* key) { return obj.contains(key) ? obj.at(key).get<double>() : 0.0; };
    if (j.is_array()) {
        for (const auto& p : j)
            out.push_back({field(p, "lambda0"), field(p, "lambda1"), field(p, "lambda2"), field(p, "lambda")});
    } else if (j.is_object()) {
        auto list = [&](const char* key) { return j.contains(key) ? number_list(j.at(key)) : std::vector<double>{0.0}; };
        for (double l0 : list("lambda0"))
            for (double l1 : list("lambda1"))
                for (double l2 : list("lambda2"))
                    for (double l : list("lambda"))
                        out.push_back({l0, l1, l2, l});
    } else {
        throw InvalidInput("config: grid must be an array of points or an object of lists");
    }
    if (out.empty())
        throw InvalidInput("config: grid must not be empty");
    return out;
}

json grid_to_json(const std::vector<HyperPoint>& grid) {
    json arr = json::array();
    for (const auto& p : grid)
        arr.push_back({{"lambda0", p.lambda0}, {"lambda1", p.lambda1}, {"lambda2", p.lambda2}, {"lambda", p.lambda}});
    return arr;
}

template <class T>
void read_opt(const json& j, const char* key, T& dst) {
    if (j.contains(key))
        dst = j.at(key).get<T>();
}

}  // namespace

std::vector<HyperPoint> grid_for(const ExperimentConfig& cfg, Method method) {
    auto it = cfg.grids.find(method);
    return it != cfg.grids.end() ? it->second : default_grid(method);
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        if (j.contains("source")) {
            const json& s = j.at("source");
            const std::string type = s.value("type", "synthetic_climate");
            if (type == "csv") {
                cfg.source = ExperimentConfig::Source::csv;
                cfg.data_path = s.at("data").get<std::string>();
                read_opt(s, "grid", cfg.grid_path);
            } else if (type == "synthetic_climate") {
                cfg.source = ExperimentConfig::Source::synthetic_climate;
                auto& c = cfg.climate;
                read_opt(s, "variables", c.variables);
                read_opt(s, "rows", c.rows);
                read_opt(s, "cols", c.cols);
                read_opt(s, "esms", c.esms);
                read_opt(s, "start_year", c.start_year);
                read_opt(s, "years", c.years);
                read_opt(s, "obs_noise", c.obs_noise);
                read_opt(s, "esm_noise", c.esm_noise);
                read_opt(s, "weight_spread", c.weight_spread);
                read_opt(s, "seed", c.seed);
            } else if (type == "synthetic") {
                cfg.source = ExperimentConfig::Source::synthetic;
                auto& sp = cfg.synthetic;
                read_opt(s, "T", sp.T);
                read_opt(s, "m", sp.m);
                read_opt(s, "d", sp.d);
                read_opt(s, "n", sp.n);
                read_opt(s, "dof", sp.dof);
                read_opt(s, "groups", sp.groups);
                read_opt(s, "noise_var", sp.noise_var);
                read_opt(s, "within", sp.within);
                read_opt(s, "ridge", sp.ridge);
                read_opt(s, "seed", sp.seed);
            } else {
                throw InvalidInput("config: unknown source type '" + type + "'");
            }
        }
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : j.at("methods"))
                cfg.methods.push_back(parse_method(m.get<std::string>()));
        }
        if (cfg.methods.empty())
            throw InvalidInput("config: at least one method is required");
        if (j.contains("windows")) {
            const json& w = j.at("windows");
            if (w.contains("train_years")) {
                cfg.train_years.clear();
                for (double v : number_list(w.at("train_years")))
                    cfg.train_years.push_back(static_cast<int>(v));
            }
            read_opt(w, "test_years", cfg.test_years);
            read_opt(w, "step_years", cfg.step_years);
        }
        if (j.contains("season"))
            cfg.season = parse_season(j.at("season").get<std::string>());
        if (j.contains("season_mapping")) {
            read_opt(j.at("season_mapping"), "summer", cfg.season_mapping.summer);
            read_opt(j.at("season_mapping"), "winter", cfg.season_mapping.winter);
        }
        if (j.contains("grid"))
            for (const auto& [name, g] : j.at("grid").items())
                cfg.grids[parse_method(name)] = parse_grid(g);
        read_opt(j, "seed", cfg.seed);
        read_opt(j, "threads", cfg.threads);
        read_opt(j, "output_dir", cfg.output_dir);
        if (j.contains("solver")) {
            const json& s = j.at("solver");
            read_opt(s, "outer_tol", cfg.solver.driver.outer_tol);
            read_opt(s, "max_outer_iters", cfg.solver.driver.max_outer_iters);
            read_opt(s, "theta_grad_tol", cfg.solver.theta.grad_tol);
            read_opt(s, "theta_max_iters", cfg.solver.theta.max_iters);
            read_opt(s, "theta_history", cfg.solver.theta.history_size);
            read_opt(s, "theta_precondition", cfg.solver.theta.precondition);
            read_opt(s, "admm_rho", cfg.solver.admm.rho);
            read_opt(s, "admm_adaptive_rho", cfg.solver.admm.adaptive_rho);
            read_opt(s, "admm_abs_tol", cfg.solver.admm.abs_tol);
            read_opt(s, "admm_rel_tol", cfg.solver.admm.rel_tol);
            read_opt(s, "admm_max_iters", cfg.solver.admm.max_iters);
        }
        for (Method m : cfg.methods)
            if (has_hyperparameters(m) && grid_for(cfg, m).empty())
                throw InvalidInput(std::string("config: empty grid for ") + method_name(m));
        return cfg;
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ParseError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    ExperimentConfig cfg = parse_experiment_config(ss.str());
    // Data paths are relative to the config file.
    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative())
            p = (base / p).lexically_normal().string();
    };
    resolve(cfg.data_path);
    resolve(cfg.grid_path);
    return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    json j;
    switch (cfg.source) {
        case ExperimentConfig::Source::csv:
            j["source"] = {{"type", "csv"}, {"data", cfg.data_path}, {"grid", cfg.grid_path}};
            break;
        case ExperimentConfig::Source::synthetic_climate: {
            const auto& c = cfg.climate;
            j["source"] = {{"type", "synthetic_climate"}, {"variables", c.variables}, {"rows", c.rows},
                           {"cols", c.cols}, {"esms", c.esms}, {"start_year", c.start_year},
                           {"years", c.years}, {"obs_noise", c.obs_noise}, {"esm_noise", c.esm_noise},
                           {"weight_spread", c.weight_spread}, {"seed", c.seed}};
            break;
        }
        case ExperimentConfig::Source::synthetic: {
            const auto& s = cfg.synthetic;
            j["source"] = {{"type", "synthetic"}, {"T", s.T}, {"m", s.m}, {"d", s.d}, {"n", s.n},
                           {"dof", s.dof}, {"groups", s.groups}, {"noise_var", s.noise_var},
                           {"within", s.within}, {"ridge", s.ridge}, {"seed", s.seed}};
            break;
        }
    }
    json methods = json::array();
    for (Method m : cfg.methods)
        methods.push_back(method_name(m));
    j["methods"] = methods;
    j["windows"] = {{"train_years", cfg.train_years}, {"test_years", cfg.test_years}, {"step_years", cfg.step_years}};
    j["season"] = season_name(cfg.season);
    j["season_mapping"] = {{"summer", cfg.season_mapping.summer}, {"winter", cfg.season_mapping.winter}};
    json grids = json::object();
    for (Method m : cfg.methods)
        if (has_hyperparameters(m))
            grids[method_name(m)] = grid_to_json(grid_for(cfg, m));
    j["grid"] = grids;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["output_dir"] = cfg.output_dir;
    const auto& s = cfg.solver;
    j["solver"] = {{"outer_tol", s.driver.outer_tol},     {"max_outer_iters", s.driver.max_outer_iters},
                   {"theta_grad_tol", s.theta.grad_tol},  {"theta_max_iters", s.theta.max_iters},
                   {"theta_history", s.theta.history_size}, {"theta_precondition", s.theta.precondition},
                   {"admm_rho", s.admm.rho},                {"admm_adaptive_rho", s.admm.adaptive_rho},
                   {"admm_abs_tol", s.admm.abs_tol},      {"admm_rel_tol", s.admm.rel_tol},
                   {"admm_max_iters", s.admm.max_iters}};
    return j.dump(2);
}

ClimateTable load_experiment_table(const ExperimentConfig& cfg) {
    ClimateTable table;
    switch (cfg.source) {
        case ExperimentConfig::Source::csv: {
            CsvSchema schema;
            if (!cfg.grid_path.empty())
                schema.grid_path = cfg.grid_path;
            table = load_gridded_csv(cfg.data_path, schema);
            break;
        }
        case ExperimentConfig::Source::synthetic_climate:
            table = generate_climate_table(cfg.climate);
            break;
        case ExperimentConfig::Source::synthetic:
            table = table_from_dataset(generate_hierarchical_dataset(cfg.synthetic).data);
            break;
    }
    return extract_season(table, cfg.season, cfg.season_mapping);
}

// ---------------------------------------------------------------------------
// Experiment runner

namespace {

struct Cell {
    std::size_t length_index;
    int window;
    WindowSplit split;
    Method method;
};

struct CellResult {
    std::optional<Matrix> per_location;  // T×m
    std::string status = "ok";
    HyperPoint hyper;
};

std::string sanitize(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os)
        throw InvalidInput("cannot open '" + p.string() + "' for writing");
    return os;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty())
        return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double mean = 0.0;
    for (double x : v)
        mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2)
        return {mean, 0.0};
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

std::string fmt_opt(double v) { return std::isfinite(v) ? format_double(v) : ""; }

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.methods.empty())
        throw InvalidInput("experiment: at least one method is required");
    const ClimateTable table = load_experiment_table(cfg);
    ExperimentResult result;

    std::vector<Cell> cells;
    std::vector<std::vector<WindowSplit>> splits_per_length;
    for (std::size_t li = 0; li < cfg.train_years.size(); ++li) {
        std::string warning;
        auto splits = split_moving_window(table, cfg.train_years[li], cfg.test_years, cfg.step_years, &warning);
        if (!warning.empty())
            result.warnings.push_back("train_years=" + std::to_string(cfg.train_years[li]) + ": " + warning);
        for (std::size_t w = 0; w < splits.size(); ++w)
            for (Method m : cfg.methods)
                cells.push_back({li, static_cast<int>(w), splits[w], m});
        splits_per_length.push_back(std::move(splits));
    }

    SolverSettings solver = cfg.solver;
    solver.driver.rng_seed = cfg.seed;
    solver.driver.threads = 1;
    solver.admm.threads = 1;

    std::vector<CellResult> results(cells.size());
    parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
        const Cell& c = cells[i];
        CellResult& r = results[i];
        try {
            const HierarchicalDataset train = to_dataset(table, c.split.train_first, c.split.train_last);
            const HierarchicalDataset test = to_dataset(table, c.split.test_first, c.split.test_last);
            const auto grid = grid_for(cfg, c.method);
            if (has_hyperparameters(c.method))
                r.hyper = grid_search(train, grid, c.method, solver, table.grid).chosen;
            const Predictor p = fit_method(c.method, train, r.hyper, solver, table.grid);
            r.per_location = evaluate(p, test);
        } catch (const std::exception& e) {
            r.per_location.reset();
            r.status = sanitize(std::string("failed: ") + e.what());
        }
    });

    // Window rows, in cell order.
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Cell& c = cells[i];
        for (std::size_t v = 0; v < table.variables.size(); ++v) {
            WindowRow row;
            row.variable = table.variables[v];
            row.train_years = cfg.train_years[c.length_index];
            row.window = c.window;
            row.split = c.split;
            row.method = c.method;
            row.status = results[i].status;
            row.hyper = results[i].hyper;
            if (results[i].per_location)
                row.rmse = results[i].per_location->row(static_cast<Index>(v)).mean();
            result.windows.push_back(std::move(row));
        }
    }

    // Summary: mean/std over windows, per variable × train length × method.
    for (std::size_t v = 0; v < table.variables.size(); ++v)
        for (std::size_t li = 0; li < cfg.train_years.size(); ++li)
            for (Method m : cfg.methods) {
                std::vector<double> vals;
                int failed = 0;
                for (const auto& w : result.windows)
                    if (w.variable == table.variables[v] && w.train_years == cfg.train_years[li] && w.method == m) {
                        if (w.rmse)
                            vals.push_back(*w.rmse);
                        else
                            ++failed;
                    }
                const auto [mean, sd] = mean_std(vals);
                result.summary.push_back({table.variables[v], cfg.train_years[li], m, mean, sd,
                                          static_cast<int>(vals.size()), failed});
            }

    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    const char* season = season_name(cfg.season);
    {
        auto os = open_out(dir / "summary.csv");
        os << "season,variable,train_years,method,mean_rmse,std_rmse,windows,failed\n";
        for (const auto& s : result.summary)
            os << season << ',' << s.variable << ',' << s.train_years << ',' << method_name(s.method) << ','
               << fmt_opt(s.mean_rmse) << ',' << fmt_opt(s.std_rmse) << ',' << s.windows << ',' << s.failed << '\n';
    }
    {
        auto os = open_out(dir / "windows.csv");
        os << "season,variable,train_years,window,train_first,train_last,test_first,test_last,method,rmse,status,"
              "lambda0,lambda1,lambda2,lambda\n";
        for (const auto& w : result.windows)
            os << season << ',' << w.variable << ',' << w.train_years << ',' << w.window << ',' << w.split.train_first
               << ',' << w.split.train_last << ',' << w.split.test_first << ',' << w.split.test_last << ','
               << method_name(w.method) << ',' << (w.rmse ? format_double(*w.rmse) : "") << ',' << w.status << ','
               << format_double(w.hyper.lambda0) << ',' << format_double(w.hyper.lambda1) << ','
               << format_double(w.hyper.lambda2) << ',' << format_double(w.hyper.lambda) << '\n';
    }
    for (Method m : cfg.methods) {
        auto os = open_out(dir / (std::string("per_location_") + method_name(m) + ".csv"));
        os << "season,variable,train_years,location_id,row,col,lat,lon,mean_rmse,windows\n";
        for (std::size_t v = 0; v < table.variables.size(); ++v)
            for (std::size_t li = 0; li < cfg.train_years.size(); ++li)
                for (std::size_t k = 0; k < table.locations.size(); ++k) {
                    double acc = 0.0;
                    int count = 0;
                    for (std::size_t i = 0; i < cells.size(); ++i)
                        if (cells[i].method == m && cells[i].length_index == li && results[i].per_location) {
                            acc += (*results[i].per_location)(static_cast<Index>(v), static_cast<Index>(k));
                            ++count;
                        }
                    const auto& loc = table.locations[k];
                    os << season << ',' << table.variables[v] << ',' << cfg.train_years[li] << ',' << loc.id << ','
                       << loc.row << ',' << loc.col << ',' << format_double(loc.lat) << ','
                       << format_double(loc.lon) << ','
                       << (count ? format_double(acc / count) : std::string()) << ',' << count << '\n';
                }
    }
    {
        json manifest;
        manifest["tool"] = "hmtl";
        manifest["version"] = library_version();
        manifest["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION);
        manifest["seed"] = cfg.seed;
        manifest["config"] = json::parse(experiment_config_to_json(cfg));
        manifest["table"] = {{"variables", table.variables},
                             {"locations", table.m()},
                             {"esms", table.d()},
                             {"timestamps", table.times.size()}};
        json windows = json::object();
        for (std::size_t li = 0; li < cfg.train_years.size(); ++li)
            windows[std::to_string(cfg.train_years[li])] = splits_per_length[li].size();
        manifest["windows"] = windows;
        manifest["warnings"] = result.warnings;
        auto os = open_out(dir / "manifest.json");
        os << manifest.dump(2) << '\n';
    }
    return result;
}

}  // namespace hmtl
