// hmtl: command-line front end for fitting, benchmarking and data generation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "hmtl/data_io.hpp"
#include "hmtl/experiment.hpp"
#include "hmtl/model_io.hpp"

using namespace hmtl;
namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string output;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool config_required) {
    auto* c = cmd->add_option("-c,--config", o.config, "JSON experiment config");
    if (config_required)
        c->required();
    c->check(CLI::ExistingFile);
    cmd->add_option("-s,--seed", o.seed, "override the config seed");
    cmd->add_option("-o,--output", o.output, "output directory (overrides output_dir)");
    cmd->add_option("-j,--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const CommonOptions& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_experiment_config(o.config);
    if (o.seed)
        cfg.seed = *o.seed;
    if (!o.output.empty())
        cfg.output_dir = o.output;
    if (o.threads)
        cfg.threads = *o.threads;
    return cfg;
}

SolverSettings solver_for(const ExperimentConfig& cfg) {
    SolverSettings s = cfg.solver;
    s.driver.rng_seed = cfg.seed;
    s.driver.threads = cfg.threads;
    s.admm.threads = cfg.threads;
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

int run_bench(const CommonOptions& o) {
    const ExperimentConfig cfg = resolve(o);
    const ExperimentResult res = run_experiment(cfg);
    for (const auto& w : res.warnings)
        std::cerr << "warning: " << w << "\n";
    std::cout << std::left << std::setw(10) << "variable" << std::setw(7) << "train" << std::setw(10) << "method"
              << std::setw(14) << "mean_rmse" << std::setw(14) << "std_rmse" << "windows\n";
    for (const auto& r : res.summary)
        std::cout << std::left << std::setw(10) << r.variable << std::setw(7) << r.train_years << std::setw(10)
                  << method_name(r.method) << std::setw(14) << fmt(r.mean_rmse) << std::setw(14) << fmt(r.std_rmse)
                  << r.windows << (r.failed ? " (" + std::to_string(r.failed) + " failed)" : "") << "\n";
    std::cout << "wrote " << cfg.output_dir << "\n";
    return 0;
}

int run_fit(const CommonOptions& o, std::optional<double> l0, std::optional<double> l1, std::optional<double> l2) {
    const ExperimentConfig cfg = resolve(o);
    const ClimateTable table = load_experiment_table(cfg);
    const HierarchicalDataset data = to_dataset(table);
    const SolverSettings solver = solver_for(cfg);

    Hyperparams h;
    if (l0 || l1 || l2) {
        h = {l0.value_or(0.0), l1.value_or(0.0), l2.value_or(0.0)};
    } else {
        const auto grid = grid_for(cfg, Method::hmtl);
        const HyperPoint p = grid_search(data, grid, Method::hmtl, solver).chosen;
        h = {p.lambda0, p.lambda1, p.lambda2};
    }
    const HmtlModel model = fit_hmtl(data, h, solver.driver, solver.theta, solver.admm);

    fs::create_directories(cfg.output_dir);
    const fs::path path = fs::path(cfg.output_dir) / "model.txt";
    save_model(path.string(), model);

    const auto& rep = model.report;
    std::cout << "lambda0=" << h.lambda0 << " lambda1=" << h.lambda1 << " lambda2=" << h.lambda2 << "\n"
              << "T=" << data.T() << " m=" << data.m() << " d=" << data.d() << "\n"
              << "outer iterations " << rep.outer_iterations << (rep.converged ? " (converged)" : " (not converged)")
              << ", objective " << fmt(rep.objective_trace.empty() ? rep.initial_objective : rep.objective_trace.back())
              << ", " << fmt(rep.elapsed_seconds) << " s\n"
              << "wrote " << path.string() << "\n";
    return 0;
}

int run_synth(const CommonOptions& o) {
    ExperimentConfig cfg = resolve(o);
    if (o.seed)
        cfg.climate.seed = *o.seed;
    cfg.source = ExperimentConfig::Source::synthetic_climate;
    const ClimateTable table = generate_climate_table(cfg.climate);
    fs::create_directories(cfg.output_dir);
    const fs::path data = fs::path(cfg.output_dir) / "climate.csv";
    const fs::path grid = fs::path(cfg.output_dir) / "grid.csv";
    write_gridded_csv(data.string(), table);
    write_grid_csv(grid.string(), table);
    std::cout << table.variables.size() << " variables, " << table.m() << " locations, " << table.d() << " ESMs, "
              << table.times.size() << " months\n"
              << "wrote " << data.string() << " and " << grid.string() << "\n";
    return 0;
}

int run_gridsearch(const CommonOptions& o, const std::string& method_name_arg) {
    const ExperimentConfig cfg = resolve(o);
    const Method method = parse_method(method_name_arg);
    const ClimateTable table = load_experiment_table(cfg);
    const HierarchicalDataset data = to_dataset(table);
    const auto grid = grid_for(cfg, method);
    const GridSearchResult res = grid_search(data, grid, method, solver_for(cfg), table.grid);

    fs::create_directories(cfg.output_dir);
    const fs::path path = fs::path(cfg.output_dir) / ("gridsearch_" + std::string(method_name(method)) + ".csv");
    std::ofstream os(path);
    if (!os)
        throw InvalidInput("cannot open '" + path.string() + "' for writing");
    os << "index,lambda0,lambda1,lambda2,lambda,validation_rmse,chosen\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& p = grid[i];
        const std::string v = i < res.validation_rmse.size() ? format_double(res.validation_rmse[i]) : "";
        os << i << ',' << format_double(p.lambda0) << ',' << format_double(p.lambda1) << ','
           << format_double(p.lambda2) << ',' << format_double(p.lambda) << ',' << v << ','
           << (i == res.chosen_index ? 1 : 0) << '\n';
        std::cout << (i == res.chosen_index ? "* " : "  ") << "lambda0=" << p.lambda0 << " lambda1=" << p.lambda1
                  << " lambda2=" << p.lambda2 << " lambda=" << p.lambda << "  validation rmse "
                  << (v.empty() ? "-" : fmt(res.validation_rmse[i])) << "\n";
    }
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical multitask regression: fit, benchmark and generate data"};
    app.set_version_flag("--version", library_version());
    app.require_subcommand(1);

    CommonOptions bench_opts, fit_opts, synth_opts, grid_opts;

    auto* bench = app.add_subcommand("bench", "run the moving-window comparison and write report CSVs");
    add_common(bench, bench_opts, true);

    auto* fit = app.add_subcommand("fit", "fit HMTL on the whole table and save the model");
    add_common(fit, fit_opts, false);
    std::optional<double> l0, l1, l2;
    fit->add_option("--lambda0", l0, "skip grid search and use these hyperparameters");
    fit->add_option("--lambda1", l1);
    fit->add_option("--lambda2", l2);

    auto* synth = app.add_subcommand("synth", "write a synthetic gridded climate CSV and grid file");
    add_common(synth, synth_opts, false);

    auto* gridsearch = app.add_subcommand("gridsearch", "temporal hold-out selection over the configured grid");
    add_common(gridsearch, grid_opts, false);
    std::string method = "hmtl";
    gridsearch->add_option("-m,--method", method, "hmtl, mssl or s2m2r");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*bench)
            return run_bench(bench_opts);
        if (*fit)
            return run_fit(fit_opts, l0, l1, l2);
        if (*synth)
            return run_synth(synth_opts);
        if (*gridsearch)
            return run_gridsearch(grid_opts, method);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
