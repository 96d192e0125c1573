#include "hmtl/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "hmtl/model_core.hpp"
#include "hmtl/parallel.hpp"

namespace hmtl {

WeightSet initial_weights(Index T, Index d, Index m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    WeightSet w;
    w.thetas.reserve(static_cast<std::size_t>(T));
    for (Index t = 0; t < T; ++t) {
        Matrix theta(d, m);
        // Column-major fill: sub-task by sub-task.
        for (Index k = 0; k < m; ++k)
            for (Index i = 0; i < d; ++i)
                theta(i, k) = unif(rng);
        w.thetas.push_back(std::move(theta));
    }
    return w;
}

namespace {

HmtlModel alternate(const HierarchicalDataset& data, const Hyperparams& h, const DriverConfig& cfg,
                    const ThetaSolveConfig& theta_cfg, AdmmConfig admm_cfg, WeightSet init) {
    const auto T = static_cast<std::size_t>(data.T());
    const Index m = data.m();
    const bool skip_omega = h.lambda0 == 0.0;
    admm_cfg.threads = cfg.threads;

    HmtlModel model;
    model.hyper = h;
    model.weights = std::move(init);
    model.precisions.omegas.assign(T, Matrix::Identity(m, m));
    FitReport& rep = model.report;
    rep.min_omega_eigenvalue = std::numeric_limits<double>::infinity();

    AdmmState admm = AdmmState::identity(data.T(), m);
    rep.initial_objective = hmtl_objective(data, model.weights, model.precisions, h);
    double prev = rep.initial_objective;

    std::vector<int> theta_iters(T);
    std::vector<Matrix> s_set(T);
    for (int it = 1; it <= cfg.max_outer_iters; ++it) {
        parallel_for(T, cfg.threads, [&](std::size_t t) {
            auto res = solve_theta_step(data.super_tasks[t], model.precisions.omegas[t], h.lambda0,
                                        model.weights.thetas[t], theta_cfg);
            model.weights.thetas[t] = std::move(res.theta);
            theta_iters[t] = res.iterations;
        });
        int theta_total = 0;
        for (int n : theta_iters)
            theta_total += n;
        rep.theta_iterations.push_back(theta_total);

        int admm_iters = 0;
        if (!skip_omega) {
            for (std::size_t t = 0; t < T; ++t)
                s_set[t] = sample_covariance(model.weights.thetas[t]);
            std::optional<OmegaStepResult> step;
            try {
                step = solve_omega_step(s_set, h, admm_cfg, &admm);
            } catch (const DomainError&) {
                // Inexact ADMM ended on a non-PD iterate; treated as a rejected candidate.
            }
            if (step) {
                admm_iters = step->report.iterations;
                rep.min_omega_eigenvalue = std::min(rep.min_omega_eigenvalue, step->report.min_omega_eigenvalue);
            }
            // Keep the previous precisions if the inexact ADMM answer is worse
            // on the current subproblem; this keeps the outer trace monotone.
            if (step && omega_step_objective(s_set, step->precisions.omegas, h) <=
                            omega_step_objective(s_set, model.precisions.omegas, h))
                model.precisions = std::move(step->precisions);
            else
                ++rep.omega_rejections;
        }
        rep.admm_iterations.push_back(admm_iters);

        const double obj = hmtl_objective(data, model.weights, model.precisions, h);
        rep.objective_trace.push_back(obj);
        rep.outer_iterations = it;
        if (!std::isfinite(obj)) {
            std::ostringstream os;
            os << "hmtl: non-finite objective at outer iteration " << it << " (previous " << prev
               << ", lambda0=" << h.lambda0 << ", lambda1=" << h.lambda1 << ", lambda2=" << h.lambda2 << ")";
            throw SolverFailure(os.str(), model.weights.thetas.front());
        }
        if (std::abs(obj - prev) / std::max(1.0, std::abs(prev)) < cfg.outer_tol) {
            rep.converged = true;
            break;
        }
        prev = obj;
    }
    if (!std::isfinite(rep.min_omega_eigenvalue))
        rep.min_omega_eigenvalue = 1.0;  // precisions never left the identity
    return model;
}

void check_configs(const DriverConfig& cfg, const ThetaSolveConfig& theta_cfg) {
    if (!(cfg.outer_tol > 0.0) || cfg.max_outer_iters < 1)
        throw InvalidInput("driver: outer_tol must be > 0 and max_outer_iters >= 1");
    if (!(theta_cfg.grad_tol > 0.0) || theta_cfg.max_iters < 1)
        throw InvalidInput("driver: theta grad_tol must be > 0 and max_iters >= 1");
}

}  // namespace

HmtlModel fit_hmtl(const HierarchicalDataset& data, const Hyperparams& h, const DriverConfig& cfg,
                   const ThetaSolveConfig& theta_cfg, const AdmmConfig& admm_cfg, const std::optional<WeightSet>& init) {
    const auto start = std::chrono::steady_clock::now();
    validate(data);
    validate(h);
    check_configs(cfg, theta_cfg);
    WeightSet w0 = init ? *init : initial_weights(data.T(), data.d(), data.m(), cfg.rng_seed);
    validate_weights(data, w0);

    HmtlModel model;
    if (h.lambda2 != 0.0 || data.T() == 1) {
        model = alternate(data, h, cfg, theta_cfg, admm_cfg, std::move(w0));
    } else {
        const auto T = static_cast<std::size_t>(data.T());
        std::vector<HmtlModel> parts(T);
        DriverConfig inner = cfg;
        inner.threads = 1;
        parallel_for(T, cfg.threads, [&](std::size_t t) {
            HierarchicalDataset single{{data.super_tasks[t]}};
            parts[t] = alternate(single, h, inner, theta_cfg, admm_cfg, WeightSet{{w0.thetas[t]}});
        });

        model.hyper = h;
        FitReport& rep = model.report;
        rep.converged = true;
        rep.min_omega_eigenvalue = std::numeric_limits<double>::infinity();
        for (const auto& p : parts) {
            model.weights.thetas.push_back(p.weights.thetas.front());
            model.precisions.omegas.push_back(p.precisions.omegas.front());
            rep.outer_iterations = std::max(rep.outer_iterations, p.report.outer_iterations);
            rep.converged = rep.converged && p.report.converged;
            rep.min_omega_eigenvalue = std::min(rep.min_omega_eigenvalue, p.report.min_omega_eigenvalue);
            rep.omega_rejections += p.report.omega_rejections;
            rep.initial_objective += p.report.initial_objective;
        }
        const auto iters = static_cast<std::size_t>(rep.outer_iterations);
        rep.objective_trace.assign(iters, 0.0);
        rep.admm_iterations.assign(iters, 0);
        rep.theta_iterations.assign(iters, 0);
        for (const auto& p : parts) {
            const auto& pr = p.report;
            for (std::size_t i = 0; i < iters; ++i) {
                // Finished super-tasks contribute their final value.
                rep.objective_trace[i] += pr.objective_trace[std::min(i, pr.objective_trace.size() - 1)];
                if (i < pr.admm_iterations.size()) {
                    rep.admm_iterations[i] += pr.admm_iterations[i];
                    rep.theta_iterations[i] += pr.theta_iterations[i];
                }
            }
        }
    }
    model.report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return model;
}

HmtlModel fit_mssl(const SuperTask& super_task, const Hyperparams& h, const DriverConfig& cfg,
                   const ThetaSolveConfig& theta_cfg, const AdmmConfig& admm_cfg, const std::optional<Matrix>& init) {
    Hyperparams decoupled = h;
    decoupled.lambda2 = 0.0;
    HierarchicalDataset single{{super_task}};
    std::optional<WeightSet> w0;
    if (init)
        w0 = WeightSet{{*init}};
    return fit_hmtl(single, decoupled, cfg, theta_cfg, admm_cfg, w0);
}

}  // namespace hmtl
