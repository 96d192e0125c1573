#include "hmtl/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace hmtl {

namespace {

struct Correction {
    Vector s;
    Vector y;
    double rho;
};

// Two-loop recursion: returns -H g.
Vector search_direction(const Vector& g, const std::deque<Correction>& mem, const PreconditionFn& precondition) {
    Vector q = g;
    std::vector<double> alpha(mem.size());
    for (std::size_t i = mem.size(); i-- > 0;) {
        alpha[i] = mem[i].rho * mem[i].s.dot(q);
        q -= alpha[i] * mem[i].y;
    }
    if (precondition) {
        q = precondition(q);
        if (!mem.empty()) {
            const auto& last = mem.back();
            const double yhy = last.y.dot(precondition(last.y));
            if (yhy > 0.0)
                q *= last.s.dot(last.y) / yhy;
        }
    } else if (!mem.empty()) {
        const auto& last = mem.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
        const double beta = mem[i].rho * mem[i].y.dot(q);
        q += (alpha[i] - beta) * mem[i].s;
    }
    return -q;
}

}  // namespace

LbfgsResult lbfgs_minimize(const ValueGradFn& fn, Vector x0, const LbfgsOptions& opts,
                           const PreconditionFn& precondition) {
    LbfgsResult res;
    res.x = std::move(x0);
    Vector g(res.x.size());
    res.value = fn(res.x, g);
    if (!std::isfinite(res.value) || !g.allFinite())
        throw SolverFailure("lbfgs: non-finite objective at the initial point", res.x);

    std::deque<Correction> mem;
    Vector x_trial(res.x.size());
    Vector g_trial(res.x.size());

    res.grad_inf_norm = g.size() ? g.lpNorm<Eigen::Infinity>() : 0.0;
    while (res.grad_inf_norm > opts.grad_tol && res.iterations < opts.max_iters) {
        Vector dir = search_direction(g, mem, precondition);
        double slope = g.dot(dir);
        if (!(slope < 0.0) && !mem.empty()) {
            // Curvature information went stale; restart from the initial metric.
            mem.clear();
            dir = search_direction(g, mem, precondition);
            slope = g.dot(dir);
        }
        if (!(slope < 0.0)) {
            dir = -g;
            slope = -g.squaredNorm();
        }
        double step = (mem.empty() && !precondition) ? std::min(1.0, 1.0 / std::max(res.grad_inf_norm, 1e-300)) : 1.0;

        bool accepted = false;
        double trial_value = res.value;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            x_trial = res.x + step * dir;
            trial_value = fn(x_trial, g_trial);
            if (!std::isfinite(trial_value))
                throw SolverFailure("lbfgs: non-finite objective during line search", res.x);
            if (trial_value <= res.value + opts.armijo_c * step * slope) {
                accepted = true;
                break;
            }
            step *= opts.shrink;
        }
        if (!accepted)
            break;  // no further decrease representable in floating point

        Correction c{x_trial - res.x, g_trial - g, 0.0};
        const double sy = c.s.dot(c.y);
        if (sy > 1e-12 * c.y.squaredNorm() && sy > 0.0) {
            c.rho = 1.0 / sy;
            mem.push_back(std::move(c));
            if (static_cast<int>(mem.size()) > opts.history_size)
                mem.pop_front();
        }
        res.x.swap(x_trial);
        g.swap(g_trial);
        res.value = trial_value;
        res.grad_inf_norm = g.lpNorm<Eigen::Infinity>();
        ++res.iterations;
    }
    res.converged = res.grad_inf_norm <= opts.grad_tol;
    return res;
}

}  // namespace hmtl
