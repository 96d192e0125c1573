#include "hmtl/theta_solver.hpp"

#include <algorithm>
#include <string>

#include "hmtl/lbfgs.hpp"
#include "hmtl/model_core.hpp"

namespace hmtl {

namespace {

void check_dims(const SuperTask& tasks, const Matrix& theta, const Matrix& omega) {
    const Index m = static_cast<Index>(tasks.size());
    if (m == 0)
        throw InvalidInput("theta step: super-task has no sub-tasks");
    if (theta.cols() != m)
        throw InvalidInput("theta step: weight matrix has " + std::to_string(theta.cols()) + " columns, expected " +
                           std::to_string(m));
    if (omega.rows() != m || omega.cols() != m)
        throw InvalidInput("theta step: precision matrix must be m x m");
    for (const auto& task : tasks) {
        if (task.d() != theta.rows())
            throw InvalidInput("theta step: sub-task dimension does not match weight rows");
        if (task.X.rows() != task.y.size())
            throw InvalidInput("theta step: X and y disagree on sample count");
    }
}

}  // namespace

std::pair<double, Matrix> theta_value_grad(const SuperTask& tasks, const Matrix& theta, const Matrix& omega,
                                           double lambda0) {
    check_dims(tasks, theta, omega);
    const double d = static_cast<double>(theta.rows());
    Matrix grad(theta.rows(), theta.cols());
    double value = 0.0;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const auto col = static_cast<Index>(k);
        const Vector r = tasks[k].X * theta.col(col) - tasks[k].y;
        value += r.squaredNorm();
        grad.col(col) = 2.0 * tasks[k].X.transpose() * r;
    }
    const Matrix theta_omega = theta * omega;
    value += (lambda0 / d) * theta.cwiseProduct(theta_omega).sum();
    grad += (2.0 * lambda0 / d) * theta_omega;
    return {value, std::move(grad)};
}

ThetaObjective::ThetaObjective(const SuperTask& tasks, Matrix omega, double lambda0)
    : d_(tasks.empty() ? 0 : tasks.front().d()),
      m_(static_cast<Index>(tasks.size())),
      omega_(symmetrize(omega)),
      lambda0_(lambda0) {
    check_dims(tasks, Matrix::Zero(d_, m_), omega_);
    gram_.reserve(tasks.size());
    xty_.reserve(tasks.size());
    yty_.reserve(tasks.size());
    for (const auto& task : tasks) {
        Matrix g = Matrix::Zero(d_, d_);
        g.selfadjointView<Eigen::Lower>().rankUpdate(task.X.transpose());
        gram_.push_back(g.selfadjointView<Eigen::Lower>());
        xty_.push_back(task.X.transpose() * task.y);
        yty_.push_back(task.y.squaredNorm());
    }
}

double ThetaObjective::value_grad(const Matrix& theta, Matrix& grad) const {
    grad.resize(d_, m_);
    double value = 0.0;
    for (Index k = 0; k < m_; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const Vector g_theta = gram_[uk] * theta.col(k);
        value += theta.col(k).dot(g_theta) - 2.0 * xty_[uk].dot(theta.col(k)) + yty_[uk];
        grad.col(k) = 2.0 * (g_theta - xty_[uk]);
    }
    const Matrix theta_omega = theta * omega_;
    const double scale = lambda0_ / static_cast<double>(d_);
    value += scale * theta.cwiseProduct(theta_omega).sum();
    grad += 2.0 * scale * theta_omega;
    return value;
}

std::vector<Eigen::LLT<Matrix>> ThetaObjective::block_factors() const {
    std::vector<Eigen::LLT<Matrix>> out;
    out.reserve(static_cast<std::size_t>(m_));
    const double scale = 2.0 * lambda0_ / static_cast<double>(d_);
    for (Index k = 0; k < m_; ++k) {
        Matrix block = 2.0 * gram_[static_cast<std::size_t>(k)];
        const double shift = scale * omega_(k, k);
        // Keep the block invertible when the data term is rank deficient.
        const double floor = 1e-8 * std::max(1.0, block.diagonal().maxCoeff());
        block.diagonal().array() += std::max(shift, floor);
        out.emplace_back(block);
    }
    return out;
}

double ThetaObjective::value(const Matrix& theta) const {
    Matrix grad;
    return value_grad(theta, grad);
}

ThetaStepResult solve_theta_step(const SuperTask& tasks, const Matrix& omega, double lambda0, const Matrix& init,
                                 const ThetaSolveConfig& cfg) {
    if (!(cfg.grad_tol > 0.0) || cfg.max_iters < 1)
        throw InvalidInput("theta step: grad_tol must be > 0 and max_iters >= 1");
    check_dims(tasks, init, omega);
    const ThetaObjective objective(tasks, omega, lambda0);
    const Index d = objective.d();
    const Index m = objective.m();

    ValueGradFn fn = [&](const Vector& x, Vector& g) {
        Eigen::Map<const Matrix> theta(x.data(), d, m);
        Matrix grad;
        const double v = objective.value_grad(theta, grad);
        g = Eigen::Map<const Vector>(grad.data(), grad.size());
        return v;
    };

    LbfgsOptions opts;
    opts.grad_tol = cfg.grad_tol;
    opts.max_iters = cfg.max_iters;
    opts.history_size = cfg.history_size;

    PreconditionFn precondition;
    std::vector<Eigen::LLT<Matrix>> factors;
    if (cfg.precondition) {
        factors = objective.block_factors();
        precondition = [&](const Vector& g) {
            Vector out(g.size());
            for (Index k = 0; k < m; ++k)
                out.segment(k * d, d) = factors[static_cast<std::size_t>(k)].solve(g.segment(k * d, d));
            return out;
        };
    }

    Vector x0 = Eigen::Map<const Vector>(init.data(), init.size());
    LbfgsResult res;
    try {
        res = lbfgs_minimize(fn, std::move(x0), opts, precondition);
    } catch (const SolverFailure& e) {
        Matrix last = Eigen::Map<const Matrix>(e.last_iterate().data(), d, m);
        throw SolverFailure(std::string("theta step: ") + e.what(), std::move(last));
    }

    ThetaStepResult out;
    out.theta = Eigen::Map<const Matrix>(res.x.data(), d, m);
    out.value = res.value;
    out.grad_inf_norm = res.grad_inf_norm;
    out.iterations = res.iterations;
    out.converged = res.converged;
    return out;
}

}  // namespace hmtl
