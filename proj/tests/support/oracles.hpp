#pragma once

// Slow, independent reference computations used only by the tests. None of
// these call into the library's solvers.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hmtl/model_core.hpp"
#include "hmtl/types.hpp"

namespace oracle {

using hmtl::Index;
using hmtl::Matrix;
using hmtl::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            a(i, j) = u(rng);
    return a;
}

inline Vector random_vector(Index n, std::mt19937_64& rng) { return random_matrix(n, 1, rng).col(0); }

// Symmetric positive definite: BᵀB/k + shift·I.
inline Matrix random_spd(Index m, std::mt19937_64& rng, double shift = 0.1) {
    const Matrix b = random_matrix(m + 2, m, rng);
    Matrix s = b.transpose() * b / static_cast<double>(m + 2);
    s.diagonal().array() += shift;
    return 0.5 * (s + s.transpose());
}

inline hmtl::SuperTask random_super_task(Index m, Index d, Index n, std::mt19937_64& rng) {
    hmtl::SuperTask tasks;
    for (Index k = 0; k < m; ++k)
        tasks.push_back({random_matrix(n, d, rng), random_vector(n, rng)});
    return tasks;
}

inline double log_det_eig(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    double s = 0.0;
    for (Index i = 0; i < a.rows(); ++i)
        s += std::log(eig.eigenvalues()(i));
    return s;
}

// Straight-line evaluation of every term of the hierarchical cost.
inline double objective_terms(const hmtl::HierarchicalDataset& data, const hmtl::WeightSet& w,
                              const hmtl::PrecisionSet& p, const hmtl::Hyperparams& h) {
    double total = 0.0;
    const Index m = data.m();
    const Index d = data.d();
    for (std::size_t t = 0; t < data.super_tasks.size(); ++t) {
        const Matrix& theta = w.thetas[t];
        const Matrix& omega = p.omegas[t];
        for (Index k = 0; k < m; ++k) {
            const auto& task = data.super_tasks[t][static_cast<std::size_t>(k)];
            for (Index i = 0; i < task.X.rows(); ++i) {
                double pred = 0.0;
                for (Index j = 0; j < d; ++j)
                    pred += task.X(i, j) * theta(j, k);
                total += (pred - task.y(i)) * (pred - task.y(i));
            }
        }
        total -= log_det_eig(omega);
        double tr = 0.0;
        for (Index a = 0; a < m; ++a)
            for (Index b = 0; b < m; ++b) {
                double s_ab = 0.0;
                for (Index j = 0; j < d; ++j)
                    s_ab += theta(j, a) * theta(j, b);
                tr += s_ab / static_cast<double>(d) * omega(b, a);
            }
        total += h.lambda0 * tr;
    }
    for (Index a = 0; a < m; ++a)
        for (Index b = 0; b < m; ++b) {
            if (a == b)
                continue;
            double sq = 0.0;
            for (const auto& omega : p.omegas) {
                total += h.lambda1 * std::abs(omega(a, b));
                sq += omega(a, b) * omega(a, b);
            }
            total += h.lambda2 * std::sqrt(sq);
        }
    return total;
}

// Central differences of a scalar function of a matrix argument.
inline Matrix finite_difference(const std::function<double(const Matrix&)>& f, const Matrix& x, double step = 1e-6) {
    Matrix g(x.rows(), x.cols());
    Matrix xp = x;
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = 0; i < x.rows(); ++i) {
            const double orig = xp(i, j);
            xp(i, j) = orig + step;
            const double fp = f(xp);
            xp(i, j) = orig - step;
            const double fm = f(xp);
            xp(i, j) = orig;
            g(i, j) = (fp - fm) / (2.0 * step);
        }
    return g;
}

// Minimizer of Σ_k ‖X_k θ_k − y_k‖² + (λ₀/d) tr(Θ Ω Θᵀ) from the dense stacked
// normal equations over vec(Θ) (column-major).
inline Matrix dense_theta_solution(const hmtl::SuperTask& tasks, const Matrix& omega, double lambda0) {
    const Index m = static_cast<Index>(tasks.size());
    const Index d = tasks.front().X.cols();
    Matrix h = Matrix::Zero(d * m, d * m);
    Vector b(d * m);
    for (Index k = 0; k < m; ++k) {
        const auto& task = tasks[static_cast<std::size_t>(k)];
        h.block(k * d, k * d, d, d) += 2.0 * task.X.transpose() * task.X;
        b.segment(k * d, d) = 2.0 * task.X.transpose() * task.y;
    }
    for (Index k = 0; k < m; ++k)
        for (Index l = 0; l < m; ++l)
            h.block(k * d, l * d, d, d).diagonal().array() += 2.0 * lambda0 / static_cast<double>(d) * omega(k, l);
    const Vector x = h.fullPivLu().solve(b);
    return Eigen::Map<const Matrix>(x.data(), d, m);
}

struct GlassoSolution {
    Matrix omega;
    double stationarity = 0.0;  // subgradient residual, ∞-norm
    int iterations = 0;
};

// Subgradient stationarity of −log|Ω| + λ₀ tr(SΩ) + λ₁ Σ_{k≠j} |Ω_kj|.
inline double glasso_stationarity(const Matrix& omega, const Matrix& s, double lambda0, double lambda1) {
    const Matrix g = lambda0 * s - omega.inverse();
    double worst = 0.0;
    for (Index i = 0; i < omega.rows(); ++i)
        for (Index j = 0; j < omega.cols(); ++j) {
            double r;
            if (i == j)
                r = std::abs(g(i, j));
            else if (omega(i, j) != 0.0)
                r = std::abs(g(i, j) + lambda1 * (omega(i, j) > 0.0 ? 1.0 : -1.0));
            else
                r = std::max(std::abs(g(i, j)) - lambda1, 0.0);
            worst = std::max(worst, r);
        }
    return worst;
}

// Proximal gradient on the smooth part with backtracking that keeps the
// iterate positive definite. Slow but simple.
inline GlassoSolution glasso_proximal_gradient(const Matrix& s, double lambda0, double lambda1, int max_iters = 200000,
                                               double tol = 1e-9) {
    const Index m = s.rows();
    auto smooth = [&](const Matrix& om) {
        Eigen::LLT<Matrix> llt(om);
        if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 0.0)
            return std::numeric_limits<double>::infinity();
        return -2.0 * llt.matrixLLT().diagonal().array().log().sum() + lambda0 * (s.cwiseProduct(om)).sum();
    };
    auto prox = [&](const Matrix& a, double t) {
        Matrix out = a;
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j)
                if (i != j) {
                    const double mag = std::abs(a(i, j)) - t * lambda1;
                    out(i, j) = mag > 0.0 ? std::copysign(mag, a(i, j)) : 0.0;
                }
        return out;
    };
    Matrix omega = Matrix::Identity(m, m);
    // Start on the diagonal solution scale.
    for (Index i = 0; i < m; ++i)
        omega(i, i) = 1.0 / (lambda0 * s(i, i));
    GlassoSolution out;
    double step = 1.0;
    for (int it = 0; it < max_iters; ++it) {
        const Matrix grad = lambda0 * s - omega.inverse();
        const double f = smooth(omega);
        Matrix next;
        step = std::min(step * 2.0, 1e3);
        for (;;) {
            next = prox(omega - step * grad, step);
            next = hmtl::symmetrize(next);
            const Matrix diff = next - omega;
            const double fn = smooth(next);
            if (std::isfinite(fn) && fn <= f + grad.cwiseProduct(diff).sum() + diff.squaredNorm() / (2.0 * step))
                break;
            step *= 0.5;
        }
        const double change = (next - omega).lpNorm<Eigen::Infinity>();
        omega = next;
        out.iterations = it + 1;
        if (change < tol)
            break;
    }
    out.omega = omega;
    out.stationarity = glasso_stationarity(omega, s, lambda0, lambda1);
    return out;
}

}  // namespace oracle
