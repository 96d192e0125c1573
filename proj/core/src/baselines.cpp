#include "hmtl/baselines.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace hmtl {

namespace {

Index common_dimension(const SuperTask& tasks) {
    if (tasks.empty())
        throw InvalidInput("baseline: super-task has no sub-tasks");
    const Index d = tasks.front().d();
    for (const auto& task : tasks) {
        if (task.n() < 1 || task.d() != d || task.X.rows() != task.y.size())
            throw InvalidInput("baseline: sub-tasks must share d and have n >= 1 with matching y");
    }
    return d;
}

// Stacked systems up to this many unknowns are factored densely.
constexpr Index kDenseLimit = 2000;

}  // namespace

Matrix fit_ols(const SuperTask& tasks) {
    const Index d = common_dimension(tasks);
    Matrix theta(d, static_cast<Index>(tasks.size()));
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(tasks[k].X);
        theta.col(static_cast<Index>(k)) = cod.solve(tasks[k].y);
    }
    return theta;
}

Vector predict_mma(const Matrix& X) {
    if (X.cols() < 1)
        throw InvalidInput("predict_mma: need at least one ESM column");
    return X.rowwise().mean();
}

Index select_best_esm(const SubTaskData& task) {
    if (task.n() < 1 || task.d() < 1 || task.X.rows() != task.y.size())
        throw InvalidInput("select_best_esm: need n >= 1, d >= 1 and matching y");
    Index best = 0;
    double best_mse = 0.0;
    for (Index j = 0; j < task.d(); ++j) {
        const double mse = (task.X.col(j) - task.y).squaredNorm() / static_cast<double>(task.n());
        if (j == 0 || mse < best_mse) {
            best = j;
            best_mse = mse;
        }
    }
    return best;
}

Matrix build_grid_laplacian(const GridSpec& grid) {
    if (grid.rows < 1 || grid.cols < 1)
        throw InvalidInput("grid must have at least one row and one column");
    const Index m = grid.size();
    Matrix lap = Matrix::Zero(m, m);
    auto link = [&](Index a, Index b) {
        lap(a, b) -= 1.0;
        lap(b, a) -= 1.0;
        lap(a, a) += 1.0;
        lap(b, b) += 1.0;
    };
    for (Index r = 0; r < grid.rows; ++r) {
        for (Index c = 0; c < grid.cols; ++c) {
            if (c + 1 < grid.cols)
                link(grid.index(r, c), grid.index(r, c + 1));
            if (r + 1 < grid.rows)
                link(grid.index(r, c), grid.index(r + 1, c));
        }
    }
    return lap;
}

Matrix fit_s2m2r(const SuperTask& tasks, const Matrix& laplacian, double lambda) {
    if (!(lambda >= 0.0))
        throw InvalidInput("fit_s2m2r: lambda must be nonnegative");
    const Index d = common_dimension(tasks);
    const auto m = static_cast<Index>(tasks.size());
    if (laplacian.rows() != m || laplacian.cols() != m)
        throw InvalidInput("fit_s2m2r: Laplacian must be m x m (" + std::to_string(m) + ")");
    if (lambda == 0.0)
        return fit_ols(tasks);

    const Index n = d * m;
    Vector rhs(n);
    std::vector<Matrix> grams(static_cast<std::size_t>(m));
    for (Index k = 0; k < m; ++k) {
        const auto& task = tasks[static_cast<std::size_t>(k)];
        grams[static_cast<std::size_t>(k)] = task.X.transpose() * task.X;
        rhs.segment(k * d, d) = task.X.transpose() * task.y;
    }

    Vector sol;
    if (n <= kDenseLimit) {
        Matrix sys = Matrix::Zero(n, n);
        for (Index k = 0; k < m; ++k) {
            sys.block(k * d, k * d, d, d) = grams[static_cast<std::size_t>(k)];
            for (Index j = 0; j < m; ++j)
                if (laplacian(k, j) != 0.0)
                    sys.block(k * d, j * d, d, d).diagonal().array() += lambda * laplacian(k, j);
        }
        Eigen::LLT<Matrix> llt(sys);
        if (llt.info() == Eigen::Success)
            sol = llt.solve(rhs);
        else
            sol = Eigen::CompleteOrthogonalDecomposition<Matrix>(sys).solve(rhs);
    } else {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<std::size_t>(m * d * d + 5 * m * d));
        for (Index k = 0; k < m; ++k) {
            const Matrix& g = grams[static_cast<std::size_t>(k)];
            for (Index a = 0; a < d; ++a)
                for (Index b = 0; b < d; ++b)
                    trips.emplace_back(k * d + a, k * d + b, g(a, b));
            for (Index j = 0; j < m; ++j)
                if (laplacian(k, j) != 0.0)
                    for (Index a = 0; a < d; ++a)
                        trips.emplace_back(k * d + a, j * d + a, lambda * laplacian(k, j));
        }
        Eigen::SparseMatrix<double> sys(n, n);
        sys.setFromTriplets(trips.begin(), trips.end());
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(1e-12);
        cg.setMaxIterations(static_cast<int>(10 * n));
        cg.compute(sys);
        sol = cg.solve(rhs);
        const double resid = (sys * sol - rhs).norm();
        if (!(resid <= 1e-8 * std::max(1.0, rhs.norm())))
            throw SolverFailure("fit_s2m2r: conjugate gradients did not reach 1e-8 residual",
                                Eigen::Map<const Matrix>(sol.data(), d, m));
    }
    return Eigen::Map<const Matrix>(sol.data(), d, m);
}

}  // namespace hmtl
