#include "hmtl/model_core.hpp"

#include <cmath>
#include <string>

namespace hmtl {

bool all_finite(const Matrix& a) { return a.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

void validate(const SubTaskData& task) {
    if (task.n() < 1 || task.d() < 1)
        throw InvalidInput("sub-task needs n >= 1 and d >= 1");
    if (task.X.rows() != task.y.size())
        throw InvalidInput("sub-task X has " + std::to_string(task.X.rows()) + " rows but y has " +
                           std::to_string(task.y.size()) + " entries");
    if (!task.X.allFinite() || !task.y.allFinite())
        throw InvalidInput("sub-task contains non-finite values");
}

void validate(const HierarchicalDataset& data) {
    if (data.T() < 1)
        throw InvalidInput("dataset needs at least one super-task");
    const Index m = data.m();
    const Index d = data.d();
    if (m < 1)
        throw InvalidInput("super-tasks need at least one sub-task");
    for (Index t = 0; t < data.T(); ++t) {
        const auto& st = data.super_tasks[static_cast<std::size_t>(t)];
        if (static_cast<Index>(st.size()) != m)
            throw InvalidInput("super-task " + std::to_string(t) + " has " + std::to_string(st.size()) +
                               " sub-tasks, expected " + std::to_string(m));
        for (const auto& task : st) {
            validate(task);
            if (task.d() != d)
                throw InvalidInput("sub-task dimension " + std::to_string(task.d()) + " differs from " +
                                   std::to_string(d));
        }
    }
}

void validate(const Hyperparams& h) {
    if (!(h.lambda0 >= 0.0) || !(h.lambda1 >= 0.0) || !(h.lambda2 >= 0.0))
        throw InvalidInput("regularization parameters must be nonnegative and finite");
    if (!std::isfinite(h.lambda0) || !std::isfinite(h.lambda1) || !std::isfinite(h.lambda2))
        throw InvalidInput("regularization parameters must be finite");
}

void validate_weights(const HierarchicalDataset& data, const WeightSet& w) {
    if (static_cast<Index>(w.thetas.size()) != data.T())
        throw InvalidInput("weight set has wrong number of super-tasks");
    for (const auto& th : w.thetas) {
        if (th.rows() != data.d() || th.cols() != data.m())
            throw InvalidInput("weight matrix must be d x m");
        if (!th.allFinite())
            throw InvalidInput("weight matrix contains non-finite values");
    }
}

void validate_precisions(const HierarchicalDataset& data, const PrecisionSet& p) {
    if (static_cast<Index>(p.omegas.size()) != data.T())
        throw InvalidInput("precision set has wrong number of super-tasks");
    for (const auto& om : p.omegas)
        if (om.rows() != data.m() || om.cols() != data.m())
            throw InvalidInput("precision matrix must be m x m");
}

Matrix sample_covariance(const Matrix& theta) {
    if (theta.rows() < 1)
        throw InvalidInput("sample_covariance needs d >= 1");
    if (!theta.allFinite())
        throw InvalidInput("sample_covariance: non-finite entries in weights");
    Matrix s = theta.transpose() * theta;
    s /= static_cast<double>(theta.rows());
    return symmetrize(s);
}

double log_det_spd(const Matrix& a) {
    if (!a.allFinite())
        throw DomainError("log-determinant of a non-finite matrix");
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success)
        throw DomainError("log-determinant undefined: matrix is not positive definite");
    const auto& l = llt.matrixLLT();
    double acc = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
        const double lii = l(i, i);
        if (!(lii > 0.0))
            throw DomainError("log-determinant undefined: matrix is not positive definite");
        acc += std::log(lii);
    }
    return 2.0 * acc;
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double group_penalty(std::span<const Matrix> omegas, double lambda1, double lambda2) {
    if (omegas.empty())
        return 0.0;
    const Index m = omegas.front().rows();
    double l1 = 0.0;
    double group = 0.0;
    for (Index k = 0; k < m; ++k) {
        for (Index j = 0; j < m; ++j) {
            if (k == j)
                continue;
            double sq = 0.0;
            for (const auto& om : omegas) {
                l1 += std::abs(om(k, j));
                sq += om(k, j) * om(k, j);
            }
            group += std::sqrt(sq);
        }
    }
    return lambda1 * l1 + lambda2 * group;
}

double squared_loss(const SuperTask& tasks, const Matrix& theta) {
    double loss = 0.0;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const auto& task = tasks[k];
        loss += (task.X * theta.col(static_cast<Index>(k)) - task.y).squaredNorm();
    }
    return loss;
}

double hmtl_objective(const HierarchicalDataset& data, const WeightSet& w, const PrecisionSet& p,
                      const Hyperparams& h) {
    validate(h);
    validate_weights(data, w);
    validate_precisions(data, p);
    double total = 0.0;
    for (Index t = 0; t < data.T(); ++t) {
        const auto ut = static_cast<std::size_t>(t);
        const Matrix& theta = w.thetas[ut];
        const Matrix& omega = p.omegas[ut];
        const Matrix s = sample_covariance(theta);
        total += squared_loss(data.super_tasks[ut], theta);
        total += -log_det_spd(omega);
        total += h.lambda0 * (s.cwiseProduct(omega)).sum();
    }
    total += group_penalty(p.omegas, h.lambda1, h.lambda2);
    return total;
}

Vector predict(const Matrix& X, const Vector& theta) {
    if (X.cols() != theta.size())
        throw InvalidInput("predict: X has " + std::to_string(X.cols()) + " columns but theta has " +
                           std::to_string(theta.size()) + " entries");
    return X * theta;
}

double rmse(const Vector& pred, const Vector& obs) {
    if (pred.size() != obs.size())
        throw InvalidInput("rmse: length mismatch");
    if (pred.size() == 0)
        throw InvalidInput("rmse: empty input");
    return std::sqrt((pred - obs).squaredNorm() / static_cast<double>(pred.size()));
}

}  // namespace hmtl
