#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hmtl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error hierarchy. Every failure raised by the library derives from Error so
// callers (the experiment runner in particular) can degrade a single cell
// without aborting a whole sweep.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (dimension mismatch, non-finite values).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Mathematically undefined evaluation, e.g. log-determinant of a matrix
/// that is not positive definite.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An iterative solver could not produce a usable iterate. Carries the last
/// iterate it had so callers can inspect it.
class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, Matrix last_iterate)
        : Error(what), last_iterate_(std::move(last_iterate)) {}
    const Matrix& last_iterate() const noexcept { return last_iterate_; }

private:
    Matrix last_iterate_;
};

/// Data file could not be parsed. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// One regression problem: rows of X are timestamps, columns are ESMs.
struct SubTaskData {
    Matrix X;
    Vector y;

    Index n() const noexcept { return X.rows(); }
    Index d() const noexcept { return X.cols(); }
};

using SuperTask = std::vector<SubTaskData>;

/// T super-tasks, each holding the same number m of sub-tasks over a shared d.
struct HierarchicalDataset {
    std::vector<SuperTask> super_tasks;

    Index T() const noexcept { return static_cast<Index>(super_tasks.size()); }
    Index m() const noexcept { return super_tasks.empty() ? 0 : static_cast<Index>(super_tasks.front().size()); }
    Index d() const noexcept {
        return (super_tasks.empty() || super_tasks.front().empty()) ? 0 : super_tasks.front().front().d();
    }
};

/// Column k of thetas[t] is the weight vector of sub-task k in super-task t.
struct WeightSet {
    std::vector<Matrix> thetas;
};

struct PrecisionSet {
    std::vector<Matrix> omegas;
};

struct Hyperparams {
    double lambda0 = 0.0;  // trace coupling between weights and precision
    double lambda1 = 0.0;  // elementwise off-diagonal sparsity
    double lambda2 = 0.0;  // group coupling of off-diagonals across super-tasks
};

struct FitReport {
    std::vector<double> objective_trace;  // after each outer iteration
    double initial_objective = 0.0;
    int outer_iterations = 0;
    std::vector<int> admm_iterations;     // per outer iteration
    std::vector<int> theta_iterations;    // per outer iteration, summed over super-tasks
    int omega_rejections = 0;             // omega-step candidates kept out by the descent check
    double min_omega_eigenvalue = 0.0;    // smallest eigenvalue over every ADMM omega iterate
    bool converged = false;
    double elapsed_seconds = 0.0;
};

struct HmtlModel {
    WeightSet weights;
    PrecisionSet precisions;
    Hyperparams hyper;
    FitReport report;
};

// Validation helpers shared across modules. They throw InvalidInput.
void validate(const SubTaskData& task);
void validate(const HierarchicalDataset& data);
void validate(const Hyperparams& h);
void validate_weights(const HierarchicalDataset& data, const WeightSet& w);
void validate_precisions(const HierarchicalDataset& data, const PrecisionSet& p);

bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);

}  // namespace hmtl
