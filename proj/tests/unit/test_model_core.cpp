#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "hmtl/model_core.hpp"
#include "oracles.hpp"

using namespace hmtl;

TEST_CASE("sample_covariance examples") {
    CHECK(sample_covariance(Matrix::Identity(2, 2)).isApprox(0.5 * Matrix::Identity(2, 2)));
    CHECK(sample_covariance(Matrix::Zero(3, 2)).isZero(0.0));
    Matrix theta(2, 2);
    theta << 1, 1, 1, -1;
    CHECK(sample_covariance(theta).isApprox(Matrix::Identity(2, 2)));

    Matrix bad = Matrix::Ones(2, 2);
    bad(0, 1) = std::nan("");
    CHECK_THROWS_AS(sample_covariance(bad), InvalidInput);
}

TEST_CASE("trace cyclicity of the coupling term") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix theta = oracle::random_matrix(6, 4, rng);
        const Matrix omega = oracle::random_spd(4, rng);
        const double lhs = (sample_covariance(theta) * omega).trace();
        const double rhs = (theta * omega * theta.transpose()).trace() / 6.0;
        CHECK(std::abs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("log_det_spd") {
    Matrix a(2, 2);
    a << 2, 0, 0, 3;
    CHECK(log_det_spd(a) == doctest::Approx(std::log(6.0)).epsilon(1e-14));
    Matrix neg = -Matrix::Identity(2, 2);
    CHECK_THROWS_AS(log_det_spd(neg), DomainError);
}

TEST_CASE("group_penalty") {
    Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
    a(0, 1) = a(1, 0) = 3.0;
    b(0, 1) = b(1, 0) = 4.0;
    a(0, 0) = 100.0;  // diagonal is unpenalized
    const std::vector<Matrix> set{a, b};
    // two off-diagonal positions, each |3|+|4| and norm 5
    CHECK(group_penalty(set, 1.0, 0.0) == doctest::Approx(14.0));
    CHECK(group_penalty(set, 0.0, 1.0) == doctest::Approx(10.0));
}

TEST_CASE("hmtl_objective scalar examples") {
    HierarchicalDataset data{{{SubTaskData{Matrix::Ones(1, 1), Vector::Zero(1)}}}};
    WeightSet w{{Matrix::Zero(1, 1)}};
    PrecisionSet p{{Matrix::Ones(1, 1)}};
    CHECK(hmtl_objective(data, w, p, {0.3, 0.7, 1.1}) == 0.0);

    w.thetas[0](0, 0) = 1.0;
    CHECK(hmtl_objective(data, w, p, {0.1, 0.0, 0.0}) == doctest::Approx(1.1).epsilon(1e-14));
}

TEST_CASE("hmtl_objective equals the term-by-term evaluation") {
    std::mt19937_64 rng(7);
    HierarchicalDataset data;
    WeightSet w;
    PrecisionSet p;
    for (int t = 0; t < 2; ++t) {
        data.super_tasks.push_back(oracle::random_super_task(3, 2, 5, rng));
        w.thetas.push_back(oracle::random_matrix(2, 3, rng));
        p.omegas.push_back(oracle::random_spd(3, rng));
    }
    const Hyperparams h{0.4, 0.2, 0.3};
    const double expected = oracle::objective_terms(data, w, p, h);
    CHECK(hmtl_objective(data, w, p, h) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("hmtl_objective with T=1 and no penalties is the single-task cost") {
    std::mt19937_64 rng(8);
    HierarchicalDataset data{{oracle::random_super_task(3, 4, 6, rng)}};
    WeightSet w{{oracle::random_matrix(4, 3, rng)}};
    PrecisionSet p{{oracle::random_spd(3, rng)}};
    const double lambda0 = 0.7;
    const Matrix& th = w.thetas[0];
    const double expected = squared_loss(data.super_tasks[0], th) - std::log(p.omegas[0].determinant()) +
                            lambda0 / 4.0 * (th * p.omegas[0] * th.transpose()).trace();
    CHECK(hmtl_objective(data, w, p, {lambda0, 0.0, 0.0}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("hmtl_objective is invariant under a joint sub-task permutation") {
    std::mt19937_64 rng(9);
    const Index m = 4;
    HierarchicalDataset data;
    WeightSet w;
    PrecisionSet p;
    for (int t = 0; t < 2; ++t) {
        data.super_tasks.push_back(oracle::random_super_task(m, 3, 5, rng));
        w.thetas.push_back(oracle::random_matrix(3, m, rng));
        p.omegas.push_back(oracle::random_spd(m, rng));
    }
    const Hyperparams h{0.5, 0.1, 0.2};
    std::vector<Index> perm{2, 0, 3, 1};
    HierarchicalDataset pd = data;
    WeightSet pw = w;
    PrecisionSet pp = p;
    for (std::size_t t = 0; t < 2; ++t)
        for (Index a = 0; a < m; ++a) {
            pd.super_tasks[t][static_cast<std::size_t>(a)] = data.super_tasks[t][static_cast<std::size_t>(perm[a])];
            pw.thetas[t].col(a) = w.thetas[t].col(perm[a]);
            for (Index b = 0; b < m; ++b)
                pp.omegas[t](a, b) = p.omegas[t](perm[a], perm[b]);
        }
    CHECK(hmtl_objective(pd, pw, pp, h) == doctest::Approx(hmtl_objective(data, w, p, h)).epsilon(1e-12));
}

TEST_CASE("hmtl_objective errors") {
    HierarchicalDataset data{{{SubTaskData{Matrix::Ones(2, 1), Vector::Zero(2)}}}};
    WeightSet w{{Matrix::Zero(1, 1)}};
    PrecisionSet p{{-Matrix::Ones(1, 1)}};
    CHECK_THROWS_AS(hmtl_objective(data, w, p, {}), DomainError);
    p.omegas[0](0, 0) = 1.0;
    CHECK_THROWS_AS(hmtl_objective(data, w, p, {-1.0, 0.0, 0.0}), InvalidInput);
    WeightSet wrong{{Matrix::Zero(2, 1)}};
    CHECK_THROWS_AS(hmtl_objective(data, wrong, p, {}), InvalidInput);
}

TEST_CASE("predict examples") {
    CHECK(predict(Matrix::Identity(3, 3), Vector::LinSpaced(3, 1, 3)).isApprox(Vector::LinSpaced(3, 1, 3)));
    CHECK(predict(Matrix::Ones(4, 2), Vector::Zero(2)).isZero(0.0));
    Matrix x(2, 2);
    x << 1, 1, 2, 0;
    Vector th(2);
    th << 0.5, 0.5;
    CHECK(predict(x, th).isApprox(Vector::Ones(2)));
    CHECK_THROWS_AS(predict(x, Vector::Zero(3)), InvalidInput);
}

TEST_CASE("rmse examples") {
    Vector a(2);
    a << 3, 4;
    CHECK(rmse(a, a) == 0.0);
    CHECK(rmse(Vector::Zero(2), a) == doctest::Approx(std::sqrt(12.5)));
    CHECK(rmse(Vector::Ones(1), Vector::Zero(1)) == 1.0);
    CHECK_THROWS_AS(rmse(Vector::Zero(2), Vector::Zero(3)), InvalidInput);
    CHECK_THROWS_AS(rmse(Vector(0), Vector(0)), InvalidInput);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 5; ++i)
        CHECK(rmse(oracle::random_vector(5, rng), oracle::random_vector(5, rng)) > 0.0);
}
