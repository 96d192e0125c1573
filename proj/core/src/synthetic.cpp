#include "hmtl/synthetic.hpp"

#include <cmath>
#include <numbers>

namespace hmtl {

Vector Rng::normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i)
        v(i) = normal();
    return v;
}

Matrix make_group_scale_matrix(Index m, Index groups, double within, double jitter) {
    if (m < 1 || groups < 1 || groups > m)
        throw InvalidInput("make_group_scale_matrix: need 1 <= groups <= m");
    if (!(within >= 0.0) || !(within < 1.0))
        throw InvalidInput("make_group_scale_matrix: within-group value must lie in [0, 1)");
    if (!(jitter >= 0.0))
        throw InvalidInput("make_group_scale_matrix: jitter must be nonnegative");
    Matrix scale = Matrix::Zero(m, m);
    const Index base = m / groups;
    const Index extra = m % groups;
    Index start = 0;
    for (Index g = 0; g < groups; ++g) {
        const Index size = base + (g < extra ? 1 : 0);
        scale.block(start, start, size, size).setConstant(within);
        start += size;
    }
    scale.diagonal().setConstant(1.0 + jitter);
    return scale;
}

Matrix sample_wishart(const Matrix& scale, Index dof, Rng& rng, double ridge) {
    if (dof < 1)
        throw InvalidInput("sample_wishart: dof must be >= 1");
    if (scale.rows() != scale.cols() || !scale.allFinite())
        throw InvalidInput("sample_wishart: scale must be a finite square matrix");
    Eigen::LLT<Matrix> llt(scale);
    if (llt.info() != Eigen::Success)
        throw InvalidInput("sample_wishart: scale matrix is not positive definite");
    const Matrix chol = llt.matrixL();
    const Index m = scale.rows();
    Matrix g(m, dof);
    for (Index i = 0; i < dof; ++i)
        g.col(i) = chol * rng.normal_vector(m);
    Matrix w = Matrix::Zero(m, m);
    w.selfadjointView<Eigen::Lower>().rankUpdate(g);
    Matrix out = w.selfadjointView<Eigen::Lower>();
    out.diagonal().array() += ridge;
    return out;
}

SyntheticData generate_hierarchical_dataset(const SyntheticSpec& spec) {
    if (spec.T < 1 || spec.m < 1 || spec.d < 1 || spec.n < 1 || spec.dof < 1)
        throw InvalidInput("synthetic spec: all counts must be >= 1");
    if (spec.groups < 1 || spec.groups > spec.m)
        throw InvalidInput("synthetic spec: need 1 <= groups <= m");
    if (!(spec.noise_var >= 0.0))
        throw InvalidInput("synthetic spec: noise variance must be nonnegative");

    Rng rng(spec.seed);
    SyntheticData out;
    out.scale = make_group_scale_matrix(spec.m, spec.groups, spec.within);
    const auto T = static_cast<std::size_t>(spec.T);

    for (std::size_t t = 0; t < T; ++t)
        out.true_precisions.omegas.push_back(sample_wishart(out.scale, spec.dof, rng, spec.ridge));

    for (std::size_t t = 0; t < T; ++t) {
        Eigen::LLT<Matrix> llt(out.true_precisions.omegas[t]);
        if (llt.info() != Eigen::Success)
            throw DomainError("synthetic: sampled precision is not positive definite");
        // Ω = L Lᵀ, so x = L⁻ᵀ z has covariance Ω⁻¹.
        Matrix theta(spec.d, spec.m);
        for (Index j = 0; j < spec.d; ++j) {
            Vector z = rng.normal_vector(spec.m);
            theta.row(j) = llt.matrixU().solve(z).transpose();
        }
        out.true_weights.thetas.push_back(std::move(theta));
    }

    out.data.super_tasks.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        for (Index k = 0; k < spec.m; ++k) {
            SubTaskData task;
            task.X.resize(spec.n, spec.d);
            for (Index i = 0; i < spec.n; ++i)
                for (Index j = 0; j < spec.d; ++j)
                    task.X(i, j) = rng.normal();
            out.data.super_tasks[t].push_back(std::move(task));
        }
    }
    const double noise_sd = std::sqrt(spec.noise_var);
    for (std::size_t t = 0; t < T; ++t) {
        for (Index k = 0; k < spec.m; ++k) {
            auto& task = out.data.super_tasks[t][static_cast<std::size_t>(k)];
            task.y = task.X * out.true_weights.thetas[t].col(k);
            for (Index i = 0; i < spec.n; ++i)
                task.y(i) += noise_sd * rng.normal();
        }
    }
    return out;
}

ClimateTable generate_climate_table(const ClimateSynthSpec& spec) {
    if (spec.variables.empty() || spec.rows < 1 || spec.cols < 1 || spec.esms < 1 || spec.years < 1)
        throw InvalidInput("climate synth spec: need variables, a non-empty grid, esms >= 1 and years >= 1");
    Rng rng(spec.seed);
    const Index m = spec.rows * spec.cols;
    const Index d = spec.esms;
    const auto V = spec.variables.size();
    const Index n = static_cast<Index>(spec.years) * 12;

    ClimateTable table;
    table.variables = spec.variables;
    table.grid = GridSpec{spec.rows, spec.cols};
    for (Index r = 0; r < spec.rows; ++r)
        for (Index c = 0; c < spec.cols; ++c)
            table.locations.push_back({static_cast<long>(r * spec.cols + c + 1), r, c, -5.0 - 5.0 * static_cast<double>(r),
                                       -70.0 + 5.0 * static_cast<double>(c)});
    for (int y = 0; y < spec.years; ++y)
        for (int mth = 1; mth <= 12; ++mth)
            table.times.push_back({spec.start_year + y, mth, spec.start_year + y});

    // Weight deviations: a planar field over the grid per ESM, shared by all variables.
    auto unit = [](Index i, Index count) {
        return count > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(count - 1) - 1.0 : 0.0;
    };
    Matrix field(d, 3);
    for (Index j = 0; j < d; ++j)
        for (Index c = 0; c < 3; ++c)
            field(j, c) = rng.normal();
    Matrix shared_dev(d, m);
    for (Index r = 0; r < spec.rows; ++r)
        for (Index c = 0; c < spec.cols; ++c)
            for (Index j = 0; j < d; ++j)
                shared_dev(j, r * spec.cols + c) =
                    spec.weight_spread *
                    (field(j, 0) + field(j, 1) * unit(r, spec.rows) + field(j, 2) * unit(c, spec.cols)) /
                    std::sqrt(3.0);

    table.data.resize(V);
    for (std::size_t v = 0; v < V; ++v) {
        const double base = 10.0 + 10.0 * static_cast<double>(v);
        const double amplitude = 4.0 + static_cast<double>(v);
        Vector bias = rng.normal_vector(d);
        Vector gain(d);
        for (Index j = 0; j < d; ++j)
            gain(j) = 1.0 + 0.1 * rng.normal();
        Matrix weights(d, m);
        for (Index k = 0; k < m; ++k)
            for (Index j = 0; j < d; ++j)
                weights(j, k) = 1.0 / static_cast<double>(d) + shared_dev(j, k) + 0.2 * spec.weight_spread * rng.normal();
        Vector clim(m);
        for (Index k = 0; k < m; ++k)
            clim(k) = base + 2.0 * unit(table.locations[static_cast<std::size_t>(k)].row, spec.rows) + 0.5 * rng.normal();

        Vector regional(n);
        for (Index i = 0; i < n; ++i)
            regional(i) = rng.normal();

        for (Index k = 0; k < m; ++k) {
            SubTaskData task{Matrix(n, d), Vector(n)};
            for (Index i = 0; i < n; ++i) {
                const int month = table.times[static_cast<std::size_t>(i)].month;
                const double signal = clim(k) +
                                      amplitude * std::cos(2.0 * std::numbers::pi * static_cast<double>(month - 1) / 12.0) +
                                      regional(i) + 0.5 * rng.normal();
                for (Index j = 0; j < d; ++j)
                    task.X(i, j) = bias(j) + gain(j) * signal + spec.esm_noise * rng.normal();
                task.y(i) = task.X.row(i).dot(weights.col(k)) + spec.obs_noise * rng.normal();
            }
            table.data[v].push_back(std::move(task));
        }
    }
    return table;
}

}  // namespace hmtl
