#include "hmtl/omega_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmtl/model_core.hpp"
#include "hmtl/parallel.hpp"

namespace hmtl {

AdmmState AdmmState::identity(Index T, Index m) {
    AdmmState st;
    const auto n = static_cast<std::size_t>(T);
    st.omegas.assign(n, Matrix::Identity(m, m));
    st.zs.assign(n, Matrix::Identity(m, m));
    st.us.assign(n, Matrix::Zero(m, m));
    return st;
}

Matrix prox_logdet(const Matrix& a, const Matrix& s, double lambda0, double rho, double* min_eigenvalue) {
    if (!(rho > 0.0))
        throw InvalidInput("prox_logdet: rho must be positive");
    if (a.rows() != a.cols() || s.rows() != a.rows() || s.cols() != a.cols())
        throw InvalidInput("prox_logdet: dimension mismatch");
    const Matrix b = symmetrize(lambda0 * s - rho * a);
    if (!b.allFinite())
        throw InvalidInput("prox_logdet: non-finite input");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
    if (eig.info() != Eigen::Success)
        throw SolverFailure("prox_logdet: eigendecomposition failed", a);
    const Vector& dvals = eig.eigenvalues();
    Vector w(dvals.size());
    for (Index i = 0; i < dvals.size(); ++i) {
        const double di = dvals(i);
        // Two algebraically equal forms; pick the one without cancellation.
        const double root = std::sqrt(di * di + 4.0 * rho);
        w(i) = di <= 0.0 ? (root - di) / (2.0 * rho) : 2.0 / (root + di);
    }
    if (min_eigenvalue)
        *min_eigenvalue = w.size() ? w.minCoeff() : std::numeric_limits<double>::infinity();
    const Matrix& v = eig.eigenvectors();
    return symmetrize(v * w.asDiagonal() * v.transpose());
}

std::vector<Matrix> group_soft_threshold(std::span<const Matrix> stack, double t1, double t2) {
    if (!(t1 >= 0.0) || !(t2 >= 0.0))
        throw InvalidInput("group_soft_threshold: thresholds must be nonnegative");
    std::vector<Matrix> out(stack.begin(), stack.end());
    if (out.empty())
        return out;
    const Index m = out.front().rows();
    for (const auto& a : out)
        if (a.rows() != m || a.cols() != m)
            throw InvalidInput("group_soft_threshold: all matrices must be m x m");
    const std::size_t T = out.size();
    for (Index k = 0; k < m; ++k) {
        for (Index j = 0; j < m; ++j) {
            if (k == j)
                continue;
            double sq = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                double& v = out[t](k, j);
                const double mag = std::abs(v) - t1;
                v = mag > 0.0 ? std::copysign(mag, v) : 0.0;
                sq += v * v;
            }
            const double norm = std::sqrt(sq);
            const double scale = norm > 0.0 ? std::max(1.0 - t2 / norm, 0.0) : 0.0;
            for (std::size_t t = 0; t < T; ++t)
                out[t](k, j) *= scale;
        }
    }
    return out;
}

double omega_step_objective(std::span<const Matrix> s_set, std::span<const Matrix> omegas, const Hyperparams& h) {
    if (s_set.size() != omegas.size())
        throw InvalidInput("omega_step_objective: size mismatch");
    double total = 0.0;
    for (std::size_t t = 0; t < omegas.size(); ++t)
        total += -log_det_spd(omegas[t]) + h.lambda0 * s_set[t].cwiseProduct(omegas[t]).sum();
    return total + group_penalty(omegas, h.lambda1, h.lambda2);
}

namespace {

bool is_positive_definite(const Matrix& a) {
    Eigen::LLT<Matrix> llt(a);
    return llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0;
}

// One ADMM run over all matrices in `state` (coupled through the group term).
AdmmReport run_admm(std::span<const Matrix> s_set, const Hyperparams& h, const AdmmConfig& cfg, AdmmState& st,
                    double rho) {
    const std::size_t T = s_set.size();
    const Index m = s_set.front().rows();
    const double scale = std::sqrt(static_cast<double>(T) * static_cast<double>(m * m));

    AdmmReport rep;
    rep.min_omega_eigenvalue = std::numeric_limits<double>::infinity();
    std::vector<double> min_eig(T);
    std::vector<Matrix> shifted(T);

    for (int it = 1; it <= cfg.max_iters; ++it) {
        parallel_for(T, cfg.threads, [&](std::size_t t) {
            st.omegas[t] = prox_logdet(st.zs[t] - st.us[t], s_set[t], h.lambda0, rho, &min_eig[t]);
        });
        for (std::size_t t = 0; t < T; ++t) {
            if (!(min_eig[t] > 0.0))
                throw SolverFailure("admm: omega iterate lost positive definiteness", st.omegas[t]);
            rep.min_omega_eigenvalue = std::min(rep.min_omega_eigenvalue, min_eig[t]);
            shifted[t] = st.omegas[t] + st.us[t];
        }

        std::vector<Matrix> z_new = group_soft_threshold(shifted, h.lambda1 / rho, h.lambda2 / rho);

        double r2 = 0.0, s2 = 0.0, om2 = 0.0, z2 = 0.0, u2 = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            z_new[t] = symmetrize(z_new[t]);
            st.us[t] = symmetrize(st.us[t] + st.omegas[t] - z_new[t]);
            r2 += (st.omegas[t] - z_new[t]).squaredNorm();
            s2 += (z_new[t] - st.zs[t]).squaredNorm();
            om2 += st.omegas[t].squaredNorm();
            z2 += z_new[t].squaredNorm();
            u2 += st.us[t].squaredNorm();
        }
        st.zs = std::move(z_new);

        rep.iterations = it;
        rep.primal_residual = std::sqrt(r2);
        rep.dual_residual = rho * std::sqrt(s2);
        const double eps_pri = scale * cfg.abs_tol + cfg.rel_tol * std::sqrt(std::max(om2, z2));
        const double eps_dual = scale * cfg.abs_tol + cfg.rel_tol * rho * std::sqrt(u2);
        if (!std::isfinite(rep.primal_residual) || !std::isfinite(rep.dual_residual))
            throw SolverFailure("admm: residuals became non-finite", st.omegas.front());
        if (rep.primal_residual <= eps_pri && rep.dual_residual <= eps_dual) {
            rep.converged = true;
            break;
        }
        if (cfg.adaptive_rho && it % cfg.rho_interval == 0) {
            double factor = 1.0;
            if (rep.primal_residual > cfg.rho_balance * rep.dual_residual)
                factor = cfg.rho_scale;
            else if (rep.dual_residual > cfg.rho_balance * rep.primal_residual)
                factor = 1.0 / cfg.rho_scale;
            if (factor != 1.0) {
                rho *= factor;
                for (auto& u : st.us)
                    u /= factor;  // scaled dual U = Y/ρ
            }
        }
    }
    rep.final_rho = rho;
    if (!rep.converged)
        rep.warning = "admm reached max_iters (" + std::to_string(cfg.max_iters) + ") without meeting tolerances";
    return rep;
}

Matrix finalize(const Matrix& z, const Matrix& omega, bool& used_fallback) {
    if (is_positive_definite(z))
        return z;
    Matrix masked = omega;
    for (Index k = 0; k < z.rows(); ++k)
        for (Index j = 0; j < z.cols(); ++j)
            if (k != j && z(k, j) == 0.0)
                masked(k, j) = 0.0;
    if (!is_positive_definite(masked))
        throw DomainError("omega step: returned precision matrix is not positive definite");
    used_fallback = true;
    return masked;
}

}  // namespace

OmegaStepResult solve_omega_step(std::span<const Matrix> s_set, const Hyperparams& h, const AdmmConfig& cfg,
                                 AdmmState* warm) {
    validate(h);
    if (!(cfg.rho > 0.0) || !(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0) || cfg.max_iters < 1)
        throw InvalidInput("admm: rho and tolerances must be positive, max_iters >= 1");
    if (cfg.adaptive_rho && (!(cfg.rho_balance > 1.0) || !(cfg.rho_scale > 1.0) || cfg.rho_interval < 1))
        throw InvalidInput("admm: rho_balance and rho_scale must exceed 1, rho_interval >= 1");
    if (s_set.empty())
        throw InvalidInput("omega step: need at least one covariance matrix");
    const Index m = s_set.front().rows();
    const auto T = static_cast<Index>(s_set.size());
    for (const auto& s : s_set) {
        if (s.rows() != m || s.cols() != m)
            throw InvalidInput("omega step: covariance matrices must all be m x m");
        if (!s.allFinite())
            throw InvalidInput("omega step: non-finite covariance entries");
    }

    AdmmState local;
    AdmmState& st = warm ? *warm : local;
    const bool shape_ok = static_cast<Index>(st.omegas.size()) == T && static_cast<Index>(st.zs.size()) == T &&
                          static_cast<Index>(st.us.size()) == T &&
                          std::all_of(st.zs.begin(), st.zs.end(), [m](const Matrix& z) { return z.rows() == m; });
    if (!shape_ok)
        st = AdmmState::identity(T, m);
    if (!cfg.adaptive_rho || static_cast<Index>(st.rhos.size()) != T)
        st.rhos.assign(static_cast<std::size_t>(T), cfg.rho);

    OmegaStepResult out;
    if (h.lambda2 == 0.0 && T > 1) {
        // Separable: independent loops, each with its own stopping test.
        std::vector<AdmmReport> reps(static_cast<std::size_t>(T));
        std::vector<AdmmState> parts(static_cast<std::size_t>(T));
        for (std::size_t t = 0; t < parts.size(); ++t)
            parts[t] = AdmmState{{st.omegas[t]}, {st.zs[t]}, {st.us[t]}, {st.rhos[t]}};
        AdmmConfig inner = cfg;
        inner.threads = 1;
        parallel_for(parts.size(), cfg.threads, [&](std::size_t t) {
            reps[t] = run_admm(s_set.subspan(t, 1), h, inner, parts[t], parts[t].rhos.front());
        });
        out.report.converged = true;
        out.report.min_omega_eigenvalue = std::numeric_limits<double>::infinity();
        double r2 = 0.0, s2 = 0.0;
        for (std::size_t t = 0; t < parts.size(); ++t) {
            st.omegas[t] = parts[t].omegas.front();
            st.zs[t] = parts[t].zs.front();
            st.us[t] = parts[t].us.front();
            st.rhos[t] = reps[t].final_rho;
            out.report.iterations = std::max(out.report.iterations, reps[t].iterations);
            out.report.converged = out.report.converged && reps[t].converged;
            out.report.min_omega_eigenvalue = std::min(out.report.min_omega_eigenvalue, reps[t].min_omega_eigenvalue);
            r2 += reps[t].primal_residual * reps[t].primal_residual;
            s2 += reps[t].dual_residual * reps[t].dual_residual;
            if (!reps[t].warning.empty() && out.report.warning.empty())
                out.report.warning = "super-task " + std::to_string(t) + ": " + reps[t].warning;
        }
        out.report.primal_residual = std::sqrt(r2);
        out.report.dual_residual = std::sqrt(s2);
    } else {
        out.report = run_admm(s_set, h, cfg, st, st.rhos.front());
        st.rhos.assign(st.rhos.size(), out.report.final_rho);
    }

    out.precisions.omegas.resize(static_cast<std::size_t>(T));
    for (std::size_t t = 0; t < out.precisions.omegas.size(); ++t)
        out.precisions.omegas[t] = finalize(st.zs[t], st.omegas[t], out.report.used_masked_fallback);
    return out;
}

}  // namespace hmtl
