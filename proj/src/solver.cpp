#include "tg/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "tg/errors.hpp"

namespace tg {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    // fixed-order serial reduction: iteration counts are reproducible
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

std::vector<double> CondensedSystem::expand(const std::vector<double>& u_free) const {
    std::vector<double> u(static_cast<std::size_t>(full_size), 0.0);
    for (std::size_t i = 0; i < free_dofs.size(); ++i) u[free_dofs[i]] = u_free[i];
    for (std::size_t i = 0; i < constrained_dofs.size(); ++i)
        u[constrained_dofs[i]] = prescribed[i];
    return u;
}

std::vector<double> CondensedSystem::restrict_free(const std::vector<double>& u_full) const {
    std::vector<double> u(free_dofs.size());
    for (std::size_t i = 0; i < free_dofs.size(); ++i) u[i] = u_full[free_dofs[i]];
    return u;
}

CondensedSystem condense(const SparseOperator& K, const std::vector<double>& F,
                         const std::vector<std::int64_t>& dirichlet_dofs,
                         const std::vector<double>& dirichlet_values) {
    const std::int64_t N = K.rows();
    if (dirichlet_dofs.size() != dirichlet_values.size())
        throw InputError("condense: dirichlet dof/value length mismatch");
    std::vector<double> g(static_cast<std::size_t>(N), 0.0);
    std::vector<char> fixed(static_cast<std::size_t>(N), 0);
    for (std::size_t i = 0; i < dirichlet_dofs.size(); ++i) {
        const std::int64_t d = dirichlet_dofs[i];
        if (d < 0 || d >= N) throw InputError("condense: dirichlet dof out of range");
        fixed[d] = 1;
        g[d] = dirichlet_values[i];
    }

    CondensedSystem sys;
    sys.full_size = N;
    std::vector<std::int64_t> free_index(static_cast<std::size_t>(N), -1);
    for (std::int64_t i = 0; i < N; ++i) {
        if (fixed[i]) {
            sys.constrained_dofs.push_back(i);
            sys.prescribed.push_back(g[i]);
        } else {
            free_index[i] = static_cast<std::int64_t>(sys.free_dofs.size());
            sys.free_dofs.push_back(i);
        }
    }

    const auto& p = *K.pattern;
    auto pat = std::make_shared<CsrPattern>();
    pat->rows = static_cast<std::int64_t>(sys.free_dofs.size());
    pat->offsets.assign(sys.free_dofs.size() + 1, 0);
    sys.F_f.resize(sys.free_dofs.size());
    for (std::size_t fi = 0; fi < sys.free_dofs.size(); ++fi) {
        const std::int64_t i = sys.free_dofs[fi];
        double rhs = F[i];
        for (std::int64_t t = p.offsets[i]; t < p.offsets[i + 1]; ++t) {
            const std::int64_t j = p.cols[t];
            if (fixed[j]) {
                rhs -= K.values[t] * g[j];  // coupling correction F_f -= K_fc g
            } else {
                pat->cols.push_back(free_index[j]);
                sys.K_ff.values.push_back(K.values[t]);
            }
        }
        pat->offsets[fi + 1] = static_cast<std::int64_t>(pat->cols.size());
        sys.F_f[fi] = rhs;
    }
    sys.K_ff.pattern = pat;
    sys.K_ff.symmetric = K.symmetric;
    return sys;
}

SparseOperator restrict_to_free(const SparseOperator& A, const CondensedSystem& sys) {
    if (A.rows() != sys.full_size)
        throw InputError("restrict_to_free: operator size does not match condensation");
    std::vector<char> fixed(static_cast<std::size_t>(sys.full_size), 0);
    for (const auto d : sys.constrained_dofs) fixed[d] = 1;
    SparseOperator out;
    out.pattern = sys.K_ff.pattern;
    out.symmetric = A.symmetric;
    out.values.reserve(sys.K_ff.values.size());
    const auto& p = *A.pattern;
    for (const auto i : sys.free_dofs)
        for (std::int64_t t = p.offsets[i]; t < p.offsets[i + 1]; ++t)
            if (!fixed[p.cols[t]]) out.values.push_back(A.values[t]);
    if (out.values.size() != sys.K_ff.values.size())
        throw InputError("restrict_to_free: pattern mismatch with condensed system");
    return out;
}

SolveReport bicgstab(const SparseOperator& A, const std::vector<double>& b,
                     std::vector<double>& x, const SolverConfig& config) {
    const std::size_t n = b.size();
    SolveReport report;
    const auto t0 = std::chrono::steady_clock::now();
    if (x.size() != n) x.assign(n, 0.0);

    const double norm_b = norm2(b);
    if (norm_b == 0.0) {
        x.assign(n, 0.0);
        report.converged = true;
        return report;
    }
    auto inv_diag = A.diagonal();
    for (std::size_t i = 0; i < n; ++i) {
        if (inv_diag[i] == 0.0) throw NumericalError("Jacobi preconditioner: zero diagonal entry");
        inv_diag[i] = 1.0 / inv_diag[i];
    }
    auto precond = [&inv_diag](const std::vector<double>& v, std::vector<double>& out) {
        out.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = inv_diag[i] * v[i];
    };

    // iterate toward the relative target; the absolute tolerance only accepts
    // degenerate right-hand sides in the final converged check
    const double tol = config.tol_rel * norm_b;
    const double eps_breakdown = 1e-300;
    const int max_restarts = 8;

    // restart cycles: each pass recomputes the true residual, so recursive
    // residual drift or a breakdown inside a pass cannot fake convergence
    std::vector<double> r(n), p(n), v(n), phat, shat, s(n), t(n);
    std::vector<double> best_x = x;
    double best_res = 1e300;
    for (int pass = 0; pass <= max_restarts && report.iterations < config.max_iter; ++pass) {
        r = A.apply(x);
        bool x_finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = b[i] - r[i];
            if (!std::isfinite(r[i])) x_finite = false;
        }
        if (!x_finite) {  // diverged iterate: roll back to the best one seen
            x = best_x;
            r = A.apply(x);
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
        }
        double res_norm = norm2(r);
        if (res_norm < best_res) {
            best_res = res_norm;
            best_x = x;
        }
        if (res_norm <= tol) break;

        std::vector<double> rt = r;
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
        double rho = 1.0, alpha = 1.0, omega = 1.0;
        bool breakdown = false;
        while (!breakdown && res_norm > tol && report.iterations < config.max_iter) {
            const double rho_new = dot(rt, r);
            if (!std::isfinite(rho_new) ||
                std::abs(rho_new) < eps_breakdown * norm_b * norm_b) {
                breakdown = true;
                break;
            }
            const double beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
            precond(p, phat);
            A.apply(phat, v);
            const double rtv = dot(rt, v);
            alpha = rho / rtv;
            if (!std::isfinite(alpha)) {
                breakdown = true;
                break;
            }
            for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
            const double s_norm = norm2(s);
            ++report.iterations;
            if (s_norm <= tol) {
                for (std::size_t i = 0; i < n; ++i) x[i] += alpha * phat[i];
                res_norm = s_norm;
                break;
            }
            precond(s, shat);
            A.apply(shat, t);
            const double tt = dot(t, t);
            omega = dot(t, s) / tt;
            if (!std::isfinite(omega) || tt < eps_breakdown) {
                for (std::size_t i = 0; i < n; ++i) x[i] += alpha * phat[i];
                breakdown = true;
                break;
            }
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * phat[i] + omega * shat[i];
                r[i] = s[i] - omega * t[i];
            }
            res_norm = norm2(r);
            if (!std::isfinite(res_norm)) {
                breakdown = true;
                break;
            }
        }
    }

    // report the true residual, not the recursive one
    auto ax = A.apply(x);
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
        ax[i] = b[i] - ax[i];
        if (!std::isfinite(ax[i])) finite = false;
    }
    if (!finite || norm2(ax) > best_res) {
        x = best_x;
        ax = A.apply(x);
        for (std::size_t i = 0; i < n; ++i) ax[i] = b[i] - ax[i];
    }
    report.rel_residual = norm2(ax) / norm_b;
    report.converged = report.rel_residual <= config.tol_rel || norm2(ax) <= config.tol_abs;
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::vector<double> dense_solve(std::vector<double> A, std::vector<double> b) {
    const std::size_t n = b.size();
    if (A.size() != n * n) throw InputError("dense_solve: shape mismatch");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(A[perm[col] * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(A[perm[r] * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0) throw NumericalError("dense_solve: singular matrix");
        std::swap(perm[col], perm[pivot]);
        const double d = A[perm[col] * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[perm[r] * n + col] / d;
            A[perm[r] * n + col] = f;
            for (std::size_t c = col + 1; c < n; ++c) A[perm[r] * n + c] -= f * A[perm[col] * n + c];
        }
    }
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[perm[i]];
        for (std::size_t j = 0; j < i; ++j) s -= A[perm[i] * n + j] * y[j];
        y[i] = s;
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= A[perm[ii] * n + j] * x[j];
        x[ii] = s / A[perm[ii] * n + ii];
    }
    return x;
}

std::vector<double> solve_condensed(const CondensedSystem& sys, SolveReport& report,
                                    const SolverConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::int64_t n = static_cast<std::int64_t>(sys.free_dofs.size());
    std::vector<double> u_f;
    if (n == 0) {
        report = SolveReport{0, 0.0, true, 0.0};
    } else if (n <= config.direct_threshold) {
        u_f = dense_solve(sys.K_ff.dense(), sys.F_f);
        report.iterations = 0;
        report.rel_residual = norm2(sys.F_f) == 0.0
                                  ? 0.0
                                  : rel_linear_residual(sys.K_ff, u_f, sys.F_f);
        report.converged = true;
    } else {
        report = bicgstab(sys.K_ff, sys.F_f, u_f, config);
        if (!report.converged)
            throw NumericalError("linear solve did not converge: rel_residual = " +
                                 std::to_string(report.rel_residual) + " after " +
                                 std::to_string(report.iterations) + " iterations");
    }
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sys.expand(u_f);
}

double rel_error(const std::vector<double>& u, const std::vector<double>& u_ref) {
    if (u.size() != u_ref.size()) throw InputError("rel_error: length mismatch");
    const double nref = norm2(u_ref);
    if (nref == 0.0) throw InputError("rel_error: zero reference norm");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - u_ref[i];
        s += d * d;
    }
    return std::sqrt(s) / nref;
}

double rel_linear_residual(const SparseOperator& K, const std::vector<double>& u,
                           const std::vector<double>& f) {
    auto r = K.apply(u);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = f[i] - r[i];
    const double nf = norm2(f);
    if (nf == 0.0) throw InputError("rel_linear_residual: zero load norm");
    return norm2(r) / nf;
}

}  // namespace tg
