#pragma once

#include <cstdint>
#include <vector>

#include "tg/sparse.hpp"

namespace tg {

struct SolverConfig {
    double tol_rel = 1e-10;
    double tol_abs = 1e-10;
    std::int64_t max_iter = 10000;
    std::int64_t direct_threshold = 2000;  // dense LU below this many free DoFs
};

struct SolveReport {
    std::int64_t iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
    double wall_time = 0.0;
};

// Dirichlet condensation by row/column elimination. Solution is recovered
// via expand(), which places prescribed values at constrained DoFs.
struct CondensedSystem {
    SparseOperator K_ff;
    std::vector<double> F_f;
    std::vector<std::int64_t> free_dofs;        // ascending
    std::vector<std::int64_t> constrained_dofs; // ascending
    std::vector<double> prescribed;             // aligned with constrained_dofs
    std::int64_t full_size = 0;

    std::vector<double> expand(const std::vector<double>& u_free) const;
    std::vector<double> restrict_free(const std::vector<double>& u_full) const;
};

CondensedSystem condense(const SparseOperator& K, const std::vector<double>& F,
                         const std::vector<std::int64_t>& dirichlet_dofs,
                         const std::vector<double>& dirichlet_values);

// Restricts another operator with the same full-size pattern onto the free
// DoFs of an existing condensation, sharing sys.K_ff's pattern.
SparseOperator restrict_to_free(const SparseOperator& A, const CondensedSystem& sys);

// Jacobi-preconditioned BiCGSTAB. On breakdown restarts once from the
// current iterate; max_iter exhaustion yields a non-converged report.
SolveReport bicgstab(const SparseOperator& A, const std::vector<double>& b,
                     std::vector<double>& x, const SolverConfig& config = {});

// Dense LU with partial pivoting (for small exact solves and oracles).
std::vector<double> dense_solve(std::vector<double> A, std::vector<double> b);

// Solves the condensed system (direct below the threshold, BiCGSTAB above)
// and returns the expanded solution.
std::vector<double> solve_condensed(const CondensedSystem& sys, SolveReport& report,
                                    const SolverConfig& config = {});

// ||u - u_ref|| / ||u_ref||
double rel_error(const std::vector<double>& u, const std::vector<double>& u_ref);
// ||K u - f|| / ||f||
double rel_linear_residual(const SparseOperator& K, const std::vector<double>& u,
                           const std::vector<double>& f);

double norm2(const std::vector<double>& v);
double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tg
