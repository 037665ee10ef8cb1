#pragma once

#include <cstdint>
#include <vector>

#include "tg/batch.hpp"
#include "tg/dofmap.hpp"
#include "tg/mesh.hpp"
#include "tg/routing.hpp"
#include "tg/solver.hpp"
#include "tg/sparse.hpp"

namespace tg {

// Solves K^T lambda = rhs on the free DoFs. For symmetric operators the
// forward operator is reused; otherwise an explicit transpose is built.
std::vector<double> adjoint_solve(const SparseOperator& K_ff, const std::vector<double>& rhs_f,
                                  SolveReport& report, const SolverConfig& config = {});

// Loss gradients with respect to the assembled operator and load:
// dL/dK_ij = lambda_i U_j, evaluated only on the stored pattern;
// dL/dF_i = -lambda_i.
struct SystemGradients {
    SparseOperator dK;          // values lambda_i U_j on the pattern of K
    std::vector<double> dF;     // -lambda
};
SystemGradients gradient_products(const SparseOperator& K, const std::vector<double>& lambda,
                                  const std::vector<double>& U);

// Penalized Young's modulus E(rho) = E_min + rho^p (E_max - E_min), per element.
std::vector<double> simp_young(const std::vector<double>& rho, double p, double E_min,
                               double E_max);

// Compliance C = F^T U.
double compliance(const std::vector<double>& F, const std::vector<double>& U);

// dC/drho_e = -p rho_e^{p-1} (E_max - E_min) u_e^T K0_e u_e, where K0 holds
// the unit-modulus local stiffness blocks (E x k x k).
std::vector<double> simp_sensitivity(const std::vector<double>& rho, double p, double E_min,
                                     double E_max, const std::vector<double>& unit_stiffness,
                                     const Mesh& mesh, const DofMap& dofmap,
                                     const std::vector<double>& U);

// Density-weighted hat-kernel sensitivity filter over element centroids:
// s_e <- sum_j w_ej rho_j s_j / (rho_e sum_j w_ej), w_ej = max(0, r - |c_e - c_j|).
std::vector<double> sensitivity_filter(const Mesh& mesh, double radius,
                                       const std::vector<double>& rho,
                                       const std::vector<double>& sens);

// Element volumes from the quadrature geometry.
std::vector<double> element_volumes(const Mesh& mesh);

// Volume-weighted mean density.
double volume_fraction(const std::vector<double>& rho, const std::vector<double>& volumes);

struct MmaConfig {
    double move_limit = 0.1;
    double asymptote_init = 0.5;
    double asymptote_expand = 1.2;
    double asymptote_shrink = 0.7;
    double rho_min = 1e-3;
    double rho_max = 1.0;
    double bisect_tol = 1e-10;
};

// Method of moving asymptotes, single volume constraint with dual bisection.
// Keeps per-variable asymptotes across calls.
class MmaOptimizer {
  public:
    MmaOptimizer(std::size_t n, MmaConfig config = {});

    // One design update. `dcost` is the objective sensitivity (expected
    // negative), `volumes` the element volumes, `vol_limit` the admissible
    // volume fraction. Returns the new design.
    std::vector<double> update(const std::vector<double>& rho, const std::vector<double>& dcost,
                               const std::vector<double>& volumes, double vol_limit);

    // True when the last update could not satisfy the volume constraint
    // within the move limits and was projected to the closest feasible box point.
    bool last_infeasible() const { return infeasible_; }

  private:
    bool infeasible_ = false;
    MmaConfig config_;
    std::size_t n_;
    int iter_ = 0;
    std::vector<double> low_, upp_, x1_, x2_;
};

}  // namespace tg
