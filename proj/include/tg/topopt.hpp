#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "tg/adjoint.hpp"
#include "tg/dofmap.hpp"
#include "tg/mesh.hpp"
#include "tg/solver.hpp"

namespace tg {

struct SimpParams {
    double p = 3.0;
    double E_max = 70000.0;
    double E_min = 70.0;
    double nu = 0.3;
    double vol_limit = 0.5;
    double filter_radius = 0.0;  // <= 0: 1.5 * mean element diameter
    double move_limit = 0.1;
    double rho_min = 1e-3;
    int iterations = 51;
    bool plane_stress = false;
};

struct TopoptHistoryRow {
    int iteration = 0;
    double compliance = 0.0;
    double volume = 0.0;
    std::int64_t solve_iterations = 0;
    double rel_residual = 0.0;
};

struct TopoptResult {
    std::vector<double> density;
    std::vector<TopoptHistoryRow> history;
    std::map<int, std::vector<double>> snapshots;  // iteration -> density
    std::vector<double> displacement;              // final forward solve
};

// Consistent nodal load for a constant traction applied on the boundary
// edges/faces spanned by `surface_nodes` (each facet must have all its nodes
// in the set). Lumped: traction times facet measure split evenly.
std::vector<double> traction_load(const Mesh& mesh, const DofMap& dofmap,
                                  const std::vector<std::int64_t>& surface_nodes,
                                  const std::vector<double>& traction);

// Density-based compliance minimization. Per iteration: penalized modulus,
// elasticity assembly, condensed solve, compliance, closed-form sensitivity,
// density-weighted filter, moving-asymptote update. Snapshot iterations get
// their density recorded before the design update.
TopoptResult topopt_run(const Mesh& mesh, const SimpParams& params, const std::vector<double>& F,
                        const std::vector<std::int64_t>& dirichlet_dofs,
                        const std::vector<double>& dirichlet_values,
                        const std::vector<int>& snapshot_iterations,
                        const SolverConfig& solver = {});

}  // namespace tg
