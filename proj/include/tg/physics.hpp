#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tg/batch.hpp"
#include "tg/coefficient.hpp"
#include "tg/dofmap.hpp"
#include "tg/routing.hpp"
#include "tg/solver.hpp"
#include "tg/sparse.hpp"

namespace tg {

enum class ProblemKind { PoissonDiffusion, LinearElasticity, Mass, AllenCahnReaction };

// Variational problem definition binding coefficient fields, sources and
// boundary conditions to the assembly pipeline.
struct ProblemSpec {
    ProblemKind kind = ProblemKind::PoissonDiffusion;

    // Poisson / Allen-Cahn diffusion coefficient (rho or a^2).
    CoefficientField diffusion = CoefficientField::constant(1.0);
    // Elasticity Lame fields.
    CoefficientField lambda = CoefficientField::constant(1.0);
    CoefficientField mu = CoefficientField::constant(1.0);
    bool plane_stress = false;  // 2D elasticity: default plane strain

    // Source: one field (scalar problems) or d fields (vector problems).
    std::vector<CoefficientField> source;

    std::vector<std::int64_t> dirichlet_dofs;
    std::vector<double> dirichlet_values;

    // Time parameters (wave / Allen-Cahn).
    double dt = 0.0;
    double total_time = 0.0;
    double wave_speed = 1.0;
    double reaction_eps = 1.0;

    int components(int mesh_dim) const {
        return kind == ProblemKind::LinearElasticity ? mesh_dim : 1;
    }
};

struct AssembledSystem {
    SparseOperator K;
    std::vector<double> F;
    std::optional<SparseOperator> M;
};

// Global operators before condensation; dispatches Stage I kernels and the
// Stage II reduction.
AssembledSystem assemble(const ProblemSpec& problem, const Mesh& mesh, const DofMap& dofmap,
                         const RoutingMatrices& routing, bool with_mass = false);

// ||KU - F||^2, optionally weighted as r^T W r.
double residual_loss(const SparseOperator& K, const std::vector<double>& U,
                     const std::vector<double>& F, const SparseOperator* weight = nullptr);

// f_K(x, y) = (-1)^(floor(Kx) + floor(Ky))
CoefficientField checkerboard_source(int frequency);

// Multi-frequency sine expansion with seeded coefficients a_ij ~ U[-1,1]:
// u0 = (pi/K^2) sum_ij a_ij (i^2+j^2)^-r sin(pi i x) sin(pi j y)
CoefficientField multi_sine_field(int K, double r, std::uint64_t seed);

// M Udot + K U + F_nonlin - F_ext
std::vector<double> semidiscrete_residual(const SparseOperator& M, const SparseOperator& K,
                                          const std::vector<double>& u_dot,
                                          const std::vector<double>& u,
                                          const std::vector<double>& f_nonlin,
                                          const std::vector<double>& f_ext);

}  // namespace tg
