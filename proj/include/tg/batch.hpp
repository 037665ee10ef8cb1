#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tg/coefficient.hpp"
#include "tg/mesh.hpp"
#include "tg/reference.hpp"

namespace tg {

// Batched element geometry: Jacobians, determinants and quadrature point
// images for all elements at once.
struct GeometryBatch {
    std::int64_t E = 0;
    int Q = 0, k_geom = 0, d = 0;
    std::vector<double> coords;        // E x k_geom x d
    std::vector<double> jac;           // E x Q x d x d
    std::vector<double> det;           // E x Q
    std::vector<double> jac_invT;      // E x Q x d x d
    std::vector<double> phys_qpoints;  // E x Q x d
};

// Push-forward basis gradients in physical coordinates.
struct PhysicalGradients {
    std::int64_t E = 0;
    int Q = 0, k = 0, d = 0;
    std::vector<double> G;  // E x Q x k x d
};

// Batched local operators, element-major contiguous.
struct LocalTensors {
    std::int64_t E = 0;
    int k = 0;
    std::vector<double> stiffness;  // E x k x k (optional)
    std::vector<double> mass;       // E x k x k (optional)
    std::vector<double> load;       // E x k (optional)
};

GeometryBatch batch_geometry(const Mesh& mesh, const ReferenceTables& tables);

PhysicalGradients push_forward(const GeometryBatch& geom, const ReferenceTables& tables);

// (K_local)_{eab} = sum_q w_q |det| C[e,q] G[e,q,a,:].G[e,q,b,:]
std::vector<double> local_stiffness_diffusion(const GeometryBatch& geom,
                                              const PhysicalGradients& grads,
                                              const std::vector<double>& coeff_eq,
                                              const ReferenceTables& tables);

// Linear elasticity with Lame fields lambda[e,q], mu[e,q]; local DoF layout
// node-major interleaved (a*d + component), k = k_geom * d.
std::vector<double> local_stiffness_elasticity(const GeometryBatch& geom,
                                               const PhysicalGradients& grads,
                                               const std::vector<double>& lambda_eq,
                                               const std::vector<double>& mu_eq,
                                               const ReferenceTables& tables);

// (M_local)_{eab} = sum_q w_q |det| C[e,q] B[q,a] B[q,b]
std::vector<double> local_mass(const GeometryBatch& geom, const std::vector<double>& coeff_eq,
                               const ReferenceTables& tables);

// (F_local)_{ea} = sum_q w_q |det| f[e,q] B[q,a]
std::vector<double> local_load(const GeometryBatch& geom, const std::vector<double>& source_eq,
                               const ReferenceTables& tables);

// Vector-valued source: source_eqc is E x Q x d, output E x (k_geom*d).
std::vector<double> local_load_vector(const GeometryBatch& geom,
                                      const std::vector<double>& source_eqc,
                                      const ReferenceTables& tables);

// Reaction load for -eps^2 u(u^2-1): interpolates the nodal field to
// quadrature points through the shape functions.
std::vector<double> local_reaction_load(const GeometryBatch& geom, const Mesh& mesh,
                                        const std::vector<double>& u_nodal, double eps,
                                        const ReferenceTables& tables);

// Tangent coefficient of the reaction load, -eps^2 (3u^2 - 1), as an E x Q
// table usable with local_mass.
std::vector<double> reaction_tangent_coefficient(const GeometryBatch& geom, const Mesh& mesh,
                                                 const std::vector<double>& u_nodal, double eps,
                                                 const ReferenceTables& tables);

// Interpolates a nodal scalar field to quadrature points (E x Q).
std::vector<double> interpolate_nodal(const GeometryBatch& geom, const Mesh& mesh,
                                      const std::vector<double>& u_nodal,
                                      const ReferenceTables& tables);

// Lame parameters from Young's modulus and Poisson ratio.
struct Lame {
    double lambda;
    double mu;
};
Lame lame_from_young(double young, double nu);
// Effective lambda for 2D plane stress.
double plane_stress_lambda(double lambda, double mu);

// Flat little-endian float64 dump with an (E, k) header, for oracle
// cross-checks.
void dump_local_tensor(const std::vector<double>& tensor, std::int64_t E, int k,
                       const std::string& path);

}  // namespace tg
