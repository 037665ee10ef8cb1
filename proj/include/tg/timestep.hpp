#pragma once

#include <vector>

#include "tg/physics.hpp"
#include "tg/solver.hpp"

namespace tg {

enum class WaveScheme { CentralDifference, CrankNicolson };

struct Trajectory {
    std::vector<std::vector<double>> states;  // full-size nodal vectors
    std::vector<double> times;
    std::vector<SolveReport> reports;
};

// Second-order-in-time wave stepper on the condensed (free-DoF) system.
// CentralDifference: M U2 = M(2 U1 - U0) - dt^2 c^2 K U1
// CrankNicolson:     (M + dt^2 c^2/4 K) U2 = M(2 U1 - U0) - dt^2 c^2/4 K (2 U1 + U0)
std::vector<double> wave_step(const SparseOperator& M_ff, const SparseOperator& K_ff,
                              const std::vector<double>& u0, const std::vector<double>& u1,
                              double dt, double c, WaveScheme scheme, SolveReport& report,
                              const SolverConfig& config = {});

// Per-step discrete residual M (U2 - 2 U1 + U0)/dt^2 + c^2 K U1.
std::vector<double> wave_residual(const SparseOperator& M, const SparseOperator& K,
                                  const std::vector<double>& u0, const std::vector<double>& u1,
                                  const std::vector<double>& u2, double dt, double c);

// Start-up state from u0 and v0 via a Taylor step:
// U1 = U0 + dt v0 + dt^2/2 M^{-1} (-c^2 K U0)
std::vector<double> wave_initial_step(const SparseOperator& M_ff, const SparseOperator& K_ff,
                                      const std::vector<double>& u0,
                                      const std::vector<double>& v0, double dt, double c,
                                      const SolverConfig& config = {});

// Discrete wave energy 0.5 ||(U1-U0)/dt||_M^2 + 0.5 c^2 U1^T K U0.
double wave_energy(const SparseOperator& M, const SparseOperator& K,
                   const std::vector<double>& u0, const std::vector<double>& u1, double dt,
                   double c);

struct NewtonConfig {
    double tol = 1e-12;
    int max_iter = 30;
};

// One backward-Euler step of the Allen-Cahn system, solved with Newton:
// (1/dt) M (U1 - U0) + a^2 K U1 - F(U1) = 0, F induced by -eps^2 u (u^2-1).
// Operates on full-size states; Dirichlet DoFs are held at their prescribed
// values. K is assembled with unit coefficient; a enters via a^2 K.
class AllenCahnStepper {
  public:
    AllenCahnStepper(const Mesh& mesh, const DofMap& dofmap, const RoutingMatrices& routing,
                     const SparseOperator& M, const SparseOperator& K,
                     std::vector<std::int64_t> dirichlet_dofs, std::vector<double> dirichlet_values,
                     double dt, double a, double eps, NewtonConfig newton = {},
                     SolverConfig solver = {});

    // Returns U^{k+1}; fills `residual_norm` with the converged Newton
    // residual on free DoFs.
    std::vector<double> step(const std::vector<double>& u_prev, double* residual_norm = nullptr,
                             int* newton_iterations = nullptr) const;

    // (1/dt) M (U1 - U0) + a^2 K U1 - F(U1) on all DoFs.
    std::vector<double> residual(const std::vector<double>& u_prev,
                                 const std::vector<double>& u_next) const;

    // Reaction load F(U) for the current mesh/quadrature.
    std::vector<double> reaction_load(const std::vector<double>& u) const;

  private:
    const Mesh& mesh_;
    const DofMap& dofmap_;
    const RoutingMatrices& routing_;
    const SparseOperator& M_;
    const SparseOperator& K_;
    std::vector<std::int64_t> dirichlet_dofs_;
    std::vector<double> dirichlet_values_;
    double dt_, a_, eps_;
    NewtonConfig newton_;
    SolverConfig solver_;
    ReferenceTables tables_;
    GeometryBatch geom_;
};

}  // namespace tg
