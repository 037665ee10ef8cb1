#include "tg/timestep.hpp"

#include <algorithm>
#include <cmath>

#include "tg/errors.hpp"

namespace tg {

namespace {

std::vector<double> solve_operator(const SparseOperator& A, const std::vector<double>& b,
                                   SolveReport& report, const SolverConfig& config) {
    const std::int64_t n = A.rows();
    std::vector<double> x;
    if (n == 0) {
        report = SolveReport{0, 0.0, true, 0.0};
        return x;
    }
    if (n <= config.direct_threshold) {
        x = dense_solve(A.dense(), b);
        report.iterations = 0;
        report.rel_residual = norm2(b) == 0.0 ? 0.0 : rel_linear_residual(A, x, b);
        report.converged = true;
        return x;
    }
    report = bicgstab(A, b, x, config);
    if (!report.converged)
        throw NumericalError("time step solve did not converge: rel_residual = " +
                             std::to_string(report.rel_residual));
    return x;
}

}  // namespace

std::vector<double> wave_step(const SparseOperator& M_ff, const SparseOperator& K_ff,
                              const std::vector<double>& u0, const std::vector<double>& u1,
                              double dt, double c, WaveScheme scheme, SolveReport& report,
                              const SolverConfig& config) {
    const std::size_t n = u0.size();
    if (u1.size() != n || static_cast<std::size_t>(M_ff.rows()) != n ||
        static_cast<std::size_t>(K_ff.rows()) != n)
        throw InputError("wave_step: shape mismatch");
    if (dt <= 0.0) throw InputError("wave_step: dt must be positive");
    const double s = dt * dt * c * c;

    std::vector<double> rhs(n);
    if (scheme == WaveScheme::CentralDifference) {
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = 2.0 * u1[i] - u0[i];
        rhs = M_ff.apply(w);
        const auto ku = K_ff.apply(u1);
        for (std::size_t i = 0; i < n; ++i) rhs[i] -= s * ku[i];
        return solve_operator(M_ff, rhs, report, config);
    }

    // trapezoidal averaging of the stiffness term: K acts on (U2 + 2U1 + U0)/4
    SparseOperator A;
    if (M_ff.pattern == K_ff.pattern) {
        A.pattern = M_ff.pattern;
        A.values.resize(M_ff.values.size());
        for (std::size_t t = 0; t < A.values.size(); ++t)
            A.values[t] = M_ff.values[t] + 0.25 * s * K_ff.values[t];
    } else {
        throw InputError("wave_step: mass and stiffness must share a sparsity pattern");
    }
    A.symmetric = M_ff.symmetric && K_ff.symmetric;

    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 2.0 * u1[i] - u0[i];
    rhs = M_ff.apply(w);
    for (std::size_t i = 0; i < n; ++i) w[i] = 2.0 * u1[i] + u0[i];
    const auto kw = K_ff.apply(w);
    for (std::size_t i = 0; i < n; ++i) rhs[i] -= 0.25 * s * kw[i];
    return solve_operator(A, rhs, report, config);
}

std::vector<double> wave_residual(const SparseOperator& M, const SparseOperator& K,
                                  const std::vector<double>& u0, const std::vector<double>& u1,
                                  const std::vector<double>& u2, double dt, double c) {
    const std::size_t n = u0.size();
    std::vector<double> acc(n);
    for (std::size_t i = 0; i < n; ++i) acc[i] = (u2[i] - 2.0 * u1[i] + u0[i]) / (dt * dt);
    auto r = M.apply(acc);
    const auto ku = K.apply(u1);
    for (std::size_t i = 0; i < n; ++i) r[i] += c * c * ku[i];
    return r;
}

std::vector<double> wave_initial_step(const SparseOperator& M_ff, const SparseOperator& K_ff,
                                      const std::vector<double>& u0,
                                      const std::vector<double>& v0, double dt, double c,
                                      const SolverConfig& config) {
    const std::size_t n = u0.size();
    if (v0.size() != n) throw InputError("wave_initial_step: shape mismatch");
    auto ku = K_ff.apply(u0);
    for (auto& v : ku) v = -c * c * v;
    SolveReport report;
    const auto a0 = solve_operator(M_ff, ku, report, config);
    std::vector<double> u1(n);
    for (std::size_t i = 0; i < n; ++i)
        u1[i] = u0[i] + dt * v0[i] + 0.5 * dt * dt * a0[i];
    return u1;
}

double wave_energy(const SparseOperator& M, const SparseOperator& K,
                   const std::vector<double>& u0, const std::vector<double>& u1, double dt,
                   double c) {
    const std::size_t n = u0.size();
    std::vector<double> vel(n);
    for (std::size_t i = 0; i < n; ++i) vel[i] = (u1[i] - u0[i]) / dt;
    const double kinetic = 0.5 * dot(vel, M.apply(vel));
    const double potential = 0.5 * c * c * dot(u1, K.apply(u0));
    return kinetic + potential;
}

AllenCahnStepper::AllenCahnStepper(const Mesh& mesh, const DofMap& dofmap,
                                   const RoutingMatrices& routing, const SparseOperator& M,
                                   const SparseOperator& K,
                                   std::vector<std::int64_t> dirichlet_dofs,
                                   std::vector<double> dirichlet_values, double dt, double a,
                                   double eps, NewtonConfig newton, SolverConfig solver)
    : mesh_(mesh),
      dofmap_(dofmap),
      routing_(routing),
      M_(M),
      K_(K),
      dirichlet_dofs_(std::move(dirichlet_dofs)),
      dirichlet_values_(std::move(dirichlet_values)),
      dt_(dt),
      a_(a),
      eps_(eps),
      newton_(newton),
      solver_(solver),
      tables_(reference_tables(mesh.kind, default_mass_degree(mesh.kind))),
      geom_(batch_geometry(mesh, tables_)) {
    if (dofmap_.components != 1)
        throw InputError("AllenCahnStepper: scalar fields only");
    if (dt_ <= 0.0) throw InputError("AllenCahnStepper: dt must be positive");
    if (M_.pattern != K_.pattern)
        throw InputError("AllenCahnStepper: mass and stiffness must share a sparsity pattern");
}

std::vector<double> AllenCahnStepper::reaction_load(const std::vector<double>& u) const {
    return reduce_vector(routing_, local_reaction_load(geom_, mesh_, u, eps_, tables_));
}

std::vector<double> AllenCahnStepper::residual(const std::vector<double>& u_prev,
                                               const std::vector<double>& u_next) const {
    const std::size_t n = u_prev.size();
    std::vector<double> du(n);
    for (std::size_t i = 0; i < n; ++i) du[i] = (u_next[i] - u_prev[i]) / dt_;
    auto r = M_.apply(du);
    const auto ku = K_.apply(u_next);
    const auto f = reaction_load(u_next);
    for (std::size_t i = 0; i < n; ++i) r[i] += a_ * a_ * ku[i] - f[i];
    return r;
}

std::vector<double> AllenCahnStepper::step(const std::vector<double>& u_prev,
                                           double* residual_norm, int* newton_iterations) const {
    const std::size_t n = u_prev.size();
    if (static_cast<std::int64_t>(n) != routing_.N)
        throw InputError("AllenCahnStepper::step: state size mismatch");

    std::vector<double> u = u_prev;  // warm start from the previous state
    for (std::size_t i = 0; i < dirichlet_dofs_.size(); ++i)
        u[dirichlet_dofs_[i]] = dirichlet_values_[i];

    double norm0 = -1.0, rnorm = 0.0;
    int it = 0;
    for (; it < newton_.max_iter; ++it) {
        auto r = residual(u_prev, u);

        // J = (1/dt) M + a^2 K - T, with T the mass-like tangent of the
        // reaction load; all three share the routing pattern.
        const auto tang_coeff = reaction_tangent_coefficient(geom_, mesh_, u, eps_, tables_);
        const auto T = reduce_matrix(routing_, local_mass(geom_, tang_coeff, tables_));
        SparseOperator J;
        J.pattern = M_.pattern;
        J.values.resize(M_.values.size());
        for (std::size_t t = 0; t < J.values.size(); ++t)
            J.values[t] = M_.values[t] / dt_ + a_ * a_ * K_.values[t] - T.values[t];

        for (auto& v : r) v = -v;
        auto sys = condense(J, r, dirichlet_dofs_, std::vector<double>(dirichlet_dofs_.size()));
        rnorm = norm2(sys.F_f);
        if (norm0 < 0.0) norm0 = rnorm;
        if (rnorm <= newton_.tol * std::max(1.0, norm0)) break;
        if (it > 0 && norm0 > 0.0 && rnorm > 1e6 * norm0)
            throw NumericalError("Newton diverged: residual norm " + std::to_string(rnorm));

        SolveReport report;
        const auto delta = solve_condensed(sys, report, solver_);
        for (std::size_t i = 0; i < n; ++i) u[i] += delta[i];
    }
    if (rnorm > newton_.tol * std::max(1.0, norm0 < 0.0 ? 0.0 : norm0))
        throw NumericalError("Newton did not converge in " + std::to_string(newton_.max_iter) +
                             " iterations: residual norm " + std::to_string(rnorm));
    if (residual_norm != nullptr) *residual_norm = rnorm;
    if (newton_iterations != nullptr) *newton_iterations = it;
    return u;
}

}  // namespace tg
