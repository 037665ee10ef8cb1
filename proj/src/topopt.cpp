#include "tg/topopt.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tg/batch.hpp"
#include "tg/errors.hpp"
#include "tg/physics.hpp"
#include "tg/routing.hpp"

namespace tg {

std::vector<double> traction_load(const Mesh& mesh, const DofMap& dofmap,
                                  const std::vector<std::int64_t>& surface_nodes,
                                  const std::vector<double>& traction) {
    const int d = mesh.dim;
    if (static_cast<int>(traction.size()) != d)
        throw InputError("traction_load: traction needs one component per dimension");
    if (dofmap.components != d)
        throw InputError("traction_load: vector-valued dof map required");
    std::vector<char> in_set(static_cast<std::size_t>(mesh.node_count()), 0);
    for (const auto n : surface_nodes) in_set[n] = 1;

    std::vector<double> F(static_cast<std::size_t>(dofmap.N), 0.0);
    std::set<std::vector<std::int64_t>> seen;

    auto add_facet = [&](const std::vector<std::int64_t>& facet) {
        for (const auto n : facet)
            if (!in_set[n]) return;
        auto key = facet;
        std::sort(key.begin(), key.end());
        if (!seen.insert(key).second) return;
        double measure = 0.0;
        if (facet.size() == 2) {
            const double* a = mesh.node(facet[0]);
            const double* b = mesh.node(facet[1]);
            double s = 0.0;
            for (int c = 0; c < d; ++c) s += (b[c] - a[c]) * (b[c] - a[c]);
            measure = std::sqrt(s);
        } else {  // triangle face
            const double* a = mesh.node(facet[0]);
            const double* b = mesh.node(facet[1]);
            const double* c = mesh.node(facet[2]);
            double u[3], v[3];
            for (int i = 0; i < 3; ++i) {
                u[i] = b[i] - a[i];
                v[i] = c[i] - a[i];
            }
            const double cx = u[1] * v[2] - u[2] * v[1];
            const double cy = u[2] * v[0] - u[0] * v[2];
            const double cz = u[0] * v[1] - u[1] * v[0];
            measure = 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
        }
        const double share = measure / static_cast<double>(facet.size());
        for (const auto n : facet)
            for (int c = 0; c < d; ++c) F[n * d + c] += share * traction[c];
    };

    const std::int64_t E = mesh.element_count();
    for (std::int64_t e = 0; e < E; ++e) {
        const auto* elem = mesh.element(e);
        if (mesh.kind == ElementKind::TRI3) {
            for (int i = 0; i < 3; ++i) add_facet({elem[i], elem[(i + 1) % 3]});
        } else if (mesh.kind == ElementKind::QUAD4) {
            for (int i = 0; i < 4; ++i) add_facet({elem[i], elem[(i + 1) % 4]});
        } else {
            static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
            for (const auto& f : faces) add_facet({elem[f[0]], elem[f[1]], elem[f[2]]});
        }
    }
    return F;
}

TopoptResult topopt_run(const Mesh& mesh, const SimpParams& params, const std::vector<double>& F,
                        const std::vector<std::int64_t>& dirichlet_dofs,
                        const std::vector<double>& dirichlet_values,
                        const std::vector<int>& snapshot_iterations, const SolverConfig& solver) {
    if (params.p < 1.0) throw InputError("topopt: penalization exponent must be >= 1");
    if (params.vol_limit <= 0.0 || params.vol_limit > 1.0)
        throw InputError("topopt: volume limit must be in (0, 1]");
    const int d = mesh.dim;
    const std::int64_t E = mesh.element_count();
    const auto dofmap = build_dofmap(mesh, d);
    if (F.size() != static_cast<std::size_t>(dofmap.N))
        throw InputError("topopt: load vector size mismatch");
    const auto routing = build_routing(mesh, dofmap);

    const auto volumes = element_volumes(mesh);
    double radius = params.filter_radius;
    if (radius <= 0.0) {
        double vmean = 0.0;
        for (const auto v : volumes) vmean += v;
        vmean /= static_cast<double>(E);
        radius = 1.5 * std::pow(vmean, 1.0 / d);
    }

    // unit-modulus local stiffness blocks; the penalized operator is a pure
    // per-element scaling of these
    const auto tables = reference_tables(mesh.kind, default_stiffness_degree(mesh.kind));
    const auto geom = batch_geometry(mesh, tables);
    const auto grads = push_forward(geom, tables);
    auto [lam0, mu0] = lame_from_young(1.0, params.nu);
    if (d == 2 && params.plane_stress) lam0 = plane_stress_lambda(lam0, mu0);
    const std::size_t nq = static_cast<std::size_t>(E) * geom.Q;
    const auto K0 =
        local_stiffness_elasticity(geom, grads, std::vector<double>(nq, lam0),
                                   std::vector<double>(nq, mu0), tables);
    const int k = dofmap.k;

    MmaConfig mma_config;
    mma_config.move_limit = params.move_limit;
    mma_config.rho_min = params.rho_min;
    MmaOptimizer mma(static_cast<std::size_t>(E), mma_config);

    TopoptResult result;
    result.density.assign(static_cast<std::size_t>(E), params.vol_limit);
    std::vector<double> K_local(K0.size());

    for (int it = 0; it <= params.iterations; ++it) {
        const auto young = simp_young(result.density, params.p, params.E_min, params.E_max);
        for (std::int64_t e = 0; e < E; ++e) {
            const double s = young[e];
            const std::size_t base = static_cast<std::size_t>(e) * k * k;
            for (int t = 0; t < k * k; ++t) K_local[base + t] = s * K0[base + t];
        }
        auto K = reduce_matrix(routing, K_local);
        K.symmetric = true;

        const auto sys = condense(K, F, dirichlet_dofs, dirichlet_values);
        SolveReport report;
        std::vector<double> U;
        try {
            U = solve_condensed(sys, report, solver);
        } catch (const NumericalError& err) {
            throw NumericalError("topopt iteration " + std::to_string(it) + ": " +
                                 std::string(err.what()));
        }

        result.history.push_back({it, compliance(F, U), volume_fraction(result.density, volumes),
                                  report.iterations, report.rel_residual});
        if (std::find(snapshot_iterations.begin(), snapshot_iterations.end(), it) !=
            snapshot_iterations.end())
            result.snapshots[it] = result.density;
        result.displacement = U;
        if (it == params.iterations) break;

        auto sens = simp_sensitivity(result.density, params.p, params.E_min, params.E_max, K0,
                                     mesh, dofmap, U);
        sens = sensitivity_filter(mesh, radius, result.density, sens);
        result.density = mma.update(result.density, sens, volumes, params.vol_limit);
    }
    return result;
}

}  // namespace tg
