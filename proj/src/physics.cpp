#include "tg/physics.hpp"

#include <cmath>
#include <random>

#include "tg/errors.hpp"

namespace tg {

AssembledSystem assemble(const ProblemSpec& problem, const Mesh& mesh, const DofMap& dofmap,
                         const RoutingMatrices& routing, bool with_mass) {
    const int d = mesh.dim;
    const int comps = problem.components(d);
    if (dofmap.components != comps)
        throw InputError("assemble: dofmap component count does not match problem kind");

    AssembledSystem out;
    const bool needs_high_degree =
        !problem.diffusion.is_constant() || problem.kind == ProblemKind::Mass || with_mass;
    const int degree = needs_high_degree ? default_mass_degree(mesh.kind)
                                         : default_stiffness_degree(mesh.kind);
    const auto tables = reference_tables(mesh.kind, degree);
    const auto geom = batch_geometry(mesh, tables);

    if (problem.kind == ProblemKind::Mass) {
        const auto coeff = problem.diffusion.evaluate(mesh, tables, geom);
        out.K = reduce_matrix(routing, local_mass(geom, coeff, tables));
        out.K.symmetric = true;
        out.F.assign(static_cast<std::size_t>(routing.N), 0.0);
        return out;
    }

    if (problem.kind == ProblemKind::PoissonDiffusion ||
        problem.kind == ProblemKind::AllenCahnReaction) {
        const auto grads = push_forward(geom, tables);
        const auto coeff = problem.diffusion.evaluate(mesh, tables, geom);
        out.K = reduce_matrix(routing, local_stiffness_diffusion(geom, grads, coeff, tables));
        out.K.symmetric = true;
        if (!problem.source.empty()) {
            const auto src = problem.source.front().evaluate(mesh, tables, geom);
            out.F = reduce_vector(routing, local_load(geom, src, tables));
        } else {
            out.F.assign(static_cast<std::size_t>(routing.N), 0.0);
        }
    } else {  // LinearElasticity
        const auto grads = push_forward(geom, tables);
        auto lam = problem.lambda.evaluate(mesh, tables, geom);
        const auto mu = problem.mu.evaluate(mesh, tables, geom);
        if (d == 2 && problem.plane_stress)
            for (std::size_t i = 0; i < lam.size(); ++i)
                lam[i] = plane_stress_lambda(lam[i], mu[i]);
        out.K = reduce_matrix(routing, local_stiffness_elasticity(geom, grads, lam, mu, tables));
        out.K.symmetric = true;
        if (!problem.source.empty()) {
            if (static_cast<int>(problem.source.size()) != d)
                throw InputError("elasticity body force needs one component per dimension");
            std::vector<double> src(static_cast<std::size_t>(geom.E) * geom.Q * d);
            for (int c = 0; c < d; ++c) {
                const auto comp = problem.source[c].evaluate(mesh, tables, geom);
                for (std::size_t i = 0; i < comp.size(); ++i) src[i * d + c] = comp[i];
            }
            out.F = reduce_vector(routing, local_load_vector(geom, src, tables));
        } else {
            out.F.assign(static_cast<std::size_t>(routing.N), 0.0);
        }
    }

    if (with_mass) {
        if (comps != 1) throw InputError("mass matrix assembly only supported for scalar fields");
        const std::vector<double> ones(static_cast<std::size_t>(geom.E) * geom.Q, 1.0);
        out.M = reduce_matrix(routing, local_mass(geom, ones, tables));
        out.M->symmetric = true;
    }
    return out;
}

double residual_loss(const SparseOperator& K, const std::vector<double>& U,
                     const std::vector<double>& F, const SparseOperator* weight) {
    if (static_cast<std::int64_t>(U.size()) != K.rows() || U.size() != F.size())
        throw InputError("residual_loss: shape mismatch");
    auto r = K.apply(U);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= F[i];
    if (weight == nullptr) return dot(r, r);
    return dot(r, weight->apply(r));
}

CoefficientField checkerboard_source(int frequency) {
    if (frequency < 1) throw InputError("checkerboard frequency must be >= 1");
    const double K = frequency;
    return CoefficientField::analytic([K](const double* x) {
        const auto cell = static_cast<long long>(std::floor(K * x[0])) +
                          static_cast<long long>(std::floor(K * x[1]));
        return (cell % 2 == 0) ? 1.0 : -1.0;
    });
}

CoefficientField multi_sine_field(int K, double r, std::uint64_t seed) {
    if (K < 1) throw InputError("multi_sine_field: K must be >= 1");
    std::mt19937_64 rng(seed);
    // portable U[-1,1]: 53 mantissa bits, independent of library distributions
    auto uniform = [&rng]() {
        return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    };
    std::vector<double> amp(static_cast<std::size_t>(K) * K);
    for (int i = 1; i <= K; ++i)
        for (int j = 1; j <= K; ++j) {
            const double a = uniform();
            amp[(i - 1) * K + (j - 1)] = a * std::pow(static_cast<double>(i * i + j * j), -r);
        }
    const double pi = 3.14159265358979323846;
    const double scale = pi / (K * K);
    return CoefficientField::analytic([K, amp, scale, pi](const double* x) {
        double s = 0.0;
        for (int i = 1; i <= K; ++i)
            for (int j = 1; j <= K; ++j)
                s += amp[(i - 1) * K + (j - 1)] * std::sin(pi * i * x[0]) * std::sin(pi * j * x[1]);
        return scale * s;
    });
}

std::vector<double> semidiscrete_residual(const SparseOperator& M, const SparseOperator& K,
                                          const std::vector<double>& u_dot,
                                          const std::vector<double>& u,
                                          const std::vector<double>& f_nonlin,
                                          const std::vector<double>& f_ext) {
    auto r = M.apply(u_dot);
    const auto ku = K.apply(u);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += ku[i] + f_nonlin[i] - f_ext[i];
    return r;
}

}  // namespace tg
