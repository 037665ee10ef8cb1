#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "tg/errors.hpp"
#include "tg/physics.hpp"
#include "tg/timestep.hpp"

using namespace tg;

namespace {

struct Problem {
    Mesh mesh;
    DofMap dofmap;
    RoutingMatrices routing;
};

Problem poisson_grid(ElementKind kind, std::vector<double> ext, std::vector<std::int64_t> div,
                     int components = 1) {
    Problem p;
    p.mesh = generate_grid(kind, ext, div);
    p.dofmap = build_dofmap(p.mesh, components);
    p.routing = build_routing(p.mesh, p.dofmap);
    return p;
}

}  // namespace

TEST_CASE("checkerboard source values and cancellation") {
    const auto f = checkerboard_source(2);
    const double p1[2] = {0.1, 0.1};
    const double p2[2] = {0.6, 0.1};
    const double p3[2] = {0.0, 0.0};
    const double p4[2] = {0.6, 0.6};
    CHECK(f.at(p1) == 1.0);
    CHECK(f.at(p2) == -1.0);
    CHECK(f.at(p3) == 1.0);
    CHECK(f.at(p4) == 1.0);

    // integral over [0,1]^2 vanishes for even frequency on an aligned mesh
    auto p = poisson_grid(ElementKind::QUAD4, {1.0, 1.0}, {4, 4});
    ProblemSpec spec;
    spec.source = {f};
    const auto sys = assemble(spec, p.mesh, p.dofmap, p.routing);
    double sum = 0.0;
    for (const auto v : sys.F) sum += v;
    CHECK(std::abs(sum) < 1e-13);
}

TEST_CASE("multi-sine field: deterministic, seed-sensitive, zero on the boundary") {
    const auto f1 = multi_sine_field(4, 1.0, 42);
    const auto f2 = multi_sine_field(4, 1.0, 42);
    const auto f3 = multi_sine_field(4, 1.0, 43);
    const double mid[2] = {0.37, 0.61};
    CHECK(f1.at(mid) == f2.at(mid));
    CHECK(f1.at(mid) != f3.at(mid));
    for (const double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double e0[2] = {0.0, t};
        const double e1[2] = {1.0, t};
        const double e2[2] = {t, 0.0};
        const double e3[2] = {t, 1.0};
        CHECK(std::abs(f1.at(e0)) < 1e-14);
        CHECK(std::abs(f1.at(e1)) < 1e-14);
        CHECK(std::abs(f1.at(e2)) < 1e-14);
        CHECK(std::abs(f1.at(e3)) < 1e-14);
    }
}

TEST_CASE("assembled mass row sums integrate to the domain volume") {
    for (const auto kind : {ElementKind::TRI3, ElementKind::QUAD4, ElementKind::TET4}) {
        const int d = element_dim(kind);
        auto p = poisson_grid(kind, std::vector<double>(d, 1.0),
                              std::vector<std::int64_t>(d, 3));
        ProblemSpec spec;
        spec.source = {CoefficientField::constant(0.0)};
        const auto sys = assemble(spec, p.mesh, p.dofmap, p.routing, true);
        REQUIRE(sys.M.has_value());
        double total = 0.0;
        for (const auto v : sys.M->values) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("stiffness is linear in the diffusion coefficient") {
    auto p = poisson_grid(ElementKind::TRI3, {1.0, 1.0}, {3, 3});
    ProblemSpec s1;
    s1.diffusion = CoefficientField::constant(1.0);
    s1.source = {CoefficientField::constant(1.0)};
    ProblemSpec s2 = s1;
    s2.diffusion = CoefficientField::constant(2.0);
    const auto a1 = assemble(s1, p.mesh, p.dofmap, p.routing);
    const auto a2 = assemble(s2, p.mesh, p.dofmap, p.routing);
    REQUIRE(a1.K.values.size() == a2.K.values.size());
    for (std::size_t i = 0; i < a1.K.values.size(); ++i)
        CHECK(a2.K.values[i] == doctest::Approx(2.0 * a1.K.values[i]).epsilon(1e-14));
    CHECK(a1.F == a2.F);
}

TEST_CASE("residual loss") {
    auto p = poisson_grid(ElementKind::TRI3, {1.0, 1.0}, {4, 4});
    ProblemSpec spec;
    spec.source = {CoefficientField::constant(1.0)};
    for (const auto n : p.mesh.boundary_nodes) {
        spec.dirichlet_dofs.push_back(n);
        spec.dirichlet_values.push_back(0.0);
    }
    const auto sys = assemble(spec, p.mesh, p.dofmap, p.routing);
    const auto cond = condense(sys.K, sys.F, spec.dirichlet_dofs, spec.dirichlet_values);
    SolveReport report;
    const auto U = solve_condensed(cond, report);
    const auto uf = cond.restrict_free(U);
    // loss at the solution is tiny, loss elsewhere is positive
    CHECK(residual_loss(cond.K_ff, uf, cond.F_f) < 1e-18);
    auto shifted = uf;
    shifted[0] += 1.0;
    CHECK(residual_loss(cond.K_ff, shifted, cond.F_f) > 0.0);
    // zero state: loss equals ||F||^2
    double f2 = 0.0;
    for (const auto v : cond.F_f) f2 += v * v;
    const std::vector<double> zero(uf.size(), 0.0);
    CHECK(residual_loss(cond.K_ff, zero, cond.F_f) == doctest::Approx(f2).epsilon(1e-14));
}

TEST_CASE("interior values are positive for a positive source") {
    auto p = poisson_grid(ElementKind::TET4, {1.0, 1.0, 1.0}, {4, 4, 4});
    ProblemSpec spec;
    spec.source = {CoefficientField::constant(1.0)};
    std::vector<std::int64_t> dofs(p.mesh.boundary_nodes.begin(), p.mesh.boundary_nodes.end());
    const auto sys = assemble(spec, p.mesh, p.dofmap, p.routing);
    const auto cond = condense(sys.K, sys.F, dofs, std::vector<double>(dofs.size(), 0.0));
    SolveReport report;
    const auto U = solve_condensed(cond, report);
    for (const auto i : cond.free_dofs) CHECK(U[i] > 0.0);
}

TEST_CASE("semidiscrete residual combines the pieces") {
    auto pattern = std::make_shared<CsrPattern>();
    pattern->rows = 2;
    pattern->offsets = {0, 1, 2};
    pattern->cols = {0, 1};
    SparseOperator M, K;
    M.pattern = pattern;
    M.values = {2.0, 3.0};
    K.pattern = pattern;
    K.values = {5.0, 7.0};
    const auto r = semidiscrete_residual(M, K, {1.0, 1.0}, {1.0, 2.0}, {0.5, -0.5}, {1.0, 1.0});
    CHECK(r[0] == doctest::Approx(2.0 + 5.0 + 0.5 - 1.0));
    CHECK(r[1] == doctest::Approx(3.0 + 14.0 - 0.5 - 1.0));
}

TEST_CASE("wave stepping: residual, linearity, zero fixed point") {
    auto p = poisson_grid(ElementKind::TRI3, {1.0, 1.0}, {8, 8});
    ProblemSpec spec;
    spec.source = {CoefficientField::constant(0.0)};
    const auto sys = assemble(spec, p.mesh, p.dofmap, p.routing, true);
    std::vector<std::int64_t> dofs(p.mesh.boundary_nodes.begin(), p.mesh.boundary_nodes.end());
    const auto cond =
        condense(sys.K, sys.F, dofs, std::vector<double>(dofs.size(), 0.0));
    const auto M_ff = restrict_to_free(*sys.M, cond);

    const double dt = 0.01, c = 1.3;
    const std::size_t nf = cond.free_dofs.size();
    std::vector<double> u0(nf), v0(nf, 0.0);
    for (std::size_t i = 0; i < nf; ++i) {
        const double* x = p.mesh.node(cond.free_dofs[i]);
        u0[i] = std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
    }
    const auto u1 = wave_initial_step(M_ff, cond.K_ff, u0, v0, dt, c);
    SolveReport report;
    const auto u2 = wave_step(M_ff, cond.K_ff, u0, u1, dt, c, WaveScheme::CentralDifference, report);
    const auto r = wave_residual(M_ff, cond.K_ff, u0, u1, u2, dt, c);
    const double scale = c * c * norm2(cond.K_ff.apply(u1));
    CHECK(norm2(r) < 1e-8 * scale);

    // the explicit step is linear in the states
    std::vector<double> u0h(nf), u1h(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        u0h[i] = 0.5 * u0[i];
        u1h[i] = 0.5 * u1[i];
    }
    const auto u2h =
        wave_step(M_ff, cond.K_ff, u0h, u1h, dt, c, WaveScheme::CentralDifference, report);
    for (std::size_t i = 0; i < nf; ++i)
        CHECK(u2h[i] == doctest::Approx(0.5 * u2[i]).epsilon(1e-9));

    // zero state stays zero and carries no energy
    const std::vector<double> z(nf, 0.0);
    const auto zn = wave_step(M_ff, cond.K_ff, z, z, dt, c, WaveScheme::CentralDifference, report);
    CHECK(norm2(zn) == 0.0);
    CHECK(wave_energy(M_ff, cond.K_ff, z, z, dt, c) == 0.0);
    CHECK(wave_energy(M_ff, cond.K_ff, u0, u1, dt, c) > 0.0);

    // implicit variant also satisfies its own update equation
    const auto u2cn =
        wave_step(M_ff, cond.K_ff, u0, u1, dt, c, WaveScheme::CrankNicolson, report);
    const auto lhs_op = [&](const std::vector<double>& v) {
        auto mv = M_ff.apply(v);
        const auto kv = cond.K_ff.apply(v);
        for (std::size_t i = 0; i < mv.size(); ++i) mv[i] += 0.25 * dt * dt * c * c * kv[i];
        return mv;
    };
    auto lhs = lhs_op(u2cn);
    std::vector<double> two_u1_minus_u0(nf), two_u1_plus_u0(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        two_u1_minus_u0[i] = 2.0 * u1[i] - u0[i];
        two_u1_plus_u0[i] = 2.0 * u1[i] + u0[i];
    }
    const auto rhs_m = M_ff.apply(two_u1_minus_u0);
    const auto rhs_k = cond.K_ff.apply(two_u1_plus_u0);
    double err = 0.0, rhs2 = 0.0;
    for (std::size_t i = 0; i < nf; ++i) {
        const double rhs = rhs_m[i] - 0.25 * dt * dt * c * c * rhs_k[i];
        err += (lhs[i] - rhs) * (lhs[i] - rhs);
        rhs2 += rhs * rhs;
    }
    CHECK(std::sqrt(err) < 1e-8 * std::sqrt(rhs2));
}

TEST_CASE("crank-nicolson requires a shared sparsity pattern") {
    auto p = poisson_grid(ElementKind::TRI3, {1.0, 1.0}, {2, 2});
    ProblemSpec spec;
    spec.source = {CoefficientField::constant(0.0)};
    const auto sys = assemble(spec, p.mesh, p.dofmap, p.routing, true);
    SparseOperator M_copy = *sys.M;
    M_copy.pattern = std::make_shared<CsrPattern>(*sys.M->pattern);
    const std::vector<double> z(static_cast<std::size_t>(p.mesh.node_count()), 0.0);
    SolveReport report;
    CHECK_THROWS_AS(
        wave_step(M_copy, sys.K, z, z, 0.01, 1.0, WaveScheme::CrankNicolson, report),
        InputError);
}

TEST_CASE("allen-cahn step matches the scalar backward-Euler oracle") {
    auto p = poisson_grid(ElementKind::QUAD4, {1.0, 1.0}, {4, 4});
    ProblemSpec spec;
    spec.source = {CoefficientField::constant(0.0)};
    const auto sys = assemble(spec, p.mesh, p.dofmap, p.routing, true);

    const double dt = 0.05, a = 0.8, eps = 1.5;
    const AllenCahnStepper stepper(p.mesh, p.dofmap, p.routing, *sys.M, sys.K, {}, {}, dt, a,
                                   eps);

    // constant state: K u = 0, so the PDE reduces to the scalar ODE
    // (u1 - u0)/dt + eps^2 u1 (u1^2 - 1) = 0
    const double u0 = 0.4;
    std::vector<double> state(static_cast<std::size_t>(p.mesh.node_count()), u0);
    double rnorm = 0.0;
    int nit = 0;
    const auto next = stepper.step(state, &rnorm, &nit);
    CHECK(nit >= 1);

    double u = u0;
    for (int it = 0; it < 60; ++it) {
        const double g = (u - u0) / dt + eps * eps * u * (u * u - 1.0);
        const double dg = 1.0 / dt + eps * eps * (3.0 * u * u - 1.0);
        u -= g / dg;
        if (std::abs(g) < 1e-15) break;
    }
    for (const auto v : next) CHECK(v == doctest::Approx(u).epsilon(1e-12));

    // converged residual is consistent with the reported norm
    const auto r = stepper.residual(state, next);
    CHECK(norm2(r) == doctest::Approx(rnorm).epsilon(1e-9));

    // equilibria of the reaction term are fixed points
    for (const double fix : {0.0, 1.0, -1.0}) {
        std::vector<double> s(state.size(), fix);
        const auto nxt = stepper.step(s);
        for (const auto v : nxt) CHECK(v == doctest::Approx(fix).epsilon(1e-11));
    }
}
