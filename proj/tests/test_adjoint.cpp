#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "tg/adjoint.hpp"
#include "tg/batch.hpp"
#include "tg/errors.hpp"
#include "tg/topopt.hpp"

using namespace tg;

namespace {

SparseOperator dense_operator(const std::vector<double>& A, std::int64_t n,
                              bool symmetric = false) {
    auto p = std::make_shared<CsrPattern>();
    p->rows = n;
    p->offsets.resize(n + 1);
    for (std::int64_t i = 0; i <= n; ++i) p->offsets[i] = i * n;
    p->cols.resize(n * n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j) p->cols[i * n + j] = j;
    SparseOperator op;
    op.pattern = p;
    op.values = A;
    op.symmetric = symmetric;
    return op;
}

std::vector<double> unit_elasticity_blocks(const Mesh& mesh, double nu) {
    const auto tables = reference_tables(mesh.kind, default_stiffness_degree(mesh.kind));
    const auto geom = batch_geometry(mesh, tables);
    const auto grads = push_forward(geom, tables);
    const auto [lam, mu] = lame_from_young(1.0, nu);
    const std::size_t nq = static_cast<std::size_t>(geom.E) * geom.Q;
    return local_stiffness_elasticity(geom, grads, std::vector<double>(nq, lam),
                                      std::vector<double>(nq, mu), tables);
}

std::vector<double> centroid(const Mesh& mesh, std::int64_t e) {
    const int k = element_nodes(mesh.kind);
    std::vector<double> c(mesh.dim, 0.0);
    const auto* conn = mesh.element(e);
    for (int a = 0; a < k; ++a)
        for (int d = 0; d < mesh.dim; ++d) c[d] += mesh.node(conn[a])[d] / k;
    return c;
}

}  // namespace

TEST_CASE("adjoint solve reuses symmetric operators and transposes the rest") {
    // symmetric: adjoint equals forward solve
    const std::vector<double> S = {4, 1, 1, 3};
    const auto Ks = dense_operator(S, 2, true);
    SolveReport report;
    const auto ls = adjoint_solve(Ks, {1.0, 2.0}, report);
    const auto ref_s = dense_solve(S, {1.0, 2.0});
    CHECK(rel_error(ls, ref_s) < 1e-10);

    // zero right-hand side
    const auto lz = adjoint_solve(Ks, {0.0, 0.0}, report);
    CHECK(norm2(lz) == 0.0);

    // nonsymmetric: compare against the dense transpose
    const std::vector<double> A = {5, 2, 1, 4};
    const auto Ka = dense_operator(A, 2, false);
    const auto la = adjoint_solve(Ka, {1.0, -1.0}, report);
    const std::vector<double> At = {5, 1, 2, 4};
    const auto ref_a = dense_solve(At, {1.0, -1.0});
    CHECK(rel_error(la, ref_a) < 1e-10);
}

TEST_CASE("gradient products are the outer product restricted to the pattern") {
    const auto K = dense_operator({1, 2, 3, 4}, 2, false);
    const std::vector<double> lambda = {2.0, -1.0};
    const std::vector<double> U = {3.0, 5.0};
    const auto g = gradient_products(K, lambda, U);
    CHECK(g.dK.values == std::vector<double>{6.0, 10.0, -3.0, -5.0});
    CHECK(g.dF == std::vector<double>{-2.0, 1.0});
    CHECK(g.dK.pattern == K.pattern);
}

TEST_CASE("penalized modulus: frozen values and input checks") {
    const auto E = simp_young({1.0, 0.0, 0.5}, 3.0, 70.0, 70000.0);
    CHECK(E[0] == doctest::Approx(70000.0));
    CHECK(E[1] == doctest::Approx(70.0));
    CHECK(E[2] == doctest::Approx(70.0 + 0.125 * (70000.0 - 70.0)).epsilon(1e-15));
    CHECK(E[2] == doctest::Approx(8811.25).epsilon(1e-12));
    CHECK_THROWS_AS(simp_young({1.5}, 3.0, 70.0, 70000.0), InputError);
    CHECK_THROWS_AS(simp_young({-0.1}, 3.0, 70.0, 70000.0), InputError);
    CHECK_THROWS_AS(simp_young({0.5}, 3.0, 70000.0, 70.0), InputError);
}

TEST_CASE("compliance is the load-displacement product") {
    CHECK(compliance({4.0}, {2.0}) == doctest::Approx(8.0));
    CHECK(compliance({1.0, 2.0}, {3.0, 4.0}) == doctest::Approx(11.0));
    CHECK_THROWS_AS(compliance({1.0}, {1.0, 2.0}), InputError);
}

TEST_CASE("compliance sensitivity: sign, zero state, quadratic-form oracle") {
    const auto mesh = generate_grid(ElementKind::QUAD4, {2.0, 1.0}, {4, 2});
    const auto dofmap = build_dofmap(mesh, 2);
    const double nu = 0.3, p = 3.0, E_min = 70.0, E_max = 70000.0;
    const auto K0 = unit_elasticity_blocks(mesh, nu);

    std::mt19937_64 rng(7);
    std::vector<double> rho(static_cast<std::size_t>(mesh.element_count()));
    std::vector<double> U(static_cast<std::size_t>(mesh.node_count()) * 2);
    for (auto& v : rho) v = 0.2 + 0.6 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    for (auto& v : U) v = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;

    const auto s = simp_sensitivity(rho, p, E_min, E_max, K0, mesh, dofmap, U);
    REQUIRE(s.size() == rho.size());
    const int k = 8;
    for (std::int64_t e = 0; e < mesh.element_count(); ++e) {
        CHECK(s[e] <= 1e-12);
        // quadratic form assembled by hand
        const auto dofs = dofmap.element(e);
        double quad = 0.0;
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                quad += U[dofs[a]] * K0[(e * k + a) * k + b] * U[dofs[b]];
        const double expected =
            -p * std::pow(rho[e], p - 1.0) * (E_max - E_min) * quad;
        CHECK(s[e] == doctest::Approx(expected).epsilon(1e-12));
    }

    const std::vector<double> zero(U.size(), 0.0);
    for (const auto v : simp_sensitivity(rho, p, E_min, E_max, K0, mesh, dofmap, zero))
        CHECK(v == 0.0);
}

TEST_CASE("sensitivity filter matches the brute-force kernel sum") {
    const auto mesh = generate_grid(ElementKind::QUAD4, {6.0, 6.0}, {6, 6});
    const std::int64_t E = mesh.element_count();
    std::mt19937_64 rng(99);
    std::vector<double> rho(E), sens(E);
    for (auto& v : rho) v = 0.1 + 0.8 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    for (auto& v : sens) v = -static_cast<double>(rng() >> 11) * 0x1.0p-53;
    sens[14] = -25.0;  // spike to exercise the averaging

    const double radius = 1.6;
    const auto filtered = sensitivity_filter(mesh, radius, rho, sens);

    std::vector<std::vector<double>> c(E);
    for (std::int64_t e = 0; e < E; ++e) c[e] = centroid(mesh, e);
    for (std::int64_t e = 0; e < E; ++e) {
        double num = 0.0, den = 0.0;
        for (std::int64_t j = 0; j < E; ++j) {
            double d2 = 0.0;
            for (int d = 0; d < mesh.dim; ++d) d2 += (c[e][d] - c[j][d]) * (c[e][d] - c[j][d]);
            const double w = std::max(0.0, radius - std::sqrt(d2));
            num += w * rho[j] * sens[j];
            den += w;
        }
        const double expected = num / (std::max(rho[e], 1e-3) * den);
        CHECK(filtered[e] == doctest::Approx(expected).epsilon(1e-12));
    }

    // radius below the centroid spacing leaves only the self term
    const auto self_only = sensitivity_filter(mesh, 0.5, rho, sens);
    for (std::int64_t e = 0; e < E; ++e)
        CHECK(self_only[e] == doctest::Approx(sens[e]).epsilon(1e-12));
}

TEST_CASE("element volumes and volume fraction") {
    const auto mesh = generate_grid(ElementKind::TRI3, {2.0, 1.0}, {4, 2});
    const auto vols = element_volumes(mesh);
    double total = 0.0;
    for (const auto v : vols) total += v;
    CHECK(total == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(volume_fraction(std::vector<double>(vols.size(), 1.0), vols) == doctest::Approx(1.0));
    CHECK(volume_fraction(std::vector<double>(vols.size(), 0.5), vols) == doctest::Approx(0.5));
    // unequal weights: two elements of volumes 1 and 3
    CHECK(volume_fraction({1.0, 0.0}, {1.0, 3.0}) == doctest::Approx(0.25));
}

TEST_CASE("moving-asymptote update: fixed point and box constraints") {
    MmaConfig cfg;
    MmaOptimizer opt(4, cfg);
    const std::vector<double> rho = {0.3, 0.5, 0.7, 0.4};
    const std::vector<double> vols(4, 1.0);
    // zero sensitivity with a satisfied constraint changes nothing
    const auto same = opt.update(rho, {0.0, 0.0, 0.0, 0.0}, vols, 0.6);
    for (std::size_t i = 0; i < 4; ++i) CHECK(same[i] == doctest::Approx(rho[i]).epsilon(1e-9));

    // strong descent direction respects bounds and move limits
    MmaOptimizer opt2(4, cfg);
    const auto pushed = opt2.update(rho, {-100.0, -100.0, -100.0, -100.0}, vols, 1.0);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(pushed[i] >= rho[i]);
        CHECK(pushed[i] <= rho[i] + cfg.move_limit + 1e-12);
        CHECK(pushed[i] <= cfg.rho_max);
        CHECK(pushed[i] >= cfg.rho_min);
    }
}

TEST_CASE("moving-asymptote update solves a projected quadratic") {
    // min sum (x_i - c_i)^2  s.t.  mean(x) <= b/n, bounds [~0, 1]
    const std::size_t n = 6;
    const std::vector<double> c = {0.8, 0.6, 0.7, 0.5, 0.75, 0.65};
    const double b = 3.0;  // sum c = 4.0 > b, constraint active
    MmaConfig cfg;
    cfg.rho_min = 0.0;
    MmaOptimizer opt(n, cfg);
    std::vector<double> x(n, b / n);
    const std::vector<double> vols(n, 1.0);
    for (int it = 0; it < 200; ++it) {
        std::vector<double> dcost(n);
        for (std::size_t i = 0; i < n; ++i) dcost[i] = 2.0 * (x[i] - c[i]);
        x = opt.update(x, dcost, vols, b / n);
    }
    // analytic optimum: x_i = c_i - (sum c - b)/n, all interior
    const double shift = (4.0 - b) / n;
    for (std::size_t i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(c[i] - shift).epsilon(1e-4));
    double sum = 0.0;
    for (const auto v : x) sum += v;
    CHECK(sum == doctest::Approx(b).epsilon(1e-6));
    CHECK_FALSE(opt.last_infeasible());
}

TEST_CASE("lumped traction load on a straight edge") {
    const auto mesh = generate_grid(ElementKind::QUAD4, {2.0, 1.0}, {4, 2});
    const auto dofmap = build_dofmap(mesh, 2);
    const auto right = select_boundary(mesh, axis_plane(mesh, 0, 2.0));
    REQUIRE(right.size() == 3);
    const auto F = traction_load(mesh, dofmap, right, {0.0, -100.0});
    double fx = 0.0, fy = 0.0;
    for (std::int64_t i = 0; i < mesh.node_count(); ++i) {
        fx += F[i * 2 + 0];
        fy += F[i * 2 + 1];
    }
    CHECK(fx == doctest::Approx(0.0));
    CHECK(fy == doctest::Approx(-100.0).epsilon(1e-13));
    // edge midpoint carries two half-edges, the corners one each
    for (const auto nid : right) {
        const double y = mesh.node(nid)[1];
        const double expected = (y == 0.0 || y == 1.0) ? -25.0 : -50.0;
        CHECK(F[nid * 2 + 1] == doctest::Approx(expected).epsilon(1e-13));
        CHECK(F[nid * 2 + 0] == 0.0);
    }
}
