#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "tg/errors.hpp"
#include "tg/solver.hpp"
#include "tg/sparse.hpp"

using namespace tg;

namespace {

// dense matrix as a SparseOperator with a full pattern
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

std::vector<double> random_spd(std::int64_t n, std::mt19937_64& rng) {
    std::vector<double> B(n * n);
    for (auto& v : B) v = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
    std::vector<double> A(n * n, 0.0);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j) {
            for (std::int64_t t = 0; t < n; ++t) A[i * n + j] += B[t * n + i] * B[t * n + j];
            if (i == j) A[i * n + j] += n;
        }
    return A;
}

}  // namespace

TEST_CASE("dense LU solves a known system") {
    // A x = b with A = [[2,1,0],[1,3,1],[0,1,2]], x = (1,-1,2)
    const std::vector<double> A = {2, 1, 0, 1, 3, 1, 0, 1, 2};
    const std::vector<double> b = {1, 0, 3};
    const auto x = dense_solve(A, b);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(x[2] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(dense_solve({1, 2, 2, 4}, {1, 1}), NumericalError);
    CHECK_THROWS_AS(dense_solve({1, 2, 3}, {1, 1}), InputError);
}

TEST_CASE("bicgstab matches the dense solve on SPD systems") {
    std::mt19937_64 rng(5);
    const std::int64_t n = 60;
    const auto A = random_spd(n, rng);
    std::vector<double> b(n);
    for (auto& v : b) v = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
    const auto op = dense_operator(A, n, true);

    std::vector<double> x;
    const auto report = bicgstab(op, b, x);
    CHECK(report.converged);
    CHECK(report.rel_residual < 1e-10);
    const auto x_ref = dense_solve(A, b);
    CHECK(rel_error(x, x_ref) < 1e-8);
}

TEST_CASE("bicgstab zero right-hand side") {
    const auto op = dense_operator({2, 0, 0, 2}, 2, true);
    std::vector<double> x;
    const auto report = bicgstab(op, {0.0, 0.0}, x);
    CHECK(report.converged);
    CHECK(x[0] == 0.0);
    CHECK(x[1] == 0.0);
    CHECK(report.iterations == 0);
}

TEST_CASE("bicgstab reports non-convergence honestly") {
    const auto op = dense_operator({1, 0, 0, 1}, 2, true);
    std::vector<double> x;
    SolverConfig cfg;
    cfg.max_iter = 0;
    const auto report = bicgstab(op, {1.0, 1.0}, x, cfg);
    CHECK_FALSE(report.converged);
}

TEST_CASE("condensation eliminates rows and corrects the load") {
    // 4-DoF chain: K tridiagonal [..., -1, 2, -1, ...], prescribe u0 = 1, u3 = 0
    auto p = std::make_shared<CsrPattern>();
    p->rows = 4;
    p->offsets = {0, 2, 5, 8, 10};
    p->cols = {0, 1, 0, 1, 2, 1, 2, 3, 2, 3};
    SparseOperator K;
    K.pattern = p;
    K.values = {2, -1, -1, 2, -1, -1, 2, -1, -1, 2};
    K.symmetric = true;
    const std::vector<double> F = {0, 0, 0, 0};

    const auto sys = condense(K, F, {0, 3}, {1.0, 0.0});
    REQUIRE(sys.free_dofs == std::vector<std::int64_t>{1, 2});
    // F_f = -K_fc g = [1, 0]
    CHECK(sys.F_f[0] == doctest::Approx(1.0));
    CHECK(sys.F_f[1] == doctest::Approx(0.0));

    SolveReport report;
    const auto U = solve_condensed(sys, report);
    // exact solution of the continuous analogue: linear drop 1 -> 0
    CHECK(U[0] == doctest::Approx(1.0));
    CHECK(U[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(U[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(U[3] == doctest::Approx(0.0));

    // expand/restrict round trip
    const auto uf = sys.restrict_free(U);
    CHECK(sys.expand(uf) == U);

    CHECK_THROWS_AS(condense(K, F, {7}, {0.0}), InputError);
    CHECK_THROWS_AS(condense(K, F, {0, 1}, {0.0}), InputError);
}

TEST_CASE("restrict_to_free matches manual restriction") {
    auto p = std::make_shared<CsrPattern>();
    p->rows = 3;
    p->offsets = {0, 3, 6, 9};
    p->cols = {0, 1, 2, 0, 1, 2, 0, 1, 2};
    SparseOperator K;
    K.pattern = p;
    K.values = {4, 1, 0, 1, 5, 2, 0, 2, 6};
    K.symmetric = true;
    const auto sys = condense(K, {0, 0, 0}, {1}, {0.0});

    SparseOperator M = K;
    M.values = {10, 20, 30, 20, 40, 50, 30, 50, 60};
    const auto M_ff = restrict_to_free(M, sys);
    CHECK(M_ff.pattern == sys.K_ff.pattern);
    CHECK(M_ff.values == std::vector<double>{10, 30, 30, 60});
}

TEST_CASE("direct and iterative paths agree") {
    std::mt19937_64 rng(11);
    const std::int64_t n = 40;
    const auto A = random_spd(n, rng);
    std::vector<double> b(n);
    for (auto& v : b) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const auto op = dense_operator(A, n, true);

    CondensedSystem sys;
    sys.K_ff = op;
    sys.F_f = b;
    sys.full_size = n;
    for (std::int64_t i = 0; i < n; ++i) sys.free_dofs.push_back(i);

    SolveReport r1, r2;
    SolverConfig direct_cfg;  // n <= threshold -> LU
    const auto x1 = solve_condensed(sys, r1, direct_cfg);
    SolverConfig iter_cfg;
    iter_cfg.direct_threshold = 0;
    const auto x2 = solve_condensed(sys, r2, iter_cfg);
    CHECK(r1.iterations == 0);
    CHECK(r2.iterations > 0);
    CHECK(rel_error(x2, x1) < 1e-8);
}

TEST_CASE("error metrics") {
    CHECK(rel_error({1.0, 1.0}, {1.0, 1.0}) == 0.0);
    CHECK(rel_error({2.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(rel_error({1.0}, {0.0}), InputError);
    CHECK_THROWS_AS(rel_error({1.0}, {1.0, 2.0}), InputError);

    const auto op = dense_operator({2, 0, 0, 2}, 2, true);
    CHECK(rel_linear_residual(op, {1.0, 1.0}, {2.0, 2.0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(rel_linear_residual(op, {1.0, 1.0}, {0.0, 0.0}), InputError);
}

TEST_CASE("apply and apply_transpose") {
    auto p = std::make_shared<CsrPattern>();
    p->rows = 2;
    p->offsets = {0, 2, 3};
    p->cols = {0, 1, 1};
    SparseOperator A;
    A.pattern = p;
    A.values = {1, 2, 3};
    const auto y = A.apply({1.0, 1.0});
    CHECK(y == std::vector<double>{3.0, 3.0});
    const auto yt = A.apply_transpose({1.0, 1.0});
    CHECK(yt == std::vector<double>{1.0, 5.0});
    CHECK(A.diagonal() == std::vector<double>{1.0, 3.0});
    CHECK(A.dense() == std::vector<double>{1, 2, 0, 3});
    CHECK(p->find(0, 1) == 1);
    CHECK(p->find(1, 0) == -1);
}
