#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <random>
#include <set>
#include <vector>

#include "tg/batch.hpp"
#include "tg/dofmap.hpp"
#include "tg/mesh.hpp"
#include "tg/parallel.hpp"
#include "tg/routing.hpp"

using namespace tg;

namespace {

struct Assembled {
    SparseOperator K;
    std::vector<double> F;
    std::vector<double> K_local, F_local;
};

Assembled assemble_diffusion(const Mesh& mesh, const DofMap& dofmap,
                             const RoutingMatrices& routing) {
    const auto tables = reference_tables(mesh.kind, default_stiffness_degree(mesh.kind));
    const auto geom = batch_geometry(mesh, tables);
    const auto grads = push_forward(geom, tables);
    const std::vector<double> coeff(static_cast<std::size_t>(geom.E) * geom.Q, 1.0);
    Assembled a;
    a.K_local = local_stiffness_diffusion(geom, grads, coeff, tables);
    a.F_local = local_load(geom, coeff, tables);
    a.K = reduce_matrix(routing, a.K_local);
    a.F = reduce_vector(routing, a.F_local);
    return a;
}

}  // namespace

TEST_CASE("routing structure on a small grid") {
    const auto mesh = generate_grid(ElementKind::TRI3, {1.0, 1.0}, {4, 4});
    const auto dofmap = build_dofmap(mesh, 1);
    const auto routing = build_routing(mesh, dofmap);

    CHECK(routing.N == mesh.node_count());
    CHECK(routing.E == mesh.element_count());
    CHECK(routing.k == 3);
    CHECK(static_cast<std::int64_t>(routing.vec_slots.size()) == routing.E * routing.k);
    CHECK(static_cast<std::int64_t>(routing.mat_slots.size()) ==
          routing.E * routing.k * routing.k);

    // pattern equals the node adjacency closure
    std::set<std::pair<std::int64_t, std::int64_t>> expected;
    for (std::int64_t e = 0; e < mesh.element_count(); ++e) {
        const auto* conn = mesh.element(e);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) expected.insert({conn[a], conn[b]});
    }
    CHECK(routing.pattern->nnz() == static_cast<std::int64_t>(expected.size()));
    for (std::int64_t i = 0; i < routing.pattern->rows; ++i)
        for (std::int64_t t = routing.pattern->offsets[i]; t < routing.pattern->offsets[i + 1];
             ++t)
            CHECK(expected.count({i, routing.pattern->cols[t]}) == 1);

    // segments ascending, every local slot routed exactly once
    std::vector<char> seen(routing.vec_slots.size(), 0);
    for (std::size_t s = 0; s + 1 < routing.vec_offsets.size(); ++s)
        for (auto t = routing.vec_offsets[s]; t < routing.vec_offsets[s + 1]; ++t) {
            if (t > routing.vec_offsets[s]) CHECK(routing.vec_slots[t] > routing.vec_slots[t - 1]);
            CHECK(seen[routing.vec_slots[t]] == 0);
            seen[routing.vec_slots[t]] = 1;
        }
    for (const auto c : seen) CHECK(c == 1);
}

TEST_CASE("reduce equals scatter-add oracle bitwise") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 12; ++trial) {
        const auto kinds = std::vector{ElementKind::TRI3, ElementKind::QUAD4, ElementKind::TET4};
        const auto kind = kinds[trial % 3];
        const int d = element_dim(kind);
        std::vector<std::int64_t> div;
        std::vector<double> ext;
        for (int c = 0; c < d; ++c) {
            div.push_back(1 + static_cast<std::int64_t>(rng() % 5));
            ext.push_back(1.0 + 0.25 * static_cast<double>(rng() % 4));
        }
        const auto mesh = generate_grid(kind, ext, div);
        const int components = trial % 2 == 0 ? 1 : d;
        const auto dofmap = build_dofmap(mesh, components);
        const auto routing = build_routing(mesh, dofmap);

        const auto tables = reference_tables(kind, default_stiffness_degree(kind));
        const auto geom = batch_geometry(mesh, tables);
        const auto grads = push_forward(geom, tables);
        const std::size_t nq = static_cast<std::size_t>(geom.E) * geom.Q;
        std::vector<double> K_local, F_local;
        if (components == 1) {
            K_local = local_stiffness_diffusion(geom, grads, std::vector<double>(nq, 1.0), tables);
            F_local = local_load(geom, std::vector<double>(nq, 1.0), tables);
        } else {
            const auto [lam, mu] = lame_from_young(1.0, 0.3);
            K_local = local_stiffness_elasticity(geom, grads, std::vector<double>(nq, lam),
                                                 std::vector<double>(nq, mu), tables);
            F_local = local_load_vector(geom, std::vector<double>(nq * d, 1.0), tables);
        }
        const auto K = reduce_matrix(routing, K_local);
        const auto F = reduce_vector(routing, F_local);
        SparseOperator K_ref;
        std::vector<double> F_ref;
        scatter_add_oracle(mesh, dofmap, K_local, F_local, K_ref, F_ref);
        CHECK(K.values == K_ref.values);
        CHECK(K.pattern->cols == K_ref.pattern->cols);
        CHECK(K.pattern->offsets == K_ref.pattern->offsets);
        CHECK(F == F_ref);
    }
}

TEST_CASE("reduce is independent of the worker count") {
    const auto mesh = generate_grid(ElementKind::QUAD4, {1.0, 1.0}, {13, 7});
    const auto dofmap = build_dofmap(mesh, 1);
    const auto routing = build_routing(mesh, dofmap);

    set_thread_count(1);
    const auto a1 = assemble_diffusion(mesh, dofmap, routing);
    set_thread_count(3);
    const auto a3 = assemble_diffusion(mesh, dofmap, routing);
    set_thread_count(8);
    const auto a8 = assemble_diffusion(mesh, dofmap, routing);
    set_thread_count(0);

    CHECK(a1.K.values == a3.K.values);
    CHECK(a1.K.values == a8.K.values);
    CHECK(a1.F == a3.F);
    CHECK(a1.F == a8.F);
}

TEST_CASE("known load vector on a 1x1 triangulated square") {
    const auto mesh = generate_grid(ElementKind::TRI3, {1.0, 1.0}, {1, 1});
    const auto dofmap = build_dofmap(mesh, 1);
    const auto routing = build_routing(mesh, dofmap);
    const auto a = assemble_diffusion(mesh, dofmap, routing);
    // two triangles of area 1/2; f = 1 gives area/3 per corner
    // diagonal nodes 0 and 3 belong to both triangles
    REQUIRE(a.F.size() == 4);
    CHECK(a.F[0] == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
    CHECK(a.F[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(a.F[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(a.F[3] == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
    double sum = 0.0;
    for (const auto v : a.F) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("routing cache round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "tg_routing_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "routing.bin").string();

    const auto mesh = generate_grid(ElementKind::TET4, {1.0, 1.0, 1.0}, {2, 3, 2});
    const auto dofmap = build_dofmap(mesh, 1);
    const auto routing = build_routing(mesh, dofmap);
    const auto key = mesh.content_hash();
    save_routing(routing, key, path);

    RoutingMatrices loaded;
    REQUIRE(load_routing(loaded, key, path));
    CHECK(loaded.N == routing.N);
    CHECK(loaded.E == routing.E);
    CHECK(loaded.k == routing.k);
    CHECK(loaded.pattern->offsets == routing.pattern->offsets);
    CHECK(loaded.pattern->cols == routing.pattern->cols);
    CHECK(loaded.vec_offsets == routing.vec_offsets);
    CHECK(loaded.vec_slots == routing.vec_slots);
    CHECK(loaded.mat_offsets == routing.mat_offsets);
    CHECK(loaded.mat_slots == routing.mat_slots);

    RoutingMatrices wrong;
    CHECK_FALSE(load_routing(wrong, key + 1, path));
    CHECK_FALSE(load_routing(wrong, key, (dir / "missing.bin").string()));
}
