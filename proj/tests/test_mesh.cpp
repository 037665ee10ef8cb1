#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tg/errors.hpp"
#include "tg/gmsh_io.hpp"
#include "tg/mesh.hpp"

using namespace tg;

TEST_CASE("grid node and element counts") {
    const auto q = generate_grid(ElementKind::QUAD4, {1.0, 1.0}, {2, 2});
    CHECK(q.node_count() == 9);
    CHECK(q.element_count() == 4);

    const auto t = generate_grid(ElementKind::TRI3, {1.0, 1.0}, {2, 2});
    CHECK(t.node_count() == 9);
    CHECK(t.element_count() == 8);

    const auto tet = generate_grid(ElementKind::TET4, {1.0, 1.0, 1.0}, {2, 2, 2});
    CHECK(tet.node_count() == 27);
    CHECK(tet.element_count() == 48);

    const auto cant = generate_grid(ElementKind::QUAD4, {60.0, 30.0}, {60, 30});
    CHECK(cant.node_count() == 1891);
    CHECK(cant.element_count() == 1800);
}

TEST_CASE("grid connectivity and orientation") {
    const auto q = generate_grid(ElementKind::QUAD4, {2.0, 1.0}, {2, 1});
    // first cell: counterclockwise corners
    CHECK(q.elements[0] == 0);
    CHECK(q.elements[1] == 1);
    CHECK(q.elements[2] == 4);
    CHECK(q.elements[3] == 3);
    CHECK(q.node(4)[0] == doctest::Approx(1.0));
    CHECK(q.node(4)[1] == doctest::Approx(1.0));
    q.validate();

    const auto tet = generate_grid(ElementKind::TET4, {1.0, 1.0, 1.0}, {3, 2, 2});
    tet.validate();  // all positively oriented by construction
}

TEST_CASE("validate rejects broken meshes") {
    Mesh m;
    m.kind = ElementKind::TRI3;
    m.dim = 2;
    m.nodes = {0, 0, 1, 0, 0, 1};
    m.elements = {0, 1, 2};
    m.validate();

    auto bad = m;
    bad.elements = {0, 1, 7};
    CHECK_THROWS_AS(bad.validate(), InputError);

    bad = m;
    bad.elements = {0, 1, 1};
    CHECK_THROWS_AS(bad.validate(), InputError);

    bad = m;
    bad.elements = {0, 2, 1};  // clockwise
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("boundary selection") {
    const auto m = generate_grid(ElementKind::QUAD4, {1.0, 1.0}, {4, 4});
    CHECK(m.boundary_nodes.size() == 16);  // 25 nodes, 9 interior

    const auto left = select_boundary(m, axis_plane(m, 0, 0.0));
    CHECK(left.size() == 5);
    for (const auto n : left) CHECK(m.node(n)[0] == doctest::Approx(0.0));

    const auto topo = topological_boundary(m);
    CHECK(topo == m.boundary_nodes);
}

TEST_CASE("diameter and content hash") {
    const auto m = generate_grid(ElementKind::QUAD4, {1.0, 1.0}, {3, 3});
    CHECK(m.diameter() == doctest::Approx(std::sqrt(2.0)));

    auto m2 = m;
    CHECK(m.content_hash() == m2.content_hash());
    m2.nodes[0] += 1e-12;
    CHECK(m.content_hash() != m2.content_hash());
}

TEST_CASE("gmsh round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "tg_mesh_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "roundtrip.msh").string();

    const auto m = generate_grid(ElementKind::TRI3, {1.0, 2.0}, {3, 4});
    write_gmsh(m, path);
    const auto m2 = load_gmsh(path);
    CHECK(m2.kind == m.kind);
    REQUIRE(m2.node_count() == m.node_count());
    REQUIRE(m2.element_count() == m.element_count());
    for (std::size_t i = 0; i < m.nodes.size(); ++i) CHECK(m2.nodes[i] == m.nodes[i]);
    CHECK(m2.elements == m.elements);
}

TEST_CASE("gmsh parse errors carry a location") {
    const auto dir = std::filesystem::temp_directory_path() / "tg_mesh_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "broken.msh").string();
    {
        std::ofstream out(path);
        out << "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n$Nodes\nnot a number\n";
    }
    CHECK_THROWS_AS(load_gmsh(path), InputError);
    CHECK_THROWS_AS(load_gmsh("/nonexistent/file.msh"), InputError);
}

TEST_CASE("grid input validation") {
    CHECK_THROWS_AS(generate_grid(ElementKind::QUAD4, {1.0}, {2, 2}), InputError);
    CHECK_THROWS_AS(generate_grid(ElementKind::QUAD4, {1.0, 1.0}, {0, 2}), InputError);
}
