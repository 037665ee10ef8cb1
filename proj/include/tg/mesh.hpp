#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tg/reference.hpp"

namespace tg {

// Conforming partition of the domain into elements of a single kind.
// Node coordinates are stored d-contiguous (node-major).
struct Mesh {
    ElementKind kind = ElementKind::TRI3;
    int dim = 2;
    std::vector<double> nodes;           // N_node x dim
    std::vector<std::int64_t> elements;  // E x k_geom
    std::vector<std::int64_t> boundary_nodes;            // sorted ascending
    std::map<std::string, std::vector<std::int64_t>> boundary_tags;

    std::int64_t node_count() const { return static_cast<std::int64_t>(nodes.size()) / dim; }
    std::int64_t element_count() const {
        return static_cast<std::int64_t>(elements.size()) / element_nodes(kind);
    }
    const double* node(std::int64_t i) const { return &nodes[static_cast<std::size_t>(i) * dim]; }
    const std::int64_t* element(std::int64_t e) const {
        return &elements[static_cast<std::size_t>(e) * element_nodes(kind)];
    }

    // Largest pairwise bounding-box extent; used for relative tolerances.
    double diameter() const;

    // Checks index ranges, repeated nodes within an element, and positive
    // Jacobian determinant at the reference centroid. Throws InputError.
    void validate() const;

    // FNV-1a over kind, coordinates and connectivity bytes.
    std::uint64_t content_hash() const;
};

// Tensor-product grid over [0,extent_0] x ... QUAD4 in 2D, TRI3 by splitting
// each cell along the lower-left to upper-right diagonal, TET4 by the 6-tet
// Kuhn split of each cube.
Mesh generate_grid(ElementKind kind, const std::vector<double>& extents,
                   const std::vector<std::int64_t>& divisions);

// All node indices whose coordinates satisfy the predicate, ascending.
// The predicate receives the node coordinate pointer (mesh.dim entries).
std::vector<std::int64_t> select_boundary(const Mesh& mesh,
                                          const std::function<bool(const double*)>& predicate);

// Predicate for an axis-aligned plane coordinate[axis] == value, with
// tolerance relative to the mesh diameter (default 1e-9 * diameter).
std::function<bool(const double*)> axis_plane(const Mesh& mesh, int axis, double value,
                                              double rel_tol = 1e-9);

// Nodes on the topological boundary of a grid/mesh: nodes incident to an
// element facet that belongs to exactly one element.
std::vector<std::int64_t> topological_boundary(const Mesh& mesh);

}  // namespace tg
