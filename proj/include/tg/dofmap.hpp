#pragma once

#include <cstdint>
#include <vector>

#include "tg/mesh.hpp"

namespace tg {

// Local-to-global DoF map. Numbering is node-major interleaved:
// global = node * components + component.
struct DofMap {
    int components = 1;      // 1 (scalar) or mesh.dim (vector)
    int k = 0;               // local DoFs per element (= k_geom * components)
    std::int64_t N = 0;      // global DoF count
    std::vector<std::int64_t> map;  // E x k
    std::vector<std::int64_t> dirichlet_dofs;  // sorted ascending, unique

    const std::int64_t* element(std::int64_t e) const {
        return &map[static_cast<std::size_t>(e) * k];
    }
};

DofMap build_dofmap(const Mesh& mesh, int components);

// Expands node indices to the DoFs of the given components (all components
// when `component` < 0). Result sorted ascending, unique.
std::vector<std::int64_t> node_dofs(const std::vector<std::int64_t>& nodes, int components,
                                    int component = -1);

}  // namespace tg
