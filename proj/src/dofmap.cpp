#include "tg/dofmap.hpp"

#include <algorithm>

#include "tg/errors.hpp"

namespace tg {

DofMap build_dofmap(const Mesh& mesh, int components) {
    if (components != 1 && components != mesh.dim)
        throw InputError("components per node must be 1 or the mesh dimension");
    const int kg = element_nodes(mesh.kind);
    DofMap dm;
    dm.components = components;
    dm.k = kg * components;
    dm.N = mesh.node_count() * components;
    dm.map.resize(static_cast<std::size_t>(mesh.element_count()) * dm.k);
    for (std::int64_t e = 0; e < mesh.element_count(); ++e) {
        const std::int64_t* conn = mesh.element(e);
        std::int64_t* out = &dm.map[static_cast<std::size_t>(e) * dm.k];
        for (int a = 0; a < kg; ++a)
            for (int c = 0; c < components; ++c) out[a * components + c] = conn[a] * components + c;
    }
    return dm;
}

std::vector<std::int64_t> node_dofs(const std::vector<std::int64_t>& nodes, int components,
                                    int component) {
    std::vector<std::int64_t> dofs;
    for (auto n : nodes) {
        if (component < 0) {
            for (int c = 0; c < components; ++c) dofs.push_back(n * components + c);
        } else {
            dofs.push_back(n * components + component);
        }
    }
    std::sort(dofs.begin(), dofs.end());
    dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
    return dofs;
}

}  // namespace tg
