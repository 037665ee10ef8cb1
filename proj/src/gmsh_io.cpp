#include "tg/gmsh_io.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tg/errors.hpp"

namespace tg {

namespace {

struct LineReader {
    std::ifstream in;
    std::string path;
    std::int64_t lineno = 0;

    explicit LineReader(const std::string& p) : in(p), path(p) {
        if (!in) throw InputError("cannot open mesh file: " + p);
    }

    bool next(std::string& line) {
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw InputError(path + ":" + std::to_string(lineno) + ": " + what);
    }
};

int kind_dim(int gmsh_type) {
    switch (gmsh_type) {
        case 1: return 1;   // 2-node line
        case 2: return 2;   // 3-node triangle
        case 3: return 2;   // 4-node quad
        case 4: return 3;   // 4-node tet
        case 15: return 0;  // point
        default: return -1;
    }
}

int kind_nodes(int gmsh_type) {
    switch (gmsh_type) {
        case 1: return 2;
        case 2: return 3;
        case 3: return 4;
        case 4: return 4;
        case 15: return 1;
        default: return -1;
    }
}

}  // namespace

Mesh load_gmsh(const std::string& path) {
    LineReader r(path);
    std::string line;

    std::map<std::int64_t, std::array<double, 3>> node_by_tag;
    struct RawElement {
        int type;
        std::int64_t entity_tag;
        std::vector<std::int64_t> nodes;
    };
    std::vector<RawElement> raw;
    bool saw_format = false;

    while (r.next(line)) {
        if (line[0] != '$') continue;
        const std::string section = line.substr(1);
        if (section == "MeshFormat") {
            if (!r.next(line)) r.fail("unexpected end of file in $MeshFormat");
            std::istringstream ss(line);
            double version = 0;
            int binary = 1;
            ss >> version >> binary;
            if (!ss || version < 4.0 || version >= 5.0 || binary != 0)
                r.fail("unsupported mesh format (need MSH 4.x ASCII)");
            saw_format = true;
            if (!r.next(line) || line != "$EndMeshFormat") r.fail("missing $EndMeshFormat");
        } else if (section == "Nodes") {
            if (!r.next(line)) r.fail("unexpected end of file in $Nodes");
            std::istringstream head(line);
            std::int64_t num_blocks = 0, num_nodes = 0, min_tag = 0, max_tag = 0;
            head >> num_blocks >> num_nodes >> min_tag >> max_tag;
            if (!head) r.fail("malformed $Nodes header");
            for (std::int64_t b = 0; b < num_blocks; ++b) {
                if (!r.next(line)) r.fail("unexpected end of file in $Nodes");
                std::istringstream bh(line);
                int edim = 0, parametric = 0;
                std::int64_t etag = 0, count = 0;
                bh >> edim >> etag >> parametric >> count;
                if (!bh) r.fail("malformed node block header");
                std::vector<std::int64_t> tags(count);
                for (std::int64_t i = 0; i < count; ++i) {
                    if (!r.next(line)) r.fail("unexpected end of file in node tags");
                    std::istringstream ts(line);
                    ts >> tags[i];
                    if (!ts) r.fail("malformed node tag");
                }
                for (std::int64_t i = 0; i < count; ++i) {
                    if (!r.next(line)) r.fail("unexpected end of file in node coordinates");
                    std::istringstream cs(line);
                    std::array<double, 3> x{};
                    cs >> x[0] >> x[1] >> x[2];
                    if (!cs) r.fail("malformed node coordinates");
                    node_by_tag[tags[i]] = x;
                }
            }
            if (!r.next(line) || line != "$EndNodes") r.fail("missing $EndNodes");
        } else if (section == "Elements") {
            if (!r.next(line)) r.fail("unexpected end of file in $Elements");
            std::istringstream head(line);
            std::int64_t num_blocks = 0, num_elems = 0, min_tag = 0, max_tag = 0;
            head >> num_blocks >> num_elems >> min_tag >> max_tag;
            if (!head) r.fail("malformed $Elements header");
            for (std::int64_t b = 0; b < num_blocks; ++b) {
                if (!r.next(line)) r.fail("unexpected end of file in $Elements");
                std::istringstream bh(line);
                int edim = 0, etype = 0;
                std::int64_t etag = 0, count = 0;
                bh >> edim >> etag >> etype >> count;
                if (!bh) r.fail("malformed element block header");
                const int nn = kind_nodes(etype);
                if (nn < 0) r.fail("unsupported element type " + std::to_string(etype));
                for (std::int64_t i = 0; i < count; ++i) {
                    if (!r.next(line)) r.fail("unexpected end of file in element list");
                    std::istringstream es(line);
                    std::int64_t tag = 0;
                    es >> tag;
                    RawElement e{etype, etag, std::vector<std::int64_t>(nn)};
                    for (int a = 0; a < nn; ++a) es >> e.nodes[a];
                    if (!es) r.fail("malformed element connectivity");
                    raw.push_back(std::move(e));
                }
            }
            if (!r.next(line) || line != "$EndElements") r.fail("missing $EndElements");
        } else {
            // skip unknown sections ($Entities, $PhysicalNames, ...)
            const std::string end = "$End" + section;
            while (true) {
                if (!r.next(line)) r.fail("missing " + end);
                if (line == end) break;
            }
        }
    }
    if (!saw_format) throw InputError(path + ": not a Gmsh MSH file (no $MeshFormat)");
    if (node_by_tag.empty()) throw InputError(path + ": no $Nodes section");
    if (raw.empty()) throw InputError(path + ": no $Elements section");

    int vol_dim = 0;
    for (const auto& e : raw) vol_dim = std::max(vol_dim, kind_dim(e.type));
    int vol_type = 0;
    for (const auto& e : raw) {
        if (kind_dim(e.type) != vol_dim) continue;
        if (vol_type == 0) vol_type = e.type;
        else if (vol_type != e.type)
            throw InputError(path + ": mixed volume element kinds (types " +
                             std::to_string(vol_type) + " and " + std::to_string(e.type) + ")");
    }
    Mesh mesh;
    switch (vol_type) {
        case 2: mesh.kind = ElementKind::TRI3; break;
        case 3: mesh.kind = ElementKind::QUAD4; break;
        case 4: mesh.kind = ElementKind::TET4; break;
        default:
            throw InputError(path + ": no supported volume elements (TRI3/QUAD4/TET4)");
    }
    mesh.dim = vol_dim;

    // re-pack node tags to contiguous 0-based indices (ascending tag order)
    std::map<std::int64_t, std::int64_t> index_of;
    mesh.nodes.reserve(node_by_tag.size() * vol_dim);
    for (const auto& [tag, x] : node_by_tag) {
        index_of[tag] = static_cast<std::int64_t>(index_of.size());
        for (int c = 0; c < vol_dim; ++c) mesh.nodes.push_back(x[c]);
    }

    std::set<std::int64_t> bnodes;
    for (const auto& e : raw) {
        std::vector<std::int64_t> conn;
        conn.reserve(e.nodes.size());
        for (auto tag : e.nodes) {
            auto it = index_of.find(tag);
            if (it == index_of.end())
                throw InputError(path + ": element references unknown node tag " +
                                 std::to_string(tag));
            conn.push_back(it->second);
        }
        if (kind_dim(e.type) == vol_dim) {
            mesh.elements.insert(mesh.elements.end(), conn.begin(), conn.end());
        } else {
            const std::string tag_name = std::to_string(e.entity_tag);
            auto& group = mesh.boundary_tags[tag_name];
            for (auto n : conn) {
                bnodes.insert(n);
                group.push_back(n);
            }
        }
    }
    for (auto& [name, group] : mesh.boundary_tags) {
        std::sort(group.begin(), group.end());
        group.erase(std::unique(group.begin(), group.end()), group.end());
    }
    if (bnodes.empty()) {
        mesh.boundary_nodes = topological_boundary(mesh);
    } else {
        mesh.boundary_nodes.assign(bnodes.begin(), bnodes.end());
    }
    mesh.validate();
    return mesh;
}

void write_gmsh(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open file for writing: " + path);
    out.precision(17);
    const std::int64_t N = mesh.node_count(), E = mesh.element_count();
    const int k = element_nodes(mesh.kind);
    int gmsh_type = 2;
    if (mesh.kind == ElementKind::QUAD4) gmsh_type = 3;
    if (mesh.kind == ElementKind::TET4) gmsh_type = 4;

    out << "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n";
    out << "$Nodes\n1 " << N << " 1 " << N << "\n";
    out << mesh.dim << " 1 0 " << N << "\n";
    for (std::int64_t i = 0; i < N; ++i) out << (i + 1) << "\n";
    for (std::int64_t i = 0; i < N; ++i) {
        const double* x = mesh.node(i);
        out << x[0] << " " << x[1] << " " << (mesh.dim == 3 ? x[2] : 0.0) << "\n";
    }
    out << "$EndNodes\n";
    out << "$Elements\n1 " << E << " 1 " << E << "\n";
    out << mesh.dim << " 1 " << gmsh_type << " " << E << "\n";
    for (std::int64_t e = 0; e < E; ++e) {
        out << (e + 1);
        for (int a = 0; a < k; ++a) out << " " << (mesh.element(e)[a] + 1);
        out << "\n";
    }
    out << "$EndElements\n";
}

}  // namespace tg
