#include "tg/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>

#include "tg/errors.hpp"

namespace tg {

double Mesh::diameter() const {
    if (node_count() == 0) return 0.0;
    std::array<double, 3> lo{}, hi{};
    lo.fill(std::numeric_limits<double>::max());
    hi.fill(std::numeric_limits<double>::lowest());
    for (std::int64_t i = 0; i < node_count(); ++i)
        for (int c = 0; c < dim; ++c) {
            lo[c] = std::min(lo[c], node(i)[c]);
            hi[c] = std::max(hi[c], node(i)[c]);
        }
    double s = 0;
    for (int c = 0; c < dim; ++c) s += (hi[c] - lo[c]) * (hi[c] - lo[c]);
    return std::sqrt(s);
}

namespace {

// Signed Jacobian determinant at the reference centroid.
double centroid_det(const Mesh& mesh, std::int64_t e) {
    const auto ref = reference_element(mesh.kind);
    const int k = ref.k, d = ref.d;
    std::array<double, 3> centroid{};
    for (int a = 0; a < k; ++a) {
        const auto p = ref.node(a);
        for (int c = 0; c < d; ++c) centroid[c] += p[c] / k;
    }
    const auto grads = ref.shape_gradients(centroid.data());
    double J[3][3] = {};
    const std::int64_t* conn = mesh.element(e);
    for (int a = 0; a < k; ++a) {
        const double* x = mesh.node(conn[a]);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) J[i][j] += x[i] * grads[a * d + j];
    }
    if (d == 2) return J[0][0] * J[1][1] - J[0][1] * J[1][0];
    return J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
           J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
           J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
}

}  // namespace

void Mesh::validate() const {
    if (dim != element_dim(kind)) throw InputError("mesh dimension does not match element kind");
    const int k = element_nodes(kind);
    const std::int64_t N = node_count();
    for (std::int64_t e = 0; e < element_count(); ++e) {
        const std::int64_t* conn = element(e);
        for (int a = 0; a < k; ++a) {
            if (conn[a] < 0 || conn[a] >= N)
                throw InputError("element " + std::to_string(e) + " references node " +
                                 std::to_string(conn[a]) + " outside [0," + std::to_string(N) + ")");
            for (int b = a + 1; b < k; ++b)
                if (conn[a] == conn[b])
                    throw InputError("element " + std::to_string(e) + " repeats node " +
                                     std::to_string(conn[a]));
        }
        if (centroid_det(*this, e) <= 0.0)
            throw InputError("element " + std::to_string(e) +
                             " has non-positive orientation (det J <= 0)");
    }
    for (auto b : boundary_nodes)
        if (b < 0 || b >= N) throw InputError("boundary node index out of range");
}

std::uint64_t Mesh::content_hash() const {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    const int kind_tag = static_cast<int>(kind);
    mix(&kind_tag, sizeof kind_tag);
    mix(&dim, sizeof dim);
    mix(nodes.data(), nodes.size() * sizeof(double));
    mix(elements.data(), elements.size() * sizeof(std::int64_t));
    return h;
}

Mesh generate_grid(ElementKind kind, const std::vector<double>& extents,
                   const std::vector<std::int64_t>& divisions) {
    const int d = element_dim(kind);
    if (static_cast<int>(extents.size()) != d || static_cast<int>(divisions.size()) != d)
        throw InputError("generate_grid: extents/divisions must have " + std::to_string(d) +
                         " entries for " + to_string(kind));
    for (auto n : divisions)
        if (n < 1) throw InputError("generate_grid: divisions must be >= 1");

    Mesh mesh;
    mesh.kind = kind;
    mesh.dim = d;

    if (d == 2) {
        const std::int64_t nx = divisions[0], ny = divisions[1];
        const double hx = extents[0] / nx, hy = extents[1] / ny;
        mesh.nodes.reserve((nx + 1) * (ny + 1) * 2);
        for (std::int64_t j = 0; j <= ny; ++j)
            for (std::int64_t i = 0; i <= nx; ++i) {
                mesh.nodes.push_back(i * hx);
                mesh.nodes.push_back(j * hy);
            }
        auto id = [nx](std::int64_t i, std::int64_t j) { return i + j * (nx + 1); };
        for (std::int64_t j = 0; j < ny; ++j)
            for (std::int64_t i = 0; i < nx; ++i) {
                const std::int64_t n00 = id(i, j), n10 = id(i + 1, j);
                const std::int64_t n11 = id(i + 1, j + 1), n01 = id(i, j + 1);
                if (kind == ElementKind::QUAD4) {
                    mesh.elements.insert(mesh.elements.end(), {n00, n10, n11, n01});
                } else {
                    // fixed diagonal: lower-left to upper-right
                    mesh.elements.insert(mesh.elements.end(), {n00, n10, n11});
                    mesh.elements.insert(mesh.elements.end(), {n00, n11, n01});
                }
            }
    } else {
        const std::int64_t nx = divisions[0], ny = divisions[1], nz = divisions[2];
        const double hx = extents[0] / nx, hy = extents[1] / ny, hz = extents[2] / nz;
        for (std::int64_t kz = 0; kz <= nz; ++kz)
            for (std::int64_t j = 0; j <= ny; ++j)
                for (std::int64_t i = 0; i <= nx; ++i) {
                    mesh.nodes.push_back(i * hx);
                    mesh.nodes.push_back(j * hy);
                    mesh.nodes.push_back(kz * hz);
                }
        auto id = [nx, ny](std::int64_t i, std::int64_t j, std::int64_t kz) {
            return i + (nx + 1) * (j + (ny + 1) * kz);
        };
        // Kuhn split: one tet per permutation of the axis order along the
        // path (0,0,0) -> (1,1,1) within each cube.
        constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                     {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        for (std::int64_t kz = 0; kz < nz; ++kz)
            for (std::int64_t j = 0; j < ny; ++j)
                for (std::int64_t i = 0; i < nx; ++i) {
                    for (const auto& perm : perms) {
                        std::array<std::int64_t, 3> c{0, 0, 0};
                        std::array<std::int64_t, 4> tet{};
                        tet[0] = id(i, j, kz);
                        for (int s = 0; s < 3; ++s) {
                            c[perm[s]] = 1;
                            tet[s + 1] = id(i + c[0], j + c[1], kz + c[2]);
                        }
                        mesh.elements.insert(mesh.elements.end(), tet.begin(), tet.end());
                        const std::int64_t e = mesh.element_count() - 1;
                        if (centroid_det(mesh, e) < 0.0)
                            std::swap(mesh.elements[e * 4 + 2], mesh.elements[e * 4 + 3]);
                    }
                }
    }
    mesh.boundary_nodes = topological_boundary(mesh);
    mesh.validate();
    return mesh;
}

std::vector<std::int64_t> select_boundary(const Mesh& mesh,
                                          const std::function<bool(const double*)>& predicate) {
    std::vector<std::int64_t> out;
    for (std::int64_t i = 0; i < mesh.node_count(); ++i)
        if (predicate(mesh.node(i))) out.push_back(i);
    return out;
}

std::function<bool(const double*)> axis_plane(const Mesh& mesh, int axis, double value,
                                              double rel_tol) {
    const double tol = rel_tol * std::max(mesh.diameter(), 1.0e-300);
    return [axis, value, tol](const double* x) { return std::abs(x[axis] - value) <= tol; };
}

std::vector<std::int64_t> topological_boundary(const Mesh& mesh) {
    const int k = element_nodes(mesh.kind);
    // facet-local node lists
    std::vector<std::vector<int>> facets;
    switch (mesh.kind) {
        case ElementKind::TRI3: facets = {{0, 1}, {1, 2}, {2, 0}}; break;
        case ElementKind::QUAD4: facets = {{0, 1}, {1, 2}, {2, 3}, {3, 0}}; break;
        case ElementKind::TET4: facets = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}; break;
    }
    std::map<std::vector<std::int64_t>, int> count;
    for (std::int64_t e = 0; e < mesh.element_count(); ++e) {
        const std::int64_t* conn = &mesh.elements[static_cast<std::size_t>(e) * k];
        for (const auto& f : facets) {
            std::vector<std::int64_t> key;
            key.reserve(f.size());
            for (int a : f) key.push_back(conn[a]);
            std::sort(key.begin(), key.end());
            ++count[key];
        }
    }
    std::set<std::int64_t> nodes;
    for (const auto& [key, c] : count)
        if (c == 1) nodes.insert(key.begin(), key.end());
    return {nodes.begin(), nodes.end()};
}

}  // namespace tg
