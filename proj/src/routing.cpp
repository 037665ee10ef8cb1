#include "tg/routing.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "tg/errors.hpp"
#include "tg/parallel.hpp"

namespace tg {

RoutingMatrices build_routing(const Mesh& mesh, const DofMap& dofmap) {
    const std::int64_t E = mesh.element_count();
    const int k = dofmap.k;
    const std::int64_t N = dofmap.N;

    // global sparsity: union of element DoF-pair blocks
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    pairs.reserve(static_cast<std::size_t>(E) * k * k);
    for (std::int64_t e = 0; e < E; ++e) {
        const std::int64_t* g = dofmap.element(e);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) pairs.emplace_back(g[a], g[b]);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    auto pattern = std::make_shared<CsrPattern>();
    pattern->rows = N;
    pattern->offsets.assign(static_cast<std::size_t>(N) + 1, 0);
    pattern->cols.reserve(pairs.size());
    for (const auto& [i, j] : pairs) {
        ++pattern->offsets[i + 1];
        pattern->cols.push_back(j);
    }
    for (std::int64_t i = 0; i < N; ++i) pattern->offsets[i + 1] += pattern->offsets[i];

    RoutingMatrices r;
    r.N = N;
    r.E = E;
    r.k = k;
    r.pattern = pattern;
    const std::int64_t nnz = pattern->nnz();
    if (E * k * static_cast<std::int64_t>(k) > static_cast<std::int64_t>(UINT32_MAX))
        throw InputError("build_routing: mesh exceeds 2^32-1 local matrix slots");

    // vector routing segments
    r.vec_offsets.assign(static_cast<std::size_t>(N) + 1, 0);
    for (std::int64_t e = 0; e < E; ++e) {
        const std::int64_t* g = dofmap.element(e);
        for (int a = 0; a < k; ++a) ++r.vec_offsets[g[a] + 1];
    }
    for (std::int64_t i = 0; i < N; ++i) r.vec_offsets[i + 1] += r.vec_offsets[i];
    r.vec_slots.resize(static_cast<std::size_t>(E) * k);
    {
        std::vector<std::uint32_t> cursor(r.vec_offsets.begin(), r.vec_offsets.end() - 1);
        for (std::int64_t e = 0; e < E; ++e) {
            const std::int64_t* g = dofmap.element(e);
            for (int a = 0; a < k; ++a)
                r.vec_slots[cursor[g[a]]++] = static_cast<std::uint32_t>(e * k + a);
        }
    }

    // matrix routing segments
    r.mat_offsets.assign(static_cast<std::size_t>(nnz) + 1, 0);
    for (std::int64_t e = 0; e < E; ++e) {
        const std::int64_t* g = dofmap.element(e);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) ++r.mat_offsets[pattern->find(g[a], g[b]) + 1];
    }
    for (std::int64_t t = 0; t < nnz; ++t) r.mat_offsets[t + 1] += r.mat_offsets[t];
    r.mat_slots.resize(static_cast<std::size_t>(E) * k * k);
    {
        std::vector<std::uint32_t> cursor(r.mat_offsets.begin(), r.mat_offsets.end() - 1);
        for (std::int64_t e = 0; e < E; ++e) {
            const std::int64_t* g = dofmap.element(e);
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) {
                    const std::int64_t t = pattern->find(g[a], g[b]);
                    r.mat_slots[cursor[t]++] = static_cast<std::uint32_t>((e * k + a) * k + b);
                }
        }
    }
    return r;
}

void reduce_vector(const RoutingMatrices& routing, const std::vector<double>& local_vectors,
                   std::vector<double>& out) {
    if (local_vectors.size() != static_cast<std::size_t>(routing.E) * routing.k)
        throw InputError("reduce_vector: local tensor shape mismatch");
    out.resize(static_cast<std::size_t>(routing.N));
    parallel_for(static_cast<std::size_t>(routing.N), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double s = 0.0;
            for (std::uint32_t t = routing.vec_offsets[i]; t < routing.vec_offsets[i + 1]; ++t)
                s += local_vectors[routing.vec_slots[t]];
            out[i] = s;
        }
    });
}

std::vector<double> reduce_vector(const RoutingMatrices& routing,
                                  const std::vector<double>& local_vectors) {
    std::vector<double> F;
    reduce_vector(routing, local_vectors, F);
    return F;
}

void reduce_matrix(const RoutingMatrices& routing, const std::vector<double>& local_matrices,
                   SparseOperator& out) {
    if (local_matrices.size() !=
        static_cast<std::size_t>(routing.E) * routing.k * routing.k)
        throw InputError("reduce_matrix: local tensor shape mismatch");
    out.pattern = routing.pattern;
    const std::int64_t nnz = routing.nnz();
    out.values.resize(static_cast<std::size_t>(nnz));
    parallel_for(static_cast<std::size_t>(nnz), [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            double s = 0.0;
            for (std::uint32_t u = routing.mat_offsets[t]; u < routing.mat_offsets[t + 1]; ++u)
                s += local_matrices[routing.mat_slots[u]];
            out.values[t] = s;
        }
    });
}

SparseOperator reduce_matrix(const RoutingMatrices& routing,
                             const std::vector<double>& local_matrices) {
    SparseOperator K;
    reduce_matrix(routing, local_matrices, K);
    return K;
}

void scatter_add_oracle(const Mesh& mesh, const DofMap& dofmap,
                        const std::vector<double>& local_matrices,
                        const std::vector<double>& local_vectors, SparseOperator& K,
                        std::vector<double>& F) {
    const std::int64_t E = mesh.element_count();
    const int k = dofmap.k;
    const std::int64_t N = dofmap.N;

    // independent pattern construction: per-row column lists
    std::vector<std::vector<std::int64_t>> rows(static_cast<std::size_t>(N));
    for (std::int64_t e = 0; e < E; ++e) {
        const std::int64_t* g = dofmap.element(e);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) rows[g[a]].push_back(g[b]);
    }
    auto pattern = std::make_shared<CsrPattern>();
    pattern->rows = N;
    pattern->offsets.assign(static_cast<std::size_t>(N) + 1, 0);
    for (std::int64_t i = 0; i < N; ++i) {
        auto& row = rows[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        pattern->offsets[i + 1] = pattern->offsets[i] + static_cast<std::int64_t>(row.size());
        pattern->cols.insert(pattern->cols.end(), row.begin(), row.end());
    }

    K.pattern = pattern;
    K.values.assign(static_cast<std::size_t>(pattern->nnz()), 0.0);
    F.assign(static_cast<std::size_t>(N), 0.0);
    for (std::int64_t e = 0; e < E; ++e) {
        const std::int64_t* g = dofmap.element(e);
        if (!local_matrices.empty()) {
            const double* Ke = &local_matrices[static_cast<std::size_t>(e) * k * k];
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) K.values[pattern->find(g[a], g[b])] += Ke[a * k + b];
        }
        if (!local_vectors.empty()) {
            const double* Fe = &local_vectors[static_cast<std::size_t>(e) * k];
            for (int a = 0; a < k; ++a) F[g[a]] += Fe[a];
        }
    }
}

namespace {
constexpr std::uint64_t kCacheMagic = 0x74672d726f757432ull;  // "tg-rout2"

template <class T>
void write_pod(std::ofstream& out, const std::vector<T>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
bool read_pod(std::ifstream& in, std::vector<T>& v, std::size_t n) {
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    return static_cast<bool>(in);
}
}  // namespace

void save_routing(const RoutingMatrices& routing, std::uint64_t mesh_hash,
                  const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open routing cache for writing: " + path);
    const std::int64_t nnz = routing.nnz();
    const std::int64_t header[6] = {static_cast<std::int64_t>(kCacheMagic),
                                    static_cast<std::int64_t>(mesh_hash), routing.N, routing.E,
                                    routing.k, nnz};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    write_pod(out, routing.pattern->offsets);
    write_pod(out, routing.pattern->cols);
    write_pod(out, routing.vec_offsets);
    write_pod(out, routing.vec_slots);
    write_pod(out, routing.mat_offsets);
    write_pod(out, routing.mat_slots);
}

bool load_routing(RoutingMatrices& routing, std::uint64_t mesh_hash, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::int64_t header[6];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (!in || static_cast<std::uint64_t>(header[0]) != kCacheMagic ||
        static_cast<std::uint64_t>(header[1]) != mesh_hash)
        return false;
    routing.N = header[2];
    routing.E = header[3];
    routing.k = static_cast<int>(header[4]);
    const std::int64_t nnz = header[5];
    auto pattern = std::make_shared<CsrPattern>();
    pattern->rows = routing.N;
    const std::size_t Ek = static_cast<std::size_t>(routing.E) * routing.k;
    if (!read_pod(in, pattern->offsets, static_cast<std::size_t>(routing.N) + 1)) return false;
    if (!read_pod(in, pattern->cols, static_cast<std::size_t>(nnz))) return false;
    if (!read_pod(in, routing.vec_offsets, static_cast<std::size_t>(routing.N) + 1)) return false;
    if (!read_pod(in, routing.vec_slots, Ek)) return false;
    if (!read_pod(in, routing.mat_offsets, static_cast<std::size_t>(nnz) + 1)) return false;
    if (!read_pod(in, routing.mat_slots, Ek * routing.k)) return false;
    routing.pattern = pattern;
    return true;
}

}  // namespace tg
