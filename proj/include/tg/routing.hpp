#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tg/dofmap.hpp"
#include "tg/sparse.hpp"

namespace tg {

// Topology-only routing operators. The binary matrices are stored as segment
// maps: for each global output slot, the ascending list of flattened local
// slots that route to it (each local slot routes to exactly one output).
struct RoutingMatrices {
    std::int64_t N = 0;   // global DoFs
    std::int64_t E = 0;   // elements
    int k = 0;            // local DoFs
    std::shared_ptr<const CsrPattern> pattern;  // global stiffness sparsity

    // 32-bit indices: halves the memory traffic of the reduction gather,
    // which is bandwidth-bound at large E. Caps E*k^2 at 2^32-1 local slots.
    // vector routing: N segments over E*k local slots
    std::vector<std::uint32_t> vec_offsets;   // N+1
    std::vector<std::uint32_t> vec_slots;     // E*k, ascending within each segment
    // matrix routing: nnz segments over E*k^2 local slots
    std::vector<std::uint32_t> mat_offsets;   // nnz+1
    std::vector<std::uint32_t> mat_slots;     // E*k^2, ascending within each segment

    std::int64_t nnz() const { return pattern ? pattern->nnz() : 0; }
};

RoutingMatrices build_routing(const Mesh& mesh, const DofMap& dofmap);

// F[i] = sum of local load entries routed to i, in ascending slot order.
std::vector<double> reduce_vector(const RoutingMatrices& routing,
                                  const std::vector<double>& local_vectors);
// In-place variant reusing the output allocation (steady-state loops).
void reduce_vector(const RoutingMatrices& routing, const std::vector<double>& local_vectors,
                   std::vector<double>& out);

// CSR values aggregated per nonzero, in ascending slot order. Bitwise
// deterministic for any worker count.
SparseOperator reduce_matrix(const RoutingMatrices& routing,
                             const std::vector<double>& local_matrices);
// In-place variant reusing out.values.
void reduce_matrix(const RoutingMatrices& routing, const std::vector<double>& local_matrices,
                   SparseOperator& out);

// Classical per-element scatter-add loop with the same deterministic
// ordering; correctness and performance baseline.
void scatter_add_oracle(const Mesh& mesh, const DofMap& dofmap,
                        const std::vector<double>& local_matrices,
                        const std::vector<double>& local_vectors, SparseOperator& K,
                        std::vector<double>& F);

// Binary cache keyed by mesh content hash; save/load round-trips the full
// routing structure. load returns false on missing file or key mismatch.
void save_routing(const RoutingMatrices& routing, std::uint64_t mesh_hash,
                  const std::string& path);
bool load_routing(RoutingMatrices& routing, std::uint64_t mesh_hash, const std::string& path);

}  // namespace tg
