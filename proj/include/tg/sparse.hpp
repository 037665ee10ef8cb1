#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace tg {

// Shared CSR sparsity pattern: row offsets (N+1) and column indices (nnz),
// strictly increasing within each row.
struct CsrPattern {
    std::int64_t rows = 0;
    std::vector<std::int64_t> offsets;
    std::vector<std::int64_t> cols;

    std::int64_t nnz() const { return static_cast<std::int64_t>(cols.size()); }
    // Position of (i, j) in the value array, -1 if not stored.
    std::int64_t find(std::int64_t i, std::int64_t j) const;
};

// Global sparse operator on a shared pattern.
struct SparseOperator {
    std::shared_ptr<const CsrPattern> pattern;
    std::vector<double> values;
    bool symmetric = false;

    std::int64_t rows() const { return pattern ? pattern->rows : 0; }
    // y = A x (deterministic: parallel over rows)
    void apply(const std::vector<double>& x, std::vector<double>& y) const;
    std::vector<double> apply(const std::vector<double>& x) const;
    // y = A^T x
    std::vector<double> apply_transpose(const std::vector<double>& x) const;
    std::vector<double> diagonal() const;
    std::vector<double> dense() const;  // rows x rows row-major, for small oracles
};

}  // namespace tg
