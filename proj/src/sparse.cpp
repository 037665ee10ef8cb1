#include "tg/sparse.hpp"

#include <algorithm>

#include "tg/errors.hpp"
#include "tg/parallel.hpp"

namespace tg {

std::int64_t CsrPattern::find(std::int64_t i, std::int64_t j) const {
    const auto* begin = cols.data() + offsets[i];
    const auto* end = cols.data() + offsets[i + 1];
    const auto* it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return -1;
    return it - cols.data();
}

void SparseOperator::apply(const std::vector<double>& x, std::vector<double>& y) const {
    const auto& p = *pattern;
    if (static_cast<std::int64_t>(x.size()) != p.rows)
        throw InputError("sparse apply: size mismatch");
    y.assign(static_cast<std::size_t>(p.rows), 0.0);
    parallel_for(static_cast<std::size_t>(p.rows), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double s = 0.0;
            for (std::int64_t t = p.offsets[i]; t < p.offsets[i + 1]; ++t)
                s += values[t] * x[p.cols[t]];
            y[i] = s;
        }
    });
}

std::vector<double> SparseOperator::apply(const std::vector<double>& x) const {
    std::vector<double> y;
    apply(x, y);
    return y;
}

std::vector<double> SparseOperator::apply_transpose(const std::vector<double>& x) const {
    const auto& p = *pattern;
    if (static_cast<std::int64_t>(x.size()) != p.rows)
        throw InputError("sparse apply_transpose: size mismatch");
    std::vector<double> y(static_cast<std::size_t>(p.rows), 0.0);
    for (std::int64_t i = 0; i < p.rows; ++i)
        for (std::int64_t t = p.offsets[i]; t < p.offsets[i + 1]; ++t)
            y[p.cols[t]] += values[t] * x[i];
    return y;
}

std::vector<double> SparseOperator::diagonal() const {
    const auto& p = *pattern;
    std::vector<double> d(static_cast<std::size_t>(p.rows), 0.0);
    for (std::int64_t i = 0; i < p.rows; ++i) {
        const std::int64_t t = p.find(i, i);
        if (t >= 0) d[i] = values[t];
    }
    return d;
}

std::vector<double> SparseOperator::dense() const {
    const auto& p = *pattern;
    std::vector<double> out(static_cast<std::size_t>(p.rows) * p.rows, 0.0);
    for (std::int64_t i = 0; i < p.rows; ++i)
        for (std::int64_t t = p.offsets[i]; t < p.offsets[i + 1]; ++t)
            out[i * p.rows + p.cols[t]] = values[t];
    return out;
}

}  // namespace tg
