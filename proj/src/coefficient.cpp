#include "tg/coefficient.hpp"

#include <algorithm>

#include "tg/batch.hpp"
#include "tg/errors.hpp"

namespace tg {

CoefficientField CoefficientField::constant(double value) {
    CoefficientField c;
    c.data_ = Constant{value};
    return c;
}

CoefficientField CoefficientField::per_element(std::vector<double> values) {
    CoefficientField c;
    c.data_ = PerElement{std::move(values)};
    return c;
}

CoefficientField CoefficientField::nodal(std::vector<double> values) {
    CoefficientField c;
    c.data_ = Nodal{std::move(values)};
    return c;
}

CoefficientField CoefficientField::analytic(AnalyticFn fn) {
    CoefficientField c;
    c.data_ = Analytic{std::move(fn)};
    return c;
}

std::vector<double> CoefficientField::evaluate(const Mesh& mesh, const ReferenceTables& tables,
                                               const GeometryBatch& geom) const {
    const std::size_t E = static_cast<std::size_t>(geom.E);
    const int Q = geom.Q, d = geom.d;
    std::vector<double> out(E * Q);
    if (const auto* c = std::get_if<Constant>(&data_)) {
        std::fill(out.begin(), out.end(), c->value);
    } else if (const auto* pe = std::get_if<PerElement>(&data_)) {
        if (pe->values.size() != E)
            throw InputError("per-element coefficient: expected " + std::to_string(E) +
                             " values, got " + std::to_string(pe->values.size()));
        for (std::size_t e = 0; e < E; ++e)
            for (int q = 0; q < Q; ++q) out[e * Q + q] = pe->values[e];
    } else if (const auto* nd = std::get_if<Nodal>(&data_)) {
        out = interpolate_nodal(geom, mesh, nd->values, tables);
    } else {
        const auto& fn = std::get<Analytic>(data_).fn;
        for (std::size_t e = 0; e < E; ++e)
            for (int q = 0; q < Q; ++q) out[e * Q + q] = fn(&geom.phys_qpoints[(e * Q + q) * d]);
    }
    return out;
}

double CoefficientField::at(const double* x) const {
    if (const auto* c = std::get_if<Constant>(&data_)) return c->value;
    if (const auto* a = std::get_if<Analytic>(&data_)) return a->fn(x);
    throw InputError("point evaluation needs a constant or analytic coefficient field");
}

}  // namespace tg
