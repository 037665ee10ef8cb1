#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "tg/dofmap.hpp"
#include "tg/mesh.hpp"
#include "tg/reference.hpp"

namespace tg {

struct GeometryBatch;

// Scalar coefficient field over the domain. Evaluated to an E x Q table of
// values at physical quadrature points before entering a batch kernel.
class CoefficientField {
  public:
    using AnalyticFn = std::function<double(const double*)>;

    static CoefficientField constant(double value);
    static CoefficientField per_element(std::vector<double> values);   // E values
    static CoefficientField nodal(std::vector<double> values);         // N_node values
    static CoefficientField analytic(AnalyticFn fn);

    // E x Q values at quadrature point images.
    std::vector<double> evaluate(const Mesh& mesh, const ReferenceTables& tables,
                                 const GeometryBatch& geom) const;

    // Point evaluation; valid for constant and analytic fields only.
    double at(const double* x) const;

    bool is_constant() const { return std::holds_alternative<Constant>(data_); }
    double constant_value() const { return std::get<Constant>(data_).value; }

  private:
    struct Constant {
        double value;
    };
    struct PerElement {
        std::vector<double> values;
    };
    struct Nodal {
        std::vector<double> values;
    };
    struct Analytic {
        AnalyticFn fn;
    };
    std::variant<Constant, PerElement, Nodal, Analytic> data_;
};

}  // namespace tg
