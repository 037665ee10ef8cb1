#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace tg {

enum class ElementKind { TRI3, QUAD4, TET4 };

std::string to_string(ElementKind kind);

// Spatial dimension of the element kind.
int element_dim(ElementKind kind);

// Geometric node count (= local scalar DoF count for P1/Q1).
int element_nodes(ElementKind kind);

// Measure of the reference cell: 1/2 (TRI3), 1 (QUAD4 on [0,1]^2), 1/6 (TET4).
double reference_measure(ElementKind kind);

// P1/Q1 nodal basis on the reference cell.
struct ReferenceElement {
    ElementKind kind;
    int k;  // local DoFs per scalar field
    int d;  // spatial dimension

    // values of the k basis functions at a reference point (size d)
    std::vector<double> shape_values(const double* xhat) const;
    // k x d gradients, row-major
    std::vector<double> shape_gradients(const double* xhat) const;
    // reference DoF point a (size d)
    std::array<double, 3> node(int a) const;
};

ReferenceElement reference_element(ElementKind kind);

struct QuadratureRule {
    ElementKind kind;
    int degree;  // exactly integrated polynomial degree
    int Q;
    std::vector<double> points;   // Q x d, row-major
    std::vector<double> weights;  // Q
};

// Lowest-order rule on the reference cell that is exact for polynomials of
// the requested degree. Supported degrees: 1..4.
QuadratureRule quadrature_rule(ElementKind kind, int degree);

// Basis and gradient tables evaluated once at all quadrature points.
struct ReferenceTables {
    ReferenceElement element;
    QuadratureRule rule;
    std::vector<double> B;  // Q x k basis values
    std::vector<double> G;  // Q x k x d reference gradients
};

ReferenceTables reference_tables(ElementKind kind, int quadrature_degree);

// Default stiffness quadrature degree: 1 for affine kinds, 3 for QUAD4.
int default_stiffness_degree(ElementKind kind);
// Default degree for mass matrices and non-constant coefficients.
int default_mass_degree(ElementKind kind);

}  // namespace tg
