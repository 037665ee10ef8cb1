#include "tg/reference.hpp"

#include <cmath>

#include "tg/errors.hpp"

namespace tg {

std::string to_string(ElementKind kind) {
    switch (kind) {
        case ElementKind::TRI3: return "TRI3";
        case ElementKind::QUAD4: return "QUAD4";
        case ElementKind::TET4: return "TET4";
    }
    return "?";
}

int element_dim(ElementKind kind) {
    switch (kind) {
        case ElementKind::TRI3:
        case ElementKind::QUAD4: return 2;
        case ElementKind::TET4: return 3;
    }
    return 0;
}

int element_nodes(ElementKind kind) {
    switch (kind) {
        case ElementKind::TRI3: return 3;
        case ElementKind::QUAD4: return 4;
        case ElementKind::TET4: return 4;
    }
    return 0;
}

double reference_measure(ElementKind kind) {
    switch (kind) {
        case ElementKind::TRI3: return 0.5;
        case ElementKind::QUAD4: return 1.0;
        case ElementKind::TET4: return 1.0 / 6.0;
    }
    return 0.0;
}

std::vector<double> ReferenceElement::shape_values(const double* p) const {
    switch (kind) {
        case ElementKind::TRI3:
            return {1.0 - p[0] - p[1], p[0], p[1]};
        case ElementKind::QUAD4: {
            const double x = p[0], y = p[1];
            return {(1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y};
        }
        case ElementKind::TET4:
            return {1.0 - p[0] - p[1] - p[2], p[0], p[1], p[2]};
    }
    return {};
}

std::vector<double> ReferenceElement::shape_gradients(const double* p) const {
    switch (kind) {
        case ElementKind::TRI3:
            return {-1, -1, 1, 0, 0, 1};
        case ElementKind::QUAD4: {
            const double x = p[0], y = p[1];
            return {-(1 - y), -(1 - x), (1 - y), -x, y, x, -y, (1 - x)};
        }
        case ElementKind::TET4:
            return {-1, -1, -1, 1, 0, 0, 0, 1, 0, 0, 0, 1};
    }
    return {};
}

std::array<double, 3> ReferenceElement::node(int a) const {
    switch (kind) {
        case ElementKind::TRI3: {
            constexpr std::array<std::array<double, 3>, 3> n{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}};
            return n[a];
        }
        case ElementKind::QUAD4: {
            constexpr std::array<std::array<double, 3>, 4> n{
                {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}};
            return n[a];
        }
        case ElementKind::TET4: {
            constexpr std::array<std::array<double, 3>, 4> n{
                {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
            return n[a];
        }
    }
    return {0, 0, 0};
}

ReferenceElement reference_element(ElementKind kind) {
    return ReferenceElement{kind, element_nodes(kind), element_dim(kind)};
}

namespace {

QuadratureRule tri_rule(int degree) {
    QuadratureRule r{ElementKind::TRI3, degree, 0, {}, {}};
    switch (degree) {
        case 1:
            r.Q = 1;
            r.points = {1.0 / 3.0, 1.0 / 3.0};
            r.weights = {0.5};
            break;
        case 2:
            r.Q = 3;
            r.points = {1.0 / 6, 1.0 / 6, 2.0 / 3, 1.0 / 6, 1.0 / 6, 2.0 / 3};
            r.weights = {1.0 / 6, 1.0 / 6, 1.0 / 6};
            break;
        case 3:
            r.Q = 4;
            r.points = {1.0 / 3, 1.0 / 3, 0.2, 0.2, 0.6, 0.2, 0.2, 0.6};
            r.weights = {-27.0 / 96, 25.0 / 96, 25.0 / 96, 25.0 / 96};
            break;
        case 4: {
            // Dunavant 6-point rule (degree 4)
            const double a1 = 0.445948490915965, w1 = 0.223381589678011;
            const double a2 = 0.091576213509771, w2 = 0.109951743655322;
            r.Q = 6;
            r.points = {a1, a1, 1 - 2 * a1, a1, a1, 1 - 2 * a1,
                        a2, a2, 1 - 2 * a2, a2, a2, 1 - 2 * a2};
            r.weights = {w1 / 2, w1 / 2, w1 / 2, w2 / 2, w2 / 2, w2 / 2};
            break;
        }
        default:
            throw InputError("TRI3 quadrature degree " + std::to_string(degree) +
                             " unsupported; supported degrees: 1,2,3,4");
    }
    return r;
}

QuadratureRule quad_rule(int degree) {
    if (degree < 1 || degree > 4)
        throw InputError("QUAD4 quadrature degree " + std::to_string(degree) +
                         " unsupported; supported degrees: 1,2,3,4");
    // Gauss-Legendre tensor product on [0,1]^2
    std::vector<double> g, w;
    int exact;
    if (degree <= 1) {
        g = {0.5};
        w = {1.0};
        exact = 1;
    } else if (degree <= 3) {
        const double s = 0.5 / std::sqrt(3.0);
        g = {0.5 - s, 0.5 + s};
        w = {0.5, 0.5};
        exact = 3;
    } else {
        const double s = 0.5 * std::sqrt(0.6);
        g = {0.5 - s, 0.5, 0.5 + s};
        w = {5.0 / 18, 8.0 / 18, 5.0 / 18};
        exact = 5;
    }
    QuadratureRule r{ElementKind::QUAD4, exact, 0, {}, {}};
    const int n = static_cast<int>(g.size());
    r.Q = n * n;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            r.points.push_back(g[i]);
            r.points.push_back(g[j]);
            r.weights.push_back(w[i] * w[j]);
        }
    return r;
}

QuadratureRule tet_rule(int degree) {
    QuadratureRule r{ElementKind::TET4, degree, 0, {}, {}};
    switch (degree) {
        case 1:
            r.Q = 1;
            r.points = {0.25, 0.25, 0.25};
            r.weights = {1.0 / 6.0};
            break;
        case 2: {
            const double a = 0.585410196624969, b = 0.138196601125011;
            r.Q = 4;
            r.points = {b, b, b, a, b, b, b, a, b, b, b, a};
            r.weights.assign(4, 1.0 / 24.0);
            break;
        }
        case 3: {
            r.Q = 5;
            const double s = 1.0 / 6.0;
            r.points = {0.25, 0.25, 0.25, s, s, s, 0.5, s, s, s, 0.5, s, s, s, 0.5};
            r.weights = {-4.0 / 5.0 / 6.0, 9.0 / 20.0 / 6.0, 9.0 / 20.0 / 6.0, 9.0 / 20.0 / 6.0,
                         9.0 / 20.0 / 6.0};
            break;
        }
        case 4: {
            // Keast 11-point rule (degree 4); weights already scaled to volume 1/6
            const double a = 11.0 / 14.0, b = 1.0 / 14.0;
            const double c = 0.399403576166799, dd = 0.100596423833201;
            const double w1 = -74.0 / 5625.0, w2 = 343.0 / 45000.0, w3 = 56.0 / 2250.0;
            r.Q = 11;
            r.points = {0.25, 0.25, 0.25,
                        b, b, b, a, b, b, b, a, b, b, b, a,
                        // permutations of barycentric (c,c,d,d): coords = (l2,l3,l4)
                        c, dd, dd, dd, c, dd, dd, dd, c,
                        dd, c, c, c, dd, c, c, c, dd};
            r.weights = {w1, w2, w2, w2, w2, w3, w3, w3, w3, w3, w3};
            break;
        }
        default:
            throw InputError("TET4 quadrature degree " + std::to_string(degree) +
                             " unsupported; supported degrees: 1,2,3,4");
    }
    return r;
}

}  // namespace

QuadratureRule quadrature_rule(ElementKind kind, int degree) {
    switch (kind) {
        case ElementKind::TRI3: return tri_rule(degree);
        case ElementKind::QUAD4: return quad_rule(degree);
        case ElementKind::TET4: return tet_rule(degree);
    }
    throw InputError("unknown element kind");
}

ReferenceTables reference_tables(ElementKind kind, int quadrature_degree) {
    ReferenceTables t{reference_element(kind), quadrature_rule(kind, quadrature_degree), {}, {}};
    const int k = t.element.k, d = t.element.d, Q = t.rule.Q;
    t.B.resize(static_cast<std::size_t>(Q) * k);
    t.G.resize(static_cast<std::size_t>(Q) * k * d);
    for (int q = 0; q < Q; ++q) {
        const double* p = &t.rule.points[static_cast<std::size_t>(q) * d];
        auto vals = t.element.shape_values(p);
        auto grads = t.element.shape_gradients(p);
        for (int a = 0; a < k; ++a) {
            t.B[static_cast<std::size_t>(q) * k + a] = vals[a];
            for (int c = 0; c < d; ++c)
                t.G[(static_cast<std::size_t>(q) * k + a) * d + c] = grads[a * d + c];
        }
    }
    return t;
}

int default_stiffness_degree(ElementKind kind) {
    return kind == ElementKind::QUAD4 ? 3 : 1;
}

int default_mass_degree(ElementKind kind) {
    return kind == ElementKind::QUAD4 ? 3 : 2;
}

}  // namespace tg
