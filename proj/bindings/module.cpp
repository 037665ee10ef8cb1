#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tg/adjoint.hpp"
#include "tg/batch.hpp"
#include "tg/errors.hpp"
#include "tg/gmsh_io.hpp"
#include "tg/mesh.hpp"
#include "tg/parallel.hpp"
#include "tg/physics.hpp"
#include "tg/routing.hpp"
#include "tg/solver.hpp"
#include "tg/topopt.hpp"

namespace py = pybind11;
using namespace tg;

namespace {

ElementKind kind_from(const std::string& name) {
    if (name == "tri3") return ElementKind::TRI3;
    if (name == "quad4") return ElementKind::QUAD4;
    if (name == "tet4") return ElementKind::TET4;
    throw InputError("unknown element kind: " + name);
}

py::array_t<double> to_array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<std::int64_t> to_array(const std::vector<std::int64_t>& v) {
    return py::array_t<std::int64_t>(static_cast<py::ssize_t>(v.size()), v.data());
}

std::vector<double> from_array(const py::array_t<double>& a) {
    const auto buf = a.request();
    const auto* p = static_cast<const double*>(buf.ptr);
    return std::vector<double>(p, p + buf.size);
}

py::dict csr_dict(const SparseOperator& K) {
    py::dict d;
    d["rows"] = K.rows();
    d["offsets"] = to_array(K.pattern->offsets);
    d["cols"] = to_array(K.pattern->cols);
    d["values"] = to_array(K.values);
    return d;
}

}  // namespace

PYBIND11_MODULE(_tgfem, m) {
    m.doc() = "tensorized map-reduce Galerkin assembly and optimization";

    py::register_exception<InputError>(m, "InputError");
    py::register_exception<NumericalError>(m, "NumericalError");

    py::class_<Mesh>(m, "Mesh")
        .def_property_readonly("kind", [](const Mesh& mm) { return to_string(mm.kind); })
        .def_readonly("dim", &Mesh::dim)
        .def_property_readonly("nodes",
                               [](const Mesh& mm) {
                                   auto a = to_array(mm.nodes);
                                   return a.reshape({mm.node_count(),
                                                     static_cast<std::int64_t>(mm.dim)});
                               })
        .def_property_readonly("elements",
                               [](const Mesh& mm) {
                                   auto a = to_array(mm.elements);
                                   return a.reshape(
                                       {mm.element_count(),
                                        static_cast<std::int64_t>(element_nodes(mm.kind))});
                               })
        .def_property_readonly("boundary_nodes",
                               [](const Mesh& mm) { return to_array(mm.boundary_nodes); })
        .def("node_count", &Mesh::node_count)
        .def("element_count", &Mesh::element_count)
        .def("content_hash", &Mesh::content_hash);

    m.def("generate_grid",
          [](const std::string& kind, const std::vector<double>& extents,
             const std::vector<std::int64_t>& divisions) {
              return generate_grid(kind_from(kind), extents, divisions);
          },
          py::arg("kind"), py::arg("extents"), py::arg("divisions"));
    m.def("load_gmsh", &load_gmsh, py::arg("path"));
    m.def("write_gmsh", &write_gmsh, py::arg("mesh"), py::arg("path"));
    m.def("set_thread_count", &set_thread_count, py::arg("n"));

    m.def("local_stiffness",
          [](const Mesh& mesh, py::object coeff) {
              const auto tables =
                  reference_tables(mesh.kind, default_stiffness_degree(mesh.kind));
              const auto geom = batch_geometry(mesh, tables);
              const auto grads = push_forward(geom, tables);
              std::vector<double> c;
              if (coeff.is_none()) {
                  c.assign(static_cast<std::size_t>(geom.E) * geom.Q, 1.0);
              } else {
                  const auto per_elem = from_array(coeff.cast<py::array_t<double>>());
                  c = CoefficientField::per_element(per_elem).evaluate(mesh, tables, geom);
              }
              auto Kl = local_stiffness_diffusion(geom, grads, c, tables);
              const int k = tables.element.k;
              auto a = to_array(Kl);
              return a.reshape({geom.E, static_cast<std::int64_t>(k),
                                static_cast<std::int64_t>(k)});
          },
          py::arg("mesh"), py::arg("coeff") = py::none(),
          "batched diffusion stiffness blocks, E x k x k");

    m.def("reduce_matrix",
          [](const Mesh& mesh, const py::array_t<double>& local) {
              const auto dofmap = build_dofmap(mesh, 1);
              const auto routing = build_routing(mesh, dofmap);
              return csr_dict(reduce_matrix(routing, from_array(local)));
          },
          py::arg("mesh"), py::arg("local_matrices"));

    m.def("scatter_add_oracle",
          [](const Mesh& mesh, const py::array_t<double>& local) {
              const auto dofmap = build_dofmap(mesh, 1);
              SparseOperator K;
              std::vector<double> F;
              const int k = element_nodes(mesh.kind);
              scatter_add_oracle(mesh, dofmap, from_array(local),
                                 std::vector<double>(mesh.element_count() * k, 0.0), K, F);
              return csr_dict(K);
          },
          py::arg("mesh"), py::arg("local_matrices"));

    m.def("solve_poisson",
          [](const Mesh& mesh, py::object diffusion, double source_value) {
              ProblemSpec ps;
              if (!diffusion.is_none())
                  ps.diffusion = CoefficientField::per_element(
                      from_array(diffusion.cast<py::array_t<double>>()));
              ps.source.push_back(CoefficientField::constant(source_value));
              const auto dofmap = build_dofmap(mesh, 1);
              const auto routing = build_routing(mesh, dofmap);
              const auto sysm = assemble(ps, mesh, dofmap, routing);
              const auto bnodes = mesh.boundary_nodes.empty() ? topological_boundary(mesh)
                                                              : mesh.boundary_nodes;
              const auto dofs = node_dofs(bnodes, 1);
              const auto sys =
                  condense(sysm.K, sysm.F, dofs, std::vector<double>(dofs.size(), 0.0));
              SolveReport report;
              const auto U = solve_condensed(sys, report, {});
              py::dict d;
              d["u"] = to_array(U);
              d["iterations"] = report.iterations;
              d["rel_residual"] = report.rel_residual;
              return d;
          },
          py::arg("mesh"), py::arg("diffusion") = py::none(), py::arg("source") = 1.0,
          "homogeneous-Dirichlet Poisson solve; returns nodal solution");

    m.def("compliance",
          [](const py::array_t<double>& F, const py::array_t<double>& U) {
              return compliance(from_array(F), from_array(U));
          },
          py::arg("F"), py::arg("U"));

    m.def("topopt_cantilever",
          [](std::int64_t nx, std::int64_t ny, int iterations, double vol_frac) {
              const auto mesh = generate_grid(ElementKind::QUAD4,
                                              {static_cast<double>(nx),
                                               static_cast<double>(ny)},
                                              {nx, ny});
              SimpParams params;
              params.iterations = iterations;
              params.vol_limit = vol_frac;
              const auto dofmap = build_dofmap(mesh, 2);
              const auto fixed = select_boundary(mesh, axis_plane(mesh, 0, 0.0));
              const auto dirichlet = node_dofs(fixed, 2);
              const double tol = 1e-9 * mesh.diameter();
              const double xr = static_cast<double>(nx);
              const double band = 0.1 * static_cast<double>(ny);
              const auto load_nodes = select_boundary(mesh, [&](const double* x) {
                  return std::abs(x[0] - xr) <= tol && x[1] <= band + tol;
              });
              const auto F = traction_load(mesh, dofmap, load_nodes, {0.0, -100.0});
              const auto result = topopt_run(mesh, params, F, dirichlet,
                                             std::vector<double>(dirichlet.size(), 0.0), {}, {});
              py::dict d;
              d["density"] = to_array(result.density);
              std::vector<double> hist;
              for (const auto& row : result.history) hist.push_back(row.compliance);
              d["compliance_history"] = to_array(hist);
              return d;
          },
          py::arg("nx") = 60, py::arg("ny") = 30, py::arg("iterations") = 51,
          py::arg("vol_frac") = 0.5);
}
