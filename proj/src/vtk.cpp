#include "tg/vtk.hpp"

#include <cstdio>

#include "tg/errors.hpp"

namespace tg {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int vtk_cell_type(ElementKind kind) {
    switch (kind) {
        case ElementKind::TRI3: return 5;
        case ElementKind::QUAD4: return 9;
        case ElementKind::TET4: return 10;
    }
    return 0;
}

}  // namespace

void write_vtk(const Mesh& mesh, const std::vector<VtkField>& fields, const std::string& path,
               const std::string& title) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open output file: " + path);
    const std::int64_t N = mesh.node_count();
    const std::int64_t E = mesh.element_count();
    const int k = element_nodes(mesh.kind);

    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << N << " double\n";
    for (std::int64_t i = 0; i < N; ++i) {
        const double* x = mesh.node(i);
        out << fmt(x[0]) << ' ' << fmt(mesh.dim > 1 ? x[1] : 0.0) << ' '
            << fmt(mesh.dim > 2 ? x[2] : 0.0) << '\n';
    }
    out << "CELLS " << E << ' ' << E * (k + 1) << '\n';
    for (std::int64_t e = 0; e < E; ++e) {
        out << k;
        const auto* elem = mesh.element(e);
        for (int a = 0; a < k; ++a) out << ' ' << elem[a];
        out << '\n';
    }
    out << "CELL_TYPES " << E << '\n';
    for (std::int64_t e = 0; e < E; ++e) out << vtk_cell_type(mesh.kind) << '\n';

    bool point_header = false, cell_header = false;
    for (const auto& f : fields) {
        if (f.cell_data) {
            if (f.data.size() != static_cast<std::size_t>(E))
                throw InputError("vtk field '" + f.name + "': cell data size mismatch");
            if (!cell_header) {
                out << "CELL_DATA " << E << '\n';
                cell_header = true;
            }
            out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (const auto v : f.data) out << fmt(v) << '\n';
            continue;
        }
        if (f.data.size() != static_cast<std::size_t>(N) * f.components)
            throw InputError("vtk field '" + f.name + "': point data size mismatch");
        if (!point_header) {
            out << "POINT_DATA " << N << '\n';
            point_header = true;
        }
        if (f.components == 1) {
            out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (const auto v : f.data) out << fmt(v) << '\n';
        } else {
            out << "VECTORS " << f.name << " double\n";
            for (std::int64_t i = 0; i < N; ++i) {
                for (int c = 0; c < 3; ++c) {
                    if (c) out << ' ';
                    out << fmt(c < f.components ? f.data[i * f.components + c] : 0.0);
                }
                out << '\n';
            }
        }
    }
    if (!out) throw InputError("write failure: " + path);
}

std::string CsvWriter::format(double v) { return fmt(v); }

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), path_(path), columns_(header.size()) {
    if (!out_) throw InputError("cannot open output file: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << header[i];
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw InputError("csv row width mismatch: " + path_);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out_ << ',';
        out_ << fmt(values[i]);
    }
    out_ << '\n';
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
    if (values.size() != columns_) throw InputError("csv row width mismatch: " + path_);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out_ << ',';
        out_ << values[i];
    }
    out_ << '\n';
}

}  // namespace tg
