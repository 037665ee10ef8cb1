#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "tg/mesh.hpp"

namespace tg {

// Named nodal or per-cell field attached to a VTK output.
struct VtkField {
    std::string name;
    int components = 1;         // 1 scalar, mesh.dim vector
    std::vector<double> data;   // N*components or E (cell data)
    bool cell_data = false;
};

// Legacy ASCII unstructured-grid writer. Point fields become SCALARS or
// VECTORS blocks, cell fields a CELL_DATA block.
void write_vtk(const Mesh& mesh, const std::vector<VtkField>& fields, const std::string& path,
               const std::string& title = "tg output");

// CSV with a header row; every value printed with round-trip precision so
// reruns are byte-comparable.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& values);
    static std::string format(double v);

  private:
    std::ofstream out_;
    std::string path_;
    std::size_t columns_;
};

}  // namespace tg
