#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tetrodiff/mesh.hpp"
#include "tetrodiff/quality.hpp"

namespace tetrodiff::io {

/// TETMESH v1 text format. Lines starting with '#' after the header are comments.
///   TETMESH v1
///   <node count>
///   <id> <x> <y> <z> <inner|outer> <surface mask>
///   <element count>
///   <id> <n1> <n2> <n3> <n4>
/// Coordinates carry 17 significant digits so a read reproduces them bit for bit.
void write_mesh(std::ostream& out, const Mesh& mesh, const std::vector<std::string>& comments = {});
void write_mesh_file(const std::string& path, const Mesh& mesh,
                     const std::vector<std::string>& comments = {});

/// Throws ParseError with the 1-based line of the first problem.
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);

struct PointField {
  std::string name;
  std::vector<double> values;
};

struct CellVectorField {
  std::string name;
  std::vector<Eigen::Vector3d> values;
};

/// Legacy ASCII unstructured grid, cell type 10, optional point scalars and cell vectors.
void write_vtk(std::ostream& out, const Mesh& mesh, const std::string& title,
               const std::vector<PointField>& point_data = {},
               const std::vector<CellVectorField>& cell_data = {});
void write_vtk_file(const std::string& path, const Mesh& mesh, const std::string& title,
                    const std::vector<PointField>& point_data = {},
                    const std::vector<CellVectorField>& cell_data = {});

/// "bin_lo,bin_hi,center,count" rows preceded by '#' comment lines.
void write_histogram_csv(std::ostream& out, const Histogram& h,
                         const std::vector<std::string>& comments = {});

/// "node,x,y,z,<name>..." rows, one per node.
void write_nodal_csv(std::ostream& out, const Mesh& mesh, const std::vector<PointField>& fields,
                     const std::vector<std::string>& comments = {});

/// "element,cx,cy,cz,jx,jy,jz" rows, one per element (centroid and flux).
void write_flux_csv(std::ostream& out, const Mesh& mesh, const std::vector<Eigen::Vector3d>& flux,
                    const std::vector<std::string>& comments = {});

/// %.17g
std::string format_double(double v);

}  // namespace tetrodiff::io
