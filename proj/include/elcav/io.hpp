#pragma once

#include <fstream>
#include <iomanip>
#include <string>

#include "elcav/assembly.hpp"
#include "elcav/forward.hpp"
#include "elcav/spectral.hpp"

namespace elcav {

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open output file: " + path);
  f << std::setprecision(17);
  return f;
}

}  // namespace detail

// Legacy-VTK ASCII unstructured grid with point-data arrays re_u, im_u.
inline void write_vtk_field(const std::string& path, const Mesh& mesh,
                            const CVecX& values) {
  auto f = detail::open_out(path);
  f << "# vtk DataFile Version 3.0\n"
    << "displacement field\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << mesh.nodes.size() << " double\n";
  for (const auto& p : mesh.nodes) f << p(0) << " " << p(1) << " 0\n";
  f << "CELLS " << mesh.tris.size() << " " << 4 * mesh.tris.size() << "\n";
  for (const auto& t : mesh.tris)
    f << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  f << "CELL_TYPES " << mesh.tris.size() << "\n";
  for (size_t i = 0; i < mesh.tris.size(); ++i) f << "5\n";
  f << "POINT_DATA " << mesh.nodes.size() << "\n";
  f << "VECTORS re_u double\n";
  for (size_t i = 0; i < mesh.nodes.size(); ++i)
    f << values(2 * i).real() << " " << values(2 * i + 1).real() << " 0\n";
  f << "VECTORS im_u double\n";
  for (size_t i = 0; i < mesh.nodes.size(); ++i)
    f << values(2 * i).imag() << " " << values(2 * i + 1).imag() << " 0\n";
}

// Gamma-trace CSV: "x1, re_u1, im_u1, re_u2, im_u2".
inline void write_trace_csv(const std::string& path, const ForwardSolution& sol) {
  auto f = detail::open_out(path);
  f << "x1, re_u1, im_u1, re_u2, im_u2\n";
  const GammaGeometry& gg = sol.gamma();
  for (int p = 0; p < gg.count(); ++p) {
    const CVec2 v = sol.field.at(gg.nodes[p]);
    f << gg.x[p] << ", " << v(0).real() << ", " << v(0).imag() << ", "
      << v(1).real() << ", " << v(1).imag() << "\n";
  }
}

// Spectral kernel dump over a grid:
// xi, re/im of gamma_p, gamma_s, and the 2x2 boundary maps entrywise.
inline void write_kernel_csv(const std::string& path, const ElasticMedium& med,
                             const QuadratureGrid& grid) {
  auto f = detail::open_out(path);
  f << "xi, re_gamma_p, im_gamma_p, re_gamma_s, im_gamma_s";
  for (const char* name : {"M", "Minv"})
    for (int c = 0; c < 2; ++c)
      for (int d = 0; d < 2; ++d)
        f << ", re_" << name << c + 1 << d + 1 << ", im_" << name << c + 1
          << d + 1;
  f << "\n";
  for (double xi : grid.nodes) {
    const SpectralKernelSample s = kernel_sample_regularized(med, xi, 1e-6);
    f << xi << ", " << s.gamma_p.real() << ", " << s.gamma_p.imag() << ", "
      << s.gamma_s.real() << ", " << s.gamma_s.imag();
    for (const CMat2* m : {&s.M, &s.M_inv})
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          f << ", " << (*m)(c, d).real() << ", " << (*m)(c, d).imag();
    f << "\n";
  }
}

// Coordinate-format dump of a complex sparse matrix: "row col re im" lines.
inline void write_matrix_dump(const std::string& path, const SpMatC& A) {
  auto f = detail::open_out(path);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMatC::InnerIterator it(A, k); it; ++it)
      f << it.row() << " " << it.col() << " " << it.value().real() << " "
        << it.value().imag() << "\n";
}

}  // namespace elcav
