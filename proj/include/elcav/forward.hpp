#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "elcav/assembly.hpp"
#include "elcav/common.hpp"
#include "elcav/geometry.hpp"
#include "elcav/medium.hpp"
#include "elcav/spectral.hpp"

namespace elcav {

struct ForwardDiagnostics {
  double residual = 0;             // relative linear-solve residual
  double flux_mismatch = 0;        // two-route imaginary-part mismatch
  double nodes_per_wavelength = 0; // boundary resolution metric
  bool under_resolved = false;
};

// End-to-end solution of one cavity scattering problem.  Dirichlet solves
// carry the total field u; Neumann solves carry the scattered field u_s and
// the independent trace unknown t = T u_s on Gamma.
struct ForwardSolution {
  ElasticMedium medium;
  IncidenceConfig cfg;
  BoundaryKind bc = BoundaryKind::Dirichlet;
  std::shared_ptr<DirichletSystem> dsys;
  std::shared_ptr<NeumannSystem> nsys;
  DiscreteField field;  // total u (Dirichlet) or u_s (Neumann)
  CVecX trace;          // Neumann trace dofs (2m), empty otherwise
  ForwardDiagnostics diag;

  const Mesh& mesh() const { return dsys ? dsys->mesh : nsys->mesh; }
  const GammaGeometry& gamma() const { return dsys ? dsys->gg : nsys->gg; }
  const QuadratureGrid& grid() const { return dsys ? dsys->grid : nsys->grid; }

  // Scattered field for a Dirichlet solve: the ground condition annihilates
  // u_i + u_r on {x_2 = 0}, so u restricted to Gamma already is the scattered
  // trace (compactly supported because u vanishes beyond the aperture).
  CVec2 scattered_gamma_value(int pos) const {
    const int node = gamma().nodes[pos];
    return field.at(node);
  }

  // Fourier transform of the scattered trace at frequency xi.  Dirichlet:
  // interior-hat expansion of u|_Gamma.  Neumann: image of the compactly
  // supported trace unknown under the spectral half-space displacement map.
  CVec2 trace_spectrum_at(double xi) const {
    const GammaGeometry& gg = gamma();
    const int m = gg.interior_count();
    CVec2 s = CVec2::Zero();
    if (bc == BoundaryKind::Dirichlet) {
      for (int j = 0; j < m; ++j)
        s += hat_transform(gg, j, xi) * field.at(gg.interior_node(j));
    } else {
      CVec2 that = CVec2::Zero();
      for (int j = 0; j < m; ++j) {
        const Complex h = hat_transform(gg, j, xi);
        that(0) += h * trace(2 * j);
        that(1) += h * trace(2 * j + 1);
      }
      const SpectralKernelSample ks =
          kernel_sample_regularized(medium, xi, 1e-6);
      if (!ks.m_inv_valid)
        throw NumericalError("trace_spectrum_at: spectral map degenerate");
      s = ks.M_inv * that;
    }
    return s;
  }
};

namespace detail {

inline double boundary_resolution(const Mesh& mesh, const ElasticMedium& med) {
  double hmax = 0;
  for (const auto& e : mesh.bedges)
    hmax = std::max(hmax, (mesh.nodes[e.b] - mesh.nodes[e.a]).norm());
  const double wavelength = 2.0 * M_PI / med.k_s;
  return wavelength / std::max(hmax, 1e-300);
}

}  // namespace detail

inline ForwardSolution solve_dirichlet(const ElasticMedium& med,
                                       const IncidenceConfig& cfg,
                                       const Mesh& mesh,
                                       const QuadratureOptions& opts = {}) {
  ForwardSolution sol;
  sol.medium = med;
  sol.cfg = cfg;
  sol.bc = BoundaryKind::Dirichlet;
  sol.dsys = std::make_shared<DirichletSystem>(
      build_dirichlet_system(mesh, med, opts));
  const CVecX rhs = assemble_dirichlet_rhs(*sol.dsys, cfg);
  sol.field = solve_dirichlet_system(*sol.dsys, rhs);
  sol.field.mesh = &sol.dsys->mesh;
  sol.diag.nodes_per_wavelength = detail::boundary_resolution(mesh, med);
  sol.diag.under_resolved = sol.diag.nodes_per_wavelength < 10.0;
  const CVecX bred = [&] {
    CVecX b(sol.dsys->dof_of_reduced.size());
    for (size_t i = 0; i < sol.dsys->dof_of_reduced.size(); ++i)
      b(i) = rhs(sol.dsys->dof_of_reduced[i]);
    return b;
  }();
  CVecX xr(sol.dsys->dof_of_reduced.size());
  for (size_t i = 0; i < sol.dsys->dof_of_reduced.size(); ++i)
    xr(i) = sol.field.values(sol.dsys->dof_of_reduced[i]);
  sol.diag.residual =
      (sol.dsys->A * xr - bred).norm() / std::max(bred.norm(), 1e-300);
  return sol;
}

inline ForwardSolution solve_neumann(const ElasticMedium& med,
                                     const IncidenceConfig& cfg,
                                     const Mesh& mesh,
                                     const QuadratureOptions& opts = {}) {
  ForwardSolution sol;
  sol.medium = med;
  sol.cfg = cfg;
  sol.bc = BoundaryKind::Neumann;
  sol.nsys =
      std::make_shared<NeumannSystem>(build_neumann_system(mesh, med, opts));
  const CVecX rhs = assemble_neumann_rhs(*sol.nsys, cfg);
  NeumannSolution ns = solve_neumann_system(*sol.nsys, rhs);
  sol.field = std::move(ns.u_s);
  sol.field.mesh = &sol.nsys->mesh;
  sol.trace = std::move(ns.trace);
  sol.diag.nodes_per_wavelength = detail::boundary_resolution(mesh, med);
  sol.diag.under_resolved = sol.diag.nodes_per_wavelength < 10.0;
  CVecX full(2 * sol.nsys->n_nodes() + 2 * sol.nsys->n_trace());
  full.head(2 * sol.nsys->n_nodes()) = sol.field.values;
  full.tail(2 * sol.nsys->n_trace()) = sol.trace;
  sol.diag.residual =
      (sol.nsys->A * full - rhs).norm() / std::max(rhs.norm(), 1e-300);
  return sol;
}

// Total field at a mesh node (identical to the stored field for Dirichlet).
inline CVec2 total_field_at_node(const ForwardSolution& sol, int node) {
  if (sol.bc == BoundaryKind::Dirichlet) return sol.field.at(node);
  const PlaneWaveField h = ground_field(sol.medium, sol.cfg, sol.bc);
  return sol.field.at(node) + h.value(sol.mesh().nodes[node]);
}

// Scattered field at a mesh node.
inline CVec2 scattered_field_at_node(const ForwardSolution& sol, int node) {
  if (sol.bc == BoundaryKind::Neumann) return sol.field.at(node);
  const PlaneWaveField h = ground_field(sol.medium, sol.cfg, sol.bc);
  return sol.field.at(node) - h.value(sol.mesh().nodes[node]);
}

// Scattered-field values above the ground by spectral propagation of the
// Gamma trace.  Points must satisfy x_2 > 0.
inline std::vector<CVec2> evaluate_upper(const ForwardSolution& sol,
                                         const std::vector<Vec2>& points) {
  const QuadratureGrid& grid = sol.grid();
  std::vector<CVec2> spectrum(grid.nodes.size());
  for (size_t i = 0; i < grid.nodes.size(); ++i)
    spectrum[i] = sol.trace_spectrum_at(grid.nodes[i]);
  std::vector<CVec2> out;
  out.reserve(points.size());
  for (const Vec2& x : points)
    out.push_back(propagate_upward(sol.medium, grid, spectrum, x));
  return out;
}

// Mismatch between the two computations of the radiated power:
// Im<T u_s, u_s>_Gamma through the assembled boundary block versus the
// band-limited potential-amplitude integral.
inline double flux_balance(const ForwardSolution& sol,
                           int points_per_panel = 16, int refine_levels = 10) {
  const GammaGeometry& gg = sol.gamma();
  const int m = gg.interior_count();
  double im_pairing = 0;
  if (sol.bc == BoundaryKind::Dirichlet) {
    CVecX u(2 * m);
    for (int j = 0; j < m; ++j) {
      const CVec2 v = sol.field.at(gg.interior_node(j));
      u(2 * j) = v(0);
      u(2 * j + 1) = v(1);
    }
    im_pairing = (u.adjoint() * sol.dsys->dtn * u)(0).imag();
  } else {
    // <T u_s, u_s> = conj(t^H N t) with N the displacement-map block
    im_pairing = -(sol.trace.adjoint() * sol.nsys->ntd * sol.trace)(0).imag();
  }
  const double flux = radiated_flux(
      sol.medium,
      [&](double xi) {
        return potentials_from_trace(sol.medium, xi, sol.trace_spectrum_at(xi))
            .P;
      },
      [&](double xi) {
        return potentials_from_trace(sol.medium, xi, sol.trace_spectrum_at(xi))
            .S;
      },
      points_per_panel, refine_levels);
  return std::abs(im_pairing - flux) / std::max(1.0, std::abs(flux));
}

// ---------------------------------------------------------------------------
// Norms and prolongation for self-convergence studies
// ---------------------------------------------------------------------------

inline double h1_seminorm(const Mesh& mesh, const CVecX& values) {
  double acc = 0;
  for (const auto& t : mesh.tris) {
    Vec2 g[3];
    double area;
    detail::p1_gradients(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]],
                         g, area);
    CMat2 J = CMat2::Zero();
    for (int i = 0; i < 3; ++i) {
      const CVec2 v(values(2 * t[i]), values(2 * t[i] + 1));
      J += v * g[i].transpose().cast<Complex>();
    }
    acc += area * J.squaredNorm();
  }
  return std::sqrt(acc);
}

inline double l2_norm(const Mesh& mesh, const CVecX& values) {
  double acc = 0;
  for (const auto& t : mesh.tris) {
    const double area = std::abs(Mesh::signed_area(
        mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]));
    // exact P1 mass: (area/12) (|v0+v1+v2|^2 + |v0|^2 + |v1|^2 + |v2|^2)
    for (int c = 0; c < 2; ++c) {
      const Complex v0 = values(2 * t[0] + c), v1 = values(2 * t[1] + c),
                    v2 = values(2 * t[2] + c);
      acc += area / 12.0 *
             (std::norm(v0 + v1 + v2) + std::norm(v0) + std::norm(v1) +
              std::norm(v2));
    }
  }
  return std::sqrt(acc);
}

// Nodal interpolation of a coarse P1 field onto a red-refined mesh using the
// parent pairs produced by refine().
inline CVecX prolong(const CVecX& coarse_values,
                     const std::vector<std::array<int, 2>>& parents) {
  CVecX fine(2 * parents.size());
  for (size_t i = 0; i < parents.size(); ++i)
    for (int c = 0; c < 2; ++c)
      fine(2 * i + c) = 0.5 * (coarse_values(2 * parents[i][0] + c) +
                               coarse_values(2 * parents[i][1] + c));
  return fine;
}

}  // namespace elcav
