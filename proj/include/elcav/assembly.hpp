#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <map>
#include <memory>
#include <vector>

#include "elcav/common.hpp"
#include "elcav/geometry.hpp"
#include "elcav/medium.hpp"
#include "elcav/spectral.hpp"

namespace elcav {

using SpMatD = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<Complex>;

// Complex nodal displacement vector over a mesh, dof = 2*node + component.
struct DiscreteField {
  const Mesh* mesh = nullptr;
  CVecX values;

  CVec2 at(int node) const { return CVec2(values(2 * node), values(2 * node + 1)); }
  void set(int node, const CVec2& v) {
    values(2 * node) = v(0);
    values(2 * node + 1) = v(1);
  }
};

// ---------------------------------------------------------------------------
// Element assembly: energy form E(u,v) = mu grad:grad + (lambda+mu) div div,
// exact P1 integration.
// ---------------------------------------------------------------------------

namespace detail {

inline void p1_gradients(const Vec2& p0, const Vec2& p1, const Vec2& p2,
                         Vec2 g[3], double& area) {
  area = Mesh::signed_area(p0, p1, p2);
  g[0] = Vec2(p1(1) - p2(1), p2(0) - p1(0)) / (2.0 * area);
  g[1] = Vec2(p2(1) - p0(1), p0(0) - p2(0)) / (2.0 * area);
  g[2] = Vec2(p0(1) - p1(1), p1(0) - p0(0)) / (2.0 * area);
}

}  // namespace detail

inline std::pair<SpMatD, SpMatD> assemble_energy(const Mesh& mesh,
                                                 const ElasticMedium& med) {
  const int n = static_cast<int>(mesh.nodes.size());
  std::vector<Eigen::Triplet<double>> kt, mt;
  for (const auto& t : mesh.tris) {
    Vec2 g[3];
    double area;
    detail::p1_gradients(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]],
                         g, area);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double lap = area * g[i].dot(g[j]);
        for (int c = 0; c < 2; ++c)
          kt.emplace_back(2 * t[i] + c, 2 * t[j] + c, med.mu * lap);
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d)
            kt.emplace_back(2 * t[i] + c, 2 * t[j] + d,
                            (med.lambda + med.mu) * area * g[i](c) * g[j](d));
        const double mass = area / 12.0 * (i == j ? 2.0 : 1.0);
        for (int c = 0; c < 2; ++c)
          mt.emplace_back(2 * t[i] + c, 2 * t[j] + c, mass);
      }
  }
  SpMatD K(2 * n, 2 * n), M(2 * n, 2 * n);
  K.setFromTriplets(kt.begin(), kt.end());
  M.setFromTriplets(mt.begin(), mt.end());
  return {K, M};
}

// ---------------------------------------------------------------------------
// Gamma geometry and hat-function Fourier transforms
// ---------------------------------------------------------------------------

struct GammaGeometry {
  std::vector<int> nodes;  // all Gamma mesh node ids ordered by x_1
  std::vector<double> x;   // their x_1 coordinates

  int count() const { return static_cast<int>(nodes.size()); }
  int interior_count() const { return std::max(0, count() - 2); }
  // j-th interior node (0-based) sits at position index j+1
  int interior_node(int j) const { return nodes[j + 1]; }
};

inline GammaGeometry gamma_geometry(const Mesh& mesh) {
  GammaGeometry g;
  g.nodes = mesh.gamma_nodes_sorted();
  for (int n : g.nodes) g.x.push_back(mesh.nodes[n](0));
  return g;
}

namespace detail {

// Exact transform of a linear segment: int_a^b (fa + (fb-fa) t) e^{-i xi x} dx
// with t the local coordinate, including the removable xi -> 0 limit.
inline Complex segment_ft(double a, double b, double fa, double fb, double xi) {
  const double L = b - a;
  const Complex z = -Iu * xi * L;
  Complex E1, E2;
  if (std::abs(z) < 1e-4) {
    E1 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
    E2 = 0.5 + z / 3.0 + z * z / 8.0 + z * z * z / 30.0;
  } else {
    const Complex ez = std::exp(z);
    E1 = (ez - 1.0) / z;
    E2 = (ez * (z - 1.0) + 1.0) / (z * z);
  }
  return L * std::exp(-Iu * xi * a) * (fa * E1 + (fb - fa) * E2);
}

}  // namespace detail

// Closed-form Fourier transform of the piecewise-linear hat centered at
// interior Gamma node j (0-based among interior nodes), convention
// (1/sqrt(2 pi)) int f(x) e^{-i xi x} dx.
inline Complex hat_transform(const GammaGeometry& gg, int j, double xi) {
  const double xl = gg.x[j], xc = gg.x[j + 1], xr = gg.x[j + 2];
  const Complex v = detail::segment_ft(xl, xc, 0.0, 1.0, xi) +
                    detail::segment_ft(xc, xr, 1.0, 0.0, xi);
  return v / std::sqrt(2.0 * M_PI);
}

// Hat spectra matrix H(j, q) = phi_hat_j(xi_q) for interior Gamma nodes.
inline CMatX hat_spectra(const GammaGeometry& gg, const QuadratureGrid& grid) {
  const int m = gg.interior_count();
  const int q = static_cast<int>(grid.nodes.size());
  CMatX H(m, q);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < q; ++i) H(j, i) = hat_transform(gg, j, grid.nodes[i]);
  return H;
}

namespace detail {

// Pairing block B with B(2j+c, 2k+d) = int m_cd(xi) phihat_k conj(phihat_j) dxi.
inline CMatX kernel_pairing_block(const CMatX& H, const QuadratureGrid& grid,
                                  const std::array<CVecX, 4>& m_entries) {
  const int m = static_cast<int>(H.rows());
  const int q = static_cast<int>(H.cols());
  CMatX out = CMatX::Zero(2 * m, 2 * m);
  const CMatX Hc = H.conjugate();
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d) {
      CVecX wm(q);
      for (int i = 0; i < q; ++i)
        wm(i) = grid.weights[i] * m_entries[2 * c + d](i);
      const CMatX blk = Hc * wm.asDiagonal() * H.transpose();
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) out(2 * j + c, 2 * k + d) = blk(j, k);
    }
  return out;
}

}  // namespace detail

// Dense DtN coupling block over interior Gamma dofs (applied with the
// minus sign of the sesquilinear form by the callers).
inline CMatX assemble_dtn_block(const GammaGeometry& gg,
                                const ElasticMedium& med,
                                const QuadratureGrid& grid) {
  if (gg.interior_count() < 2)
    throw GeometryError("Gamma must carry at least 2 interior nodes");
  const CMatX H = hat_spectra(gg, grid);
  const int q = static_cast<int>(grid.nodes.size());
  std::array<CVecX, 4> m;
  for (auto& v : m) v.resize(q);
  for (int i = 0; i < q; ++i) {
    const SpectralKernelSample s = kernel_sample(med, grid.nodes[i]);
    m[0](i) = s.M(0, 0);
    m[1](i) = s.M(0, 1);
    m[2](i) = s.M(1, 0);
    m[3](i) = s.M(1, 1);
  }
  return detail::kernel_pairing_block(H, grid, m);
}

// Dense NtD block; kernels are evaluated with the limiting-absorption shift.
inline CMatX assemble_ntd_block(const GammaGeometry& gg,
                                const ElasticMedium& med,
                                const QuadratureGrid& grid,
                                double delta_reg = 1e-6) {
  if (gg.interior_count() < 2)
    throw GeometryError("Gamma must carry at least 2 interior nodes");
  const CMatX H = hat_spectra(gg, grid);
  const int q = static_cast<int>(grid.nodes.size());
  std::array<CVecX, 4> m;
  for (auto& v : m) v.resize(q);
  for (int i = 0; i < q; ++i) {
    const SpectralKernelSample s =
        kernel_sample_regularized(med, grid.nodes[i], delta_reg);
    m[0](i) = s.M_inv(0, 0);
    m[1](i) = s.M_inv(0, 1);
    m[2](i) = s.M_inv(1, 0);
    m[3](i) = s.M_inv(1, 1);
  }
  return detail::kernel_pairing_block(H, grid, m);
}

// ---------------------------------------------------------------------------
// Boundary quadrature helpers
// ---------------------------------------------------------------------------

namespace detail {

// Outward edge normal (away from the adjacent triangle).
inline Vec2 edge_outward_normal(const Mesh& mesh, const BEdge& e) {
  // find the (unique) adjacent triangle
  for (const auto& t : mesh.tris) {
    int other = -1;
    int hit = 0;
    for (int i = 0; i < 3; ++i) {
      if (t[i] == e.a || t[i] == e.b)
        ++hit;
      else
        other = t[i];
    }
    if (hit == 2 && other >= 0) {
      const Vec2 tv = mesh.nodes[e.b] - mesh.nodes[e.a];
      Vec2 n(tv(1), -tv(0));
      const Vec2 mid = 0.5 * (mesh.nodes[e.a] + mesh.nodes[e.b]);
      if (n.dot(mid - mesh.nodes[other]) < 0) n = -n;
      return n.normalized();
    }
  }
  throw GeometryError("boundary edge without adjacent triangle");
}

}  // namespace detail

// Accumulate int_E f(x) . phi_node(x) ds over edges of the given tag into a
// full-length dof vector.  `f` receives the point and the outward normal.
template <typename F>
void accumulate_boundary_load(const Mesh& mesh, BTag tag, const F& f,
                              CVecX& rhs) {
  static const GaussRule rule = gauss_legendre(4);
  for (const auto& e : mesh.bedges) {
    if (e.tag != tag) continue;
    const Vec2 pa = mesh.nodes[e.a], pb = mesh.nodes[e.b];
    const Vec2 n = detail::edge_outward_normal(mesh, e);
    const double len = (pb - pa).norm();
    for (size_t q = 0; q < rule.x.size(); ++q) {
      const double s = 0.5 * (1.0 + rule.x[q]);  // in [0,1]
      const double w = 0.5 * rule.w[q] * len;
      const Vec2 x = pa + s * (pb - pa);
      const CVec2 val = f(x, n);
      for (int c = 0; c < 2; ++c) {
        rhs(2 * e.a + c) += w * (1.0 - s) * val(c);
        rhs(2 * e.b + c) += w * s * val(c);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Dirichlet system: u = 0 on S (and GammaC), DtN transparent condition on Gamma
// ---------------------------------------------------------------------------

struct DirichletSystem {
  Mesh mesh;
  ElasticMedium medium;
  GammaGeometry gg;
  QuadratureGrid grid;
  CMatX dtn;
  SpMatD K, Mass;             // full 2N x 2N real matrices
  std::vector<int> reduced_of_dof;  // -1 when constrained
  std::vector<int> dof_of_reduced;
  SpMatC A;                   // reduced system with the TBC folded in
  std::shared_ptr<Eigen::SparseLU<SpMatC>> lu;

  int n_nodes() const { return static_cast<int>(mesh.nodes.size()); }
};

inline DirichletSystem build_dirichlet_system(const Mesh& mesh,
                                              const ElasticMedium& med,
                                              const QuadratureOptions& opts = {}) {
  DirichletSystem sys;
  sys.mesh = mesh;
  sys.medium = med;
  sys.gg = gamma_geometry(mesh);
  sys.grid = make_kernel_grid(med, opts);
  sys.dtn = assemble_dtn_block(sys.gg, med, sys.grid);
  std::tie(sys.K, sys.Mass) = assemble_energy(mesh, med);

  const int n = sys.n_nodes();
  std::vector<char> constrained(n, 0);
  for (int j : mesh.tagged_nodes(BTag::S)) constrained[j] = 1;
  for (int j : mesh.tagged_nodes(BTag::GammaC)) constrained[j] = 1;
  sys.reduced_of_dof.assign(2 * n, -1);
  for (int i = 0; i < n; ++i)
    if (!constrained[i])
      for (int c = 0; c < 2; ++c) {
        sys.reduced_of_dof[2 * i + c] =
            static_cast<int>(sys.dof_of_reduced.size());
        sys.dof_of_reduced.push_back(2 * i + c);
      }

  const double w2 = med.omega * med.omega;
  std::vector<Eigen::Triplet<Complex>> trip;
  auto add = [&](int r, int c, Complex v) {
    const int rr = sys.reduced_of_dof[r], rc = sys.reduced_of_dof[c];
    if (rr >= 0 && rc >= 0) trip.emplace_back(rr, rc, v);
  };
  for (int k = 0; k < sys.K.outerSize(); ++k)
    for (SpMatD::InnerIterator it(sys.K, k); it; ++it)
      add(static_cast<int>(it.row()), static_cast<int>(it.col()),
          Complex(it.value(), 0));
  for (int k = 0; k < sys.Mass.outerSize(); ++k)
    for (SpMatD::InnerIterator it(sys.Mass, k); it; ++it)
      add(static_cast<int>(it.row()), static_cast<int>(it.col()),
          Complex(-w2 * it.value(), 0));
  const int m = sys.gg.interior_count();
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          add(2 * sys.gg.interior_node(j) + c, 2 * sys.gg.interior_node(k) + d,
              -sys.dtn(2 * j + c, 2 * k + d));

  const int nr = static_cast<int>(sys.dof_of_reduced.size());
  sys.A.resize(nr, nr);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.lu = std::make_shared<Eigen::SparseLU<SpMatC>>();
  sys.lu->compute(sys.A);
  if (sys.lu->info() != Eigen::Success)
    throw SolverError("Dirichlet system factorization failed (possible discrete resonance)");
  return sys;
}

// Right-hand side (g, phi_j)_Gamma with g = T(u_i + u_r), full dof length.
inline CVecX assemble_dirichlet_rhs(const DirichletSystem& sys,
                                    const IncidenceConfig& cfg) {
  CVecX rhs = CVecX::Zero(2 * sys.n_nodes());
  if (cfg.c_p == Complex(0, 0) && cfg.c_s == Complex(0, 0)) return rhs;
  const PlaneWaveField total =
      ground_field(sys.medium, cfg, BoundaryKind::Dirichlet);
  accumulate_boundary_load(
      sys.mesh, BTag::Gamma,
      [&](const Vec2& x, const Vec2&) { return total.traction(x, Vec2(0, 1)); },
      rhs);
  return rhs;
}

// Solve with optional inhomogeneous Dirichlet data at constrained dofs.
// `rhs_full` is a full-length load vector; `dirichlet_values`, when present,
// holds prescribed values at every dof (only constrained entries are read).
inline DiscreteField solve_dirichlet_system(
    const DirichletSystem& sys, const CVecX& rhs_full,
    const CVecX* dirichlet_values = nullptr) {
  const int nr = static_cast<int>(sys.dof_of_reduced.size());
  CVecX b(nr);
  for (int i = 0; i < nr; ++i) b(i) = rhs_full(sys.dof_of_reduced[i]);

  if (dirichlet_values) {
    // lifting: b_free -= (K - w^2 M)[free, constrained] * values
    const double w2 = sys.medium.omega * sys.medium.omega;
    auto lift = [&](const SpMatD& mat, double scale) {
      for (int k = 0; k < mat.outerSize(); ++k)
        for (SpMatD::InnerIterator it(mat, k); it; ++it) {
          const int r = static_cast<int>(it.row());
          const int c = static_cast<int>(it.col());
          if (sys.reduced_of_dof[r] >= 0 && sys.reduced_of_dof[c] < 0)
            b(sys.reduced_of_dof[r]) -=
                scale * it.value() * (*dirichlet_values)(c);
        }
    };
    lift(sys.K, 1.0);
    lift(sys.Mass, -w2);
  }

  const CVecX x = sys.lu->solve(b);
  const double resid = (sys.A * x - b).norm() / std::max(b.norm(), 1e-300);
  if (b.norm() > 0 && resid > 1e-10)
    throw SolverError("Dirichlet solve residual above tolerance");

  DiscreteField f;
  f.mesh = &sys.mesh;
  f.values = CVecX::Zero(2 * sys.n_nodes());
  for (int i = 0; i < nr; ++i) f.values(sys.dof_of_reduced[i]) = x(i);
  if (dirichlet_values)
    for (int d = 0; d < 2 * sys.n_nodes(); ++d)
      if (sys.reduced_of_dof[d] < 0) f.values(d) = (*dirichlet_values)(d);
  return f;
}

// ---------------------------------------------------------------------------
// Neumann saddle-point system: unknowns (u_s, t = T u_s on Gamma)
// ---------------------------------------------------------------------------

struct NeumannSystem {
  Mesh mesh;
  ElasticMedium medium;
  GammaGeometry gg;
  QuadratureGrid grid;
  CMatX ntd;
  SpMatD K, Mass;
  SpMatC A;  // (2N + 2m) saddle system
  std::shared_ptr<Eigen::SparseLU<SpMatC>> lu;

  int n_nodes() const { return static_cast<int>(mesh.nodes.size()); }
  int n_trace() const { return gg.interior_count(); }
};

inline NeumannSystem build_neumann_system(const Mesh& mesh,
                                          const ElasticMedium& med,
                                          const QuadratureOptions& opts = {}) {
  NeumannSystem sys;
  sys.mesh = mesh;
  sys.medium = med;
  sys.gg = gamma_geometry(mesh);
  sys.grid = make_kernel_grid(med, opts);
  sys.ntd = assemble_ntd_block(sys.gg, med, sys.grid, opts.delta_reg);
  std::tie(sys.K, sys.Mass) = assemble_energy(mesh, med);

  const int n = sys.n_nodes();
  const int m = sys.n_trace();
  const double w2 = med.omega * med.omega;

  // Gamma boundary mass between u-nodes and interior trace hats
  std::vector<int> trace_idx(n, -1);
  for (int j = 0; j < m; ++j) trace_idx[sys.gg.interior_node(j)] = j;

  std::vector<Eigen::Triplet<Complex>> trip;
  for (int k = 0; k < sys.K.outerSize(); ++k)
    for (SpMatD::InnerIterator it(sys.K, k); it; ++it)
      trip.emplace_back(it.row(), it.col(), Complex(it.value(), 0));
  for (int k = 0; k < sys.Mass.outerSize(); ++k)
    for (SpMatD::InnerIterator it(sys.Mass, k); it; ++it)
      trip.emplace_back(it.row(), it.col(), Complex(-w2 * it.value(), 0));

  for (const auto& e : mesh.bedges) {
    if (e.tag != BTag::Gamma) continue;
    const double len = (mesh.nodes[e.b] - mesh.nodes[e.a]).norm();
    const int nodes[2] = {e.a, e.b};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const int tj = trace_idx[nodes[j]];
        if (tj < 0) continue;
        const double v = len * (i == j ? 1.0 / 3.0 : 1.0 / 6.0);
        for (int c = 0; c < 2; ++c) {
          // momentum rows: - int_Gamma t . w
          trip.emplace_back(2 * nodes[i] + c, 2 * n + 2 * tj + c,
                            Complex(-v, 0));
          // constraint rows: + int_Gamma u . s
          trip.emplace_back(2 * n + 2 * tj + c, 2 * nodes[i] + c,
                            Complex(v, 0));
        }
      }
  }
  // constraint rows: - int (M^-1 t_hat) s_hat
  for (int j = 0; j < 2 * m; ++j)
    for (int k = 0; k < 2 * m; ++k)
      trip.emplace_back(2 * n + j, 2 * n + k, -sys.ntd(j, k));

  sys.A.resize(2 * n + 2 * m, 2 * n + 2 * m);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.lu = std::make_shared<Eigen::SparseLU<SpMatC>>();
  sys.lu->compute(sys.A);
  if (sys.lu->info() != Eigen::Success)
    throw SolverError("Neumann saddle system factorization failed");
  return sys;
}

// Load int_S (-T h) . phi_j ds with h = u_i + u_r (g vanishes for plane waves).
inline CVecX assemble_neumann_rhs(const NeumannSystem& sys,
                                  const IncidenceConfig& cfg) {
  CVecX rhs = CVecX::Zero(2 * sys.n_nodes() + 2 * sys.n_trace());
  if (cfg.c_p == Complex(0, 0) && cfg.c_s == Complex(0, 0)) return rhs;
  const PlaneWaveField h = ground_field(sys.medium, cfg, BoundaryKind::Neumann);
  CVecX mom = CVecX::Zero(2 * sys.n_nodes());
  accumulate_boundary_load(
      sys.mesh, BTag::S,
      [&](const Vec2& x, const Vec2& n) -> CVec2 { return -h.traction(x, n); },
      mom);
  rhs.head(2 * sys.n_nodes()) = mom;
  return rhs;
}

struct NeumannSolution {
  DiscreteField u_s;
  CVecX trace;  // t = T u_s at interior Gamma nodes (2m)
};

inline NeumannSolution solve_neumann_system(const NeumannSystem& sys,
                                            const CVecX& rhs) {
  const CVecX x = sys.lu->solve(rhs);
  const double resid = (sys.A * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
  if (rhs.norm() > 0 && resid > 1e-10)
    throw SolverError("Neumann solve residual above tolerance");
  NeumannSolution sol;
  sol.u_s.mesh = &sys.mesh;
  sol.u_s.values = x.head(2 * sys.n_nodes());
  sol.trace = x.tail(2 * sys.n_trace());
  return sol;
}

// ---------------------------------------------------------------------------
// Variational flux recovery on the cavity wall
// ---------------------------------------------------------------------------

// Nodal boundary traction on S from the residual functional: for a field
// satisfying the discrete interior equations, (K - w^2 M) u tested against a
// wall hat equals the weak natural flux int_S (T u) . phi_j, which is
// mass-inverted on the wall.  This is markedly more accurate than recovered
// gradients.  Junction rows (aperture corners) mix wall and aperture
// contributions and are excluded; their entries are returned as zero.
inline std::vector<CVec2> recover_s_traction(const Mesh& mesh,
                                             const SpMatD& K,
                                             const SpMatD& Mass, double omega,
                                             const CVecX& values) {
  const int n = static_cast<int>(mesh.nodes.size());
  const CVecX resid = K.cast<Complex>() * values -
                      (omega * omega) * (Mass.cast<Complex>() * values);

  std::vector<char> junction(n, 0);
  for (int j : mesh.junction_nodes()) junction[j] = 1;
  std::vector<int> s_index(n, -1);
  std::vector<int> s_nodes;
  for (int j : mesh.tagged_nodes(BTag::S))
    if (!junction[j]) {
      s_index[j] = static_cast<int>(s_nodes.size());
      s_nodes.push_back(j);
    }
  const int ns = static_cast<int>(s_nodes.size());

  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& e : mesh.bedges) {
    if (e.tag != BTag::S) continue;
    const double len = (mesh.nodes[e.b] - mesh.nodes[e.a]).norm();
    const int nd[2] = {e.a, e.b};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        if (s_index[nd[i]] < 0 || s_index[nd[j]] < 0) continue;
        trip.emplace_back(s_index[nd[i]], s_index[nd[j]],
                          len * (i == j ? 1.0 / 3.0 : 1.0 / 6.0));
      }
  }
  SpMatD Ms(ns, ns);
  Ms.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SpMatD> ldlt(Ms);
  if (ldlt.info() != Eigen::Success)
    throw SolverError("wall mass factorization failed");

  std::vector<CVec2> out(n, CVec2::Zero());
  for (int c = 0; c < 2; ++c) {
    VecX re(ns), im(ns);
    for (int j = 0; j < ns; ++j) {
      re(j) = resid(2 * s_nodes[j] + c).real();
      im(j) = resid(2 * s_nodes[j] + c).imag();
    }
    const VecX xr = ldlt.solve(re), xi = ldlt.solve(im);
    for (int j = 0; j < ns; ++j) out[s_nodes[j]](c) = Complex(xr(j), xi(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gradient recovery: nodal Jacobians by area-weighted patch averaging
// ---------------------------------------------------------------------------

// J(c, d) = d u_c / d x_d per node.
inline std::vector<CMat2> recover_gradients(const Mesh& mesh,
                                            const CVecX& values) {
  const int n = static_cast<int>(mesh.nodes.size());
  std::vector<CMat2> J(n, CMat2::Zero());
  std::vector<double> wsum(n, 0.0);
  for (const auto& t : mesh.tris) {
    Vec2 g[3];
    double area;
    detail::p1_gradients(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]],
                         g, area);
    CMat2 Jt = CMat2::Zero();
    for (int i = 0; i < 3; ++i) {
      const CVec2 v(values(2 * t[i]), values(2 * t[i] + 1));
      Jt += v * g[i].transpose().cast<Complex>();
    }
    for (int i = 0; i < 3; ++i) {
      J[t[i]] += area * Jt;
      wsum[t[i]] += area;
    }
  }
  for (int i = 0; i < n; ++i)
    if (wsum[i] > 0) J[i] /= wsum[i];
  return J;
}

}  // namespace elcav
