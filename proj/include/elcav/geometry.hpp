#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <vector>

#include "elcav/common.hpp"

namespace elcav {

// ---------------------------------------------------------------------------
// Cavity shapes: star-shaped curves over the lower half-plane,
// S(phi) = r(phi) (cos phi, -sin phi), phi in [0, pi].
// ---------------------------------------------------------------------------

struct CavityShape {
  enum class Kind { Semicircle, Star };
  Kind kind = Kind::Semicircle;
  double r0 = 1.0;
  std::vector<double> a;  // cosine coefficients
  std::vector<double> b;  // sine coefficients

  static CavityShape semicircle(double radius) {
    CavityShape s;
    s.kind = Kind::Semicircle;
    s.r0 = radius;
    return s;
  }

  static CavityShape star(double r0, std::vector<double> a,
                          std::vector<double> b) {
    CavityShape s;
    s.kind = Kind::Star;
    s.r0 = r0;
    s.a = std::move(a);
    s.b = std::move(b);
    return s;
  }

  double radius(double phi) const {
    double r = r0;
    for (size_t m = 0; m < a.size(); ++m) r += a[m] * std::cos((m + 1) * phi);
    for (size_t m = 0; m < b.size(); ++m) r += b[m] * std::sin((m + 1) * phi);
    return r;
  }

  double radius_derivative(double phi) const {
    double dr = 0;
    for (size_t m = 0; m < a.size(); ++m)
      dr -= a[m] * (m + 1) * std::sin((m + 1) * phi);
    for (size_t m = 0; m < b.size(); ++m)
      dr += b[m] * (m + 1) * std::cos((m + 1) * phi);
    return dr;
  }

  Vec2 point(double phi) const {
    const double r = radius(phi);
    return Vec2(r * std::cos(phi), -r * std::sin(phi));
  }

  // Unit normal pointing out of the cavity (away from the origin side).
  Vec2 outward_normal(double phi) const {
    const double r = radius(phi), dr = radius_derivative(phi);
    const Vec2 tangent(dr * std::cos(phi) - r * std::sin(phi),
                       -dr * std::sin(phi) - r * std::cos(phi));
    Vec2 n(tangent(1), -tangent(0));
    const Vec2 radial(std::cos(phi), -std::sin(phi));
    if (n.dot(radial) < 0) n = -n;
    return n.normalized();
  }

  double max_radius() const {
    double rm = 0;
    for (int i = 0; i <= 720; ++i) rm = std::max(rm, radius(M_PI * i / 720.0));
    return rm;
  }

  void validate(double r_min = 1e-6) const {
    const int n = 720;
    std::vector<Vec2> pts(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double phi = M_PI * i / n;
      if (radius(phi) < r_min)
        throw GeometryError("cavity radius falls below r_min");
      pts[i] = point(phi);
    }
    // pairwise segment intersection on the sample grid
    auto seg_intersect = [](const Vec2& p1, const Vec2& p2, const Vec2& q1,
                            const Vec2& q2) {
      auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
        return (b(0) - a(0)) * (c(1) - a(1)) - (b(1) - a(1)) * (c(0) - a(0));
      };
      const double o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
      const double o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
      return o1 * o2 < 0 && o3 * o4 < 0;
    };
    for (int i = 0; i < n; ++i)
      for (int j = i + 2; j < n; ++j)
        if (seg_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1]))
          throw GeometryError("cavity curve self-intersects");
  }
};

// ---------------------------------------------------------------------------
// Triangular meshes of the cavity with tagged boundary
// ---------------------------------------------------------------------------

enum class BTag { S, Gamma, GammaC };

struct BEdge {
  int a = 0, b = 0;
  BTag tag = BTag::S;
};

struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;  // counterclockwise
  std::vector<BEdge> bedges;
  int refinement_level = 0;

  static double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b(0) - a(0)) * (c(1) - a(1)) - (b(1) - a(1)) * (c(0) - a(0)));
  }

  double tri_area(int t) const {
    return signed_area(nodes[tris[t][0]], nodes[tris[t][1]], nodes[tris[t][2]]);
  }

  double total_area() const {
    double s = 0;
    for (size_t t = 0; t < tris.size(); ++t) s += tri_area(static_cast<int>(t));
    return s;
  }

  double max_edge_length() const {
    double h = 0;
    for (const auto& t : tris)
      for (int e = 0; e < 3; ++e)
        h = std::max(h, (nodes[t[e]] - nodes[t[(e + 1) % 3]]).norm());
    return h;
  }

  // Nodes incident to edges of the given tag.
  std::vector<int> tagged_nodes(BTag tag) const {
    std::vector<char> mark(nodes.size(), 0);
    for (const auto& e : bedges)
      if (e.tag == tag) mark[e.a] = mark[e.b] = 1;
    std::vector<int> out;
    for (size_t i = 0; i < nodes.size(); ++i)
      if (mark[i]) out.push_back(static_cast<int>(i));
    return out;
  }

  // Gamma nodes ordered by x_1 (the aperture is a segment of {x_2 = 0}).
  std::vector<int> gamma_nodes_sorted() const {
    std::vector<int> g = tagged_nodes(BTag::Gamma);
    std::sort(g.begin(), g.end(),
              [&](int i, int j) { return nodes[i](0) < nodes[j](0); });
    return g;
  }

  // Nodes on both S and Gamma (the aperture corners).
  std::vector<int> junction_nodes() const {
    std::vector<char> s(nodes.size(), 0), gc(nodes.size(), 0);
    for (const auto& e : bedges) {
      auto& m = (e.tag == BTag::S) ? s : gc;
      m[e.a] = m[e.b] = 1;
    }
    std::vector<int> out;
    for (size_t i = 0; i < nodes.size(); ++i)
      if (s[i] && gc[i]) out.push_back(static_cast<int>(i));
    return out;
  }

  void validate() const {
    for (size_t t = 0; t < tris.size(); ++t)
      if (tri_area(static_cast<int>(t)) <= 0)
        throw GeometryError("triangle with nonpositive area");
    // conformity: every edge shared by at most two triangles, boundary edges
    // by exactly one, and they match the tagged list
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : tris)
      for (int e = 0; e < 3; ++e) {
        int u = t[e], v = t[(e + 1) % 3];
        if (u > v) std::swap(u, v);
        count[{u, v}]++;
      }
    std::map<std::pair<int, int>, int> bcount;
    for (const auto& e : bedges) {
      int u = e.a, v = e.b;
      if (u > v) std::swap(u, v);
      bcount[{u, v}]++;
    }
    for (const auto& [edge, c] : count) {
      if (c > 2) throw GeometryError("non-manifold edge");
      if (c == 1 && !bcount.count(edge))
        throw GeometryError("untagged boundary edge");
    }
    for (const auto& [edge, c] : bcount) {
      auto it = count.find(edge);
      if (it == count.end() || it->second != 1)
        throw GeometryError("tagged edge is not a boundary edge");
    }
    // boundary edges form closed loops: every boundary node has even degree
    std::map<int, int> deg;
    for (const auto& e : bedges) {
      deg[e.a]++;
      deg[e.b]++;
    }
    for (const auto& [n, d] : deg)
      if (d != 2) throw GeometryError("boundary is not a closed loop");
    for (const auto& e : bedges)
      if (e.tag == BTag::Gamma || e.tag == BTag::GammaC)
        if (nodes[e.a](1) != 0.0 || nodes[e.b](1) != 0.0)
          throw GeometryError("Gamma node off the line x_2 = 0");
  }
};

// Structured radial-angular triangulation of the cavity interior.
inline Mesh generate_mesh(const CavityShape& shape, double target_h,
                          double gamma_extent) {
  if (!(target_h > 0)) throw GeometryError("target_h must be positive");
  shape.validate();
  double ext = 0;
  for (int i = 0; i <= 720; ++i)
    ext = std::max(ext, std::abs(shape.point(M_PI * i / 720.0)(0)));
  if (gamma_extent < ext * (1.0 - 1e-12))
    throw GeometryError("gamma_extent smaller than the cavity extent");

  const double r_max = shape.max_radius();
  int n_a = std::max(4, static_cast<int>(std::ceil(M_PI * r_max / target_h)));
  if (n_a % 2) ++n_a;  // keep the mesh mirror-symmetric for symmetric shapes
  const int n_r = std::max(2, static_cast<int>(std::ceil(r_max / target_h)));

  Mesh mesh;
  mesh.nodes.push_back(Vec2(0, 0));  // aperture center
  auto idx = [&](int i, int j) { return 1 + (i - 1) * (n_a + 1) + j; };
  for (int i = 1; i <= n_r; ++i)
    for (int j = 0; j <= n_a; ++j) {
      const double phi = M_PI * j / n_a;
      Vec2 p = (static_cast<double>(i) / n_r) * shape.point(phi);
      if (j == 0 || j == n_a) p(1) = 0.0;  // exact aperture line
      mesh.nodes.push_back(p);
    }

  auto push_tri = [&](int a, int b, int c) {
    if (Mesh::signed_area(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]) < 0)
      std::swap(b, c);
    mesh.tris.push_back({a, b, c});
  };
  for (int j = 0; j < n_a; ++j) push_tri(0, idx(1, j), idx(1, j + 1));
  for (int i = 1; i < n_r; ++i)
    for (int j = 0; j < n_a; ++j) {
      const int A = idx(i, j), B = idx(i, j + 1);
      const int C = idx(i + 1, j), D = idx(i + 1, j + 1);
      if (j < n_a / 2) {  // mirrored diagonal pattern
        push_tri(A, B, D);
        push_tri(A, D, C);
      } else {
        push_tri(A, B, C);
        push_tri(B, D, C);
      }
    }

  for (int j = 0; j < n_a; ++j)
    mesh.bedges.push_back({idx(n_r, j), idx(n_r, j + 1), BTag::S});
  mesh.bedges.push_back({0, idx(1, 0), BTag::Gamma});
  mesh.bedges.push_back({0, idx(1, n_a), BTag::Gamma});
  for (int i = 1; i < n_r; ++i) {
    mesh.bedges.push_back({idx(i, 0), idx(i + 1, 0), BTag::Gamma});
    mesh.bedges.push_back({idx(i, n_a), idx(i + 1, n_a), BTag::Gamma});
  }

  mesh.validate();
  if (mesh.max_edge_length() > 1.5 * target_h)
    throw GeometryError("mesh generator exceeded the edge-length budget");
  return mesh;
}

// Uniform red refinement; each triangle splits into four.  If `parents`
// is given, it receives for each new node the pair of coarse nodes whose
// midpoint it is (old nodes map to themselves, recorded as {i, i}).
inline Mesh refine(const Mesh& coarse,
                   std::vector<std::array<int, 2>>* parents = nullptr) {
  Mesh fine;
  fine.nodes = coarse.nodes;
  fine.refinement_level = coarse.refinement_level + 1;
  if (parents) {
    parents->clear();
    for (size_t i = 0; i < coarse.nodes.size(); ++i)
      parents->push_back({static_cast<int>(i), static_cast<int>(i)});
  }
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int u, int v) {
    auto key = std::minmax(u, v);
    auto it = mid.find({key.first, key.second});
    if (it != mid.end()) return it->second;
    const int id = static_cast<int>(fine.nodes.size());
    fine.nodes.push_back(0.5 * (coarse.nodes[u] + coarse.nodes[v]));
    if (parents) parents->push_back({key.first, key.second});
    mid[{key.first, key.second}] = id;
    return id;
  };
  for (const auto& t : coarse.tris) {
    const int m01 = midpoint(t[0], t[1]);
    const int m12 = midpoint(t[1], t[2]);
    const int m20 = midpoint(t[2], t[0]);
    fine.tris.push_back({t[0], m01, m20});
    fine.tris.push_back({m01, t[1], m12});
    fine.tris.push_back({m20, m12, t[2]});
    fine.tris.push_back({m01, m12, m20});
  }
  for (const auto& e : coarse.bedges) {
    const int m = midpoint(e.a, e.b);
    fine.bedges.push_back({e.a, m, e.tag});
    fine.bedges.push_back({m, e.b, e.tag});
  }
  return fine;
}

// ---------------------------------------------------------------------------
// Shape perturbations and mesh deformation
// ---------------------------------------------------------------------------

struct ShapePerturbation {
  double k = 0;                    // magnitude
  std::vector<Vec2> displacement;  // per mesh node (the interior extension)
  double h1inf_on_S = 0;           // measured H^{1,inf} norm on S
  double h1inf_on_mesh = 0;        // measured H^{1,inf} norm of the extension
  double measured_C = 0;           // ratio of the two
};

namespace detail {

// Scalar P1 Laplace solve with Dirichlet data on all boundary nodes.
inline VecX harmonic_extend(const Mesh& mesh,
                            const std::map<int, double>& bc_values) {
  const int n = static_cast<int>(mesh.nodes.size());
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& t : mesh.tris) {
    const Vec2 &p0 = mesh.nodes[t[0]], &p1 = mesh.nodes[t[1]],
               &p2 = mesh.nodes[t[2]];
    const double area = Mesh::signed_area(p0, p1, p2);
    Vec2 g[3];
    g[0] = Vec2(p1(1) - p2(1), p2(0) - p1(0)) / (2.0 * area);
    g[1] = Vec2(p2(1) - p0(1), p0(0) - p2(0)) / (2.0 * area);
    g[2] = Vec2(p0(1) - p1(1), p1(0) - p0(0)) / (2.0 * area);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(t[i], t[j], area * g[i].dot(g[j]));
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());

  std::vector<int> free_of(n, -1);
  std::vector<int> free_nodes;
  for (int i = 0; i < n; ++i)
    if (!bc_values.count(i)) {
      free_of[i] = static_cast<int>(free_nodes.size());
      free_nodes.push_back(i);
    }
  const int nf = static_cast<int>(free_nodes.size());
  VecX result = VecX::Zero(n);
  for (const auto& [node, v] : bc_values) result(node) = v;
  if (nf == 0) return result;

  std::vector<Eigen::Triplet<double>> tf;
  VecX rhs = VecX::Zero(nf);
  for (int k = 0; k < K.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (free_of[r] < 0) continue;
      if (free_of[c] >= 0)
        tf.emplace_back(free_of[r], free_of[c], it.value());
      else
        rhs(free_of[r]) -= it.value() * result(c);
    }
  Eigen::SparseMatrix<double> Kf(nf, nf);
  Kf.setFromTriplets(tf.begin(), tf.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(Kf);
  if (solver.info() != Eigen::Success)
    throw SolverError("harmonic extension solve failed");
  const VecX xf = solver.solve(rhs);
  for (int i = 0; i < nf; ++i) result(free_nodes[i]) = xf(i);
  return result;
}

inline double h1inf_of_field(const Mesh& mesh, const std::vector<Vec2>& f) {
  double v = 0, g = 0;
  for (const auto& x : f) v = std::max(v, x.norm());
  for (const auto& t : mesh.tris) {
    const Vec2 &p0 = mesh.nodes[t[0]], &p1 = mesh.nodes[t[1]],
               &p2 = mesh.nodes[t[2]];
    const double area = Mesh::signed_area(p0, p1, p2);
    Vec2 gb[3];
    gb[0] = Vec2(p1(1) - p2(1), p2(0) - p1(0)) / (2.0 * area);
    gb[1] = Vec2(p2(1) - p0(1), p0(0) - p2(0)) / (2.0 * area);
    gb[2] = Vec2(p0(1) - p1(1), p1(0) - p0(0)) / (2.0 * area);
    Mat2 J = Mat2::Zero();  // J(c, d) = d f_c / d x_d
    for (int i = 0; i < 3; ++i) J += f[t[i]] * gb[i].transpose();
    g = std::max(g, J.norm());
  }
  return v + g;
}

}  // namespace detail

// Angle parameter of a boundary node, phi in [0, pi].
inline double node_angle(const Vec2& p) { return std::atan2(-p(1), p(0)); }

// Direction field for a perturbation: the outward normal on S, or the
// radial direction when matching the star-coefficient parametrization.
enum class PerturbationDirection { Normal, Radial };

// Build the normal perturbation h = k p(phi) n on S, forced to zero at the
// aperture corners, and extend it into the mesh by a per-component
// harmonic blend vanishing on Gamma.
inline ShapePerturbation extend_perturbation(
    const Mesh& mesh, const std::function<double(double)>& p_on_S, double k,
    PerturbationDirection dir = PerturbationDirection::Normal) {
  const std::vector<int> s_nodes = mesh.tagged_nodes(BTag::S);
  const std::vector<int> g_nodes = mesh.tagged_nodes(BTag::Gamma);
  const std::vector<int> gc_nodes = mesh.tagged_nodes(BTag::GammaC);
  const std::vector<int> junctions = mesh.junction_nodes();
  std::vector<char> is_junction(mesh.nodes.size(), 0);
  for (int j : junctions) is_junction[j] = 1;

  // averaged outward edge normals on S
  std::vector<Vec2> normal(mesh.nodes.size(), Vec2::Zero());
  for (const auto& e : mesh.bedges) {
    if (e.tag != BTag::S) continue;
    const Vec2 t = mesh.nodes[e.b] - mesh.nodes[e.a];
    Vec2 n(t(1), -t(0));
    const Vec2 mid = 0.5 * (mesh.nodes[e.a] + mesh.nodes[e.b]);
    if (n.dot(mid) < 0) n = -n;  // away from the aperture center
    n.normalize();
    normal[e.a] += n;
    normal[e.b] += n;
  }

  std::map<int, double> bc_x, bc_y;
  std::vector<Vec2> h_on_S(mesh.nodes.size(), Vec2::Zero());
  for (int j : s_nodes) {
    Vec2 h = Vec2::Zero();
    if (!is_junction[j]) {
      const double phi = node_angle(mesh.nodes[j]);
      const Vec2 d = (dir == PerturbationDirection::Normal)
                         ? normal[j].normalized()
                         : Vec2(std::cos(phi), -std::sin(phi));
      h = k * p_on_S(phi) * d;
    }
    h_on_S[j] = h;
    bc_x[j] = h(0);
    bc_y[j] = h(1);
  }
  for (int j : g_nodes)
    if (!bc_x.count(j)) {
      bc_x[j] = 0;
      bc_y[j] = 0;
    }
  for (int j : gc_nodes)
    if (!bc_x.count(j)) {
      bc_x[j] = 0;
      bc_y[j] = 0;
    }

  const VecX hx = detail::harmonic_extend(mesh, bc_x);
  const VecX hy = detail::harmonic_extend(mesh, bc_y);

  ShapePerturbation pert;
  pert.k = k;
  pert.displacement.resize(mesh.nodes.size());
  for (size_t i = 0; i < mesh.nodes.size(); ++i)
    pert.displacement[i] = Vec2(hx(i), hy(i));

  // measured norms: H^{1,inf} on S uses the tangential derivative along edges
  double vS = 0, gS = 0;
  for (int j : s_nodes) vS = std::max(vS, h_on_S[j].norm());
  for (const auto& e : mesh.bedges) {
    if (e.tag != BTag::S) continue;
    const double len = (mesh.nodes[e.b] - mesh.nodes[e.a]).norm();
    gS = std::max(gS, (h_on_S[e.b] - h_on_S[e.a]).norm() / len);
  }
  pert.h1inf_on_S = vS + gS;
  pert.h1inf_on_mesh = detail::h1inf_of_field(mesh, pert.displacement);
  pert.measured_C =
      pert.h1inf_on_S > 0 ? pert.h1inf_on_mesh / pert.h1inf_on_S : 0.0;
  return pert;
}

inline Mesh deform_mesh(const Mesh& mesh, const ShapePerturbation& pert) {
  if (pert.displacement.size() != mesh.nodes.size())
    throw GeometryError("perturbation size does not match the mesh");
  Mesh out = mesh;
  for (size_t i = 0; i < out.nodes.size(); ++i)
    out.nodes[i] += pert.displacement[i];
  for (size_t t = 0; t < out.tris.size(); ++t)
    if (out.tri_area(static_cast<int>(t)) <= 0)
      throw GeometryError("deformation too large: inverted triangle");
  return out;
}

// ---------------------------------------------------------------------------
// Hausdorff distance between cavity domains
// ---------------------------------------------------------------------------

inline bool shape_contains(const CavityShape& s, const Vec2& x) {
  if (x(1) > 0) return false;
  const double r = x.norm();
  if (r == 0) return true;
  return r <= s.radius(node_angle(x));
}

inline double hausdorff_distance(const CavityShape& sa, const CavityShape& sb,
                                 int n_samples) {
  if (n_samples < 100) throw ConfigError("n_samples must be at least 100");
  auto samples = [&](const CavityShape& s) {
    std::vector<Vec2> pts;
    for (int i = 0; i <= n_samples; ++i)
      pts.push_back(s.point(M_PI * i / n_samples));
    const int n_gamma = std::max(8, n_samples / 8);
    const Vec2 e0 = s.point(M_PI), e1 = s.point(0.0);
    for (int i = 1; i < n_gamma; ++i)
      pts.push_back(e0 + (static_cast<double>(i) / n_gamma) * (e1 - e0));
    // a few interior rings
    for (int ring = 1; ring <= 8; ++ring) {
      const double f = ring / 9.0;
      for (int i = 0; i <= n_samples / 8; ++i)
        pts.push_back(f * s.point(M_PI * i / (n_samples / 8)));
    }
    return pts;
  };
  auto boundary = [&](const CavityShape& s) {
    std::vector<Vec2> pts;
    for (int i = 0; i <= n_samples; ++i)
      pts.push_back(s.point(M_PI * i / n_samples));
    const int n_gamma = std::max(8, n_samples / 8);
    const Vec2 e0 = s.point(M_PI), e1 = s.point(0.0);
    for (int i = 1; i < n_gamma; ++i)
      pts.push_back(e0 + (static_cast<double>(i) / n_gamma) * (e1 - e0));
    return pts;
  };
  auto directed = [&](const CavityShape& from, const CavityShape& to) {
    const auto pts = samples(from);
    const auto bnd = boundary(to);
    double worst = 0;
    for (const auto& x : pts) {
      if (shape_contains(to, x)) continue;
      double best = std::numeric_limits<double>::max();
      for (const auto& y : bnd) best = std::min(best, (x - y).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(sa, sb), directed(sb, sa));
}

// ---------------------------------------------------------------------------
// ASCII mesh file: "nodes N triangles T bedges B", then N "x y" lines,
// T "i j k" lines (0-based) and B "i j TAG" lines with TAG in {S, G, GC}.
// ---------------------------------------------------------------------------

inline void write_mesh(const Mesh& mesh, std::ostream& os) {
  os << "nodes " << mesh.nodes.size() << " triangles " << mesh.tris.size()
     << " bedges " << mesh.bedges.size() << "\n";
  os.precision(17);
  for (const auto& p : mesh.nodes) os << p(0) << " " << p(1) << "\n";
  for (const auto& t : mesh.tris) os << t[0] << " " << t[1] << " " << t[2] << "\n";
  for (const auto& e : mesh.bedges) {
    const char* tag = e.tag == BTag::S ? "S" : (e.tag == BTag::Gamma ? "G" : "GC");
    os << e.a << " " << e.b << " " << tag << "\n";
  }
}

inline Mesh read_mesh(std::istream& is) {
  std::string kw;
  size_t n = 0, t = 0, b = 0;
  is >> kw >> n;
  if (kw != "nodes") throw GeometryError("mesh file: expected 'nodes'");
  is >> kw >> t;
  if (kw != "triangles") throw GeometryError("mesh file: expected 'triangles'");
  is >> kw >> b;
  if (kw != "bedges") throw GeometryError("mesh file: expected 'bedges'");
  Mesh mesh;
  mesh.nodes.resize(n);
  for (auto& p : mesh.nodes) is >> p(0) >> p(1);
  mesh.tris.resize(t);
  for (auto& tr : mesh.tris) is >> tr[0] >> tr[1] >> tr[2];
  mesh.bedges.resize(b);
  for (auto& e : mesh.bedges) {
    std::string tag;
    is >> e.a >> e.b >> tag;
    if (tag == "S")
      e.tag = BTag::S;
    else if (tag == "G")
      e.tag = BTag::Gamma;
    else if (tag == "GC")
      e.tag = BTag::GammaC;
    else
      throw GeometryError("mesh file: unknown boundary tag '" + tag + "'");
  }
  if (!is) throw GeometryError("mesh file: truncated");
  mesh.validate();
  return mesh;
}

}  // namespace elcav
