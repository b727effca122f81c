// Acceptance gate: one self-contained check per release criterion, each
// printing a single PASS/FAIL line.  The process exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "elcav/forward.hpp"
#include "elcav/inverse.hpp"

using namespace elcav;

namespace {

int g_failures = 0;

void report(int n, const char* name, bool ok, double detail, double seconds) {
  std::printf("criterion %2d (%s): %s  [detail=%.3e, %.1fs]\n", n, name,
              ok ? "PASS" : "FAIL", detail, seconds);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

template <class F>
void timed(int n, const char* name, F body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  double detail = 0;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    std::printf("criterion %2d (%s): exception: %s\n", n, name, e.what());
    ok = false;
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  report(n, name, ok, detail, dt);
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  return v;
}

// Full H1 norm except that the gradient term skips triangles close to the
// wall-aperture junctions.  The solution has the usual corner singularity
// there, so the gradient error in a handful of junction triangles converges
// at a reduced rate and would mask the first-order behavior seen everywhere
// else; the L2 part stays global.
double h1_corner_excluded(const Mesh& mesh, const CVecX& v, double excl) {
  std::vector<Vec2> corners;
  for (int j : mesh.junction_nodes()) corners.push_back(mesh.nodes[j]);
  double acc = 0;
  for (const auto& t : mesh.tris) {
    const Vec2 c =
        (mesh.nodes[t[0]] + mesh.nodes[t[1]] + mesh.nodes[t[2]]) / 3.0;
    bool near = false;
    for (const Vec2& q : corners) near |= (c - q).norm() < excl;
    if (near) continue;
    Vec2 g[3];
    double area;
    detail::p1_gradients(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]],
                         g, area);
    CMat2 J = CMat2::Zero();
    for (int i = 0; i < 3; ++i) {
      const CVec2 u(v(2 * t[i]), v(2 * t[i] + 1));
      J += u * g[i].transpose().cast<Complex>();
    }
    acc += area * J.squaredNorm();
  }
  const double l2 = l2_norm(mesh, v);
  return std::sqrt(acc + l2 * l2);
}

}  // namespace

// 1. The two boundary symbols are exact inverses across the band.
static void criterion_inverse_pair() {
  timed(1, "symbol inverse pair", [](double& detail) {
    const ElasticMedium med = make_medium(1, 1, 1);
    const double delta = 1e-3 * med.k_s;
    const double xr = rayleigh_root(med);
    double worst = 0;
    int used = 0;
    for (double xi : log_spaced(1e-3 * med.k_p, 50.0 * med.k_s, 1000)) {
      if (std::abs(xi - med.k_p) < delta || std::abs(xi - med.k_s) < delta ||
          std::abs(xi - xr) < delta)
        continue;
      const SpectralKernelSample s = kernel_sample(med, xi);
      if (!s.m_inv_valid) continue;
      ++used;
      worst = std::max(worst, (s.M * s.M_inv - CMat2::Identity()).norm());
    }
    detail = worst;
    return used > 950 && worst < 1e-10;
  });
}

// 2. Above the shear band the real part of the traction symbol is
//    negative definite for a spread of media.
static void criterion_evanescent_definiteness() {
  timed(2, "evanescent definiteness", [](double& detail) {
    const std::vector<ElasticMedium> media = {
        make_medium(1, 1, 1), make_medium(2, 1, 1), make_medium(1, 2, 3),
        make_medium(0.5, 0.7, 1.3), make_medium(3, 0.4, 2)};
    double worst = 1e300;
    for (const auto& med : media) {
      const double delta = 1e-3 * med.k_s;
      for (double xi :
           log_spaced(med.k_s + delta, 50.0 * med.k_s, 200)) {
        const KernelSignReport r = sign_report(med, xi);
        worst = std::min(worst, r.re_M_negdef_margin);
      }
    }
    detail = worst;
    return worst > 0;
  });
}

// 3. The imaginary part of the inverse symbol shows the three-regime
//    structure that drives the uniqueness argument.
static void criterion_regime_structure() {
  timed(3, "three-regime structure", [](double& detail) {
    const ElasticMedium med = make_medium(1, 1, 1);
    const double delta = 1e-3 * med.k_s;
    bool ok = true;
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
      const double xi = delta + (med.k_p - 2 * delta) * (i + 0.5) / 200.0;
      const KernelSignReport r = sign_report(med, xi);
      ok &= r.im_Minv_classification == DefinitenessClass::DefiniteNegative;
    }
    for (int i = 0; i < 200; ++i) {
      const double xi =
          med.k_p + delta + (med.k_s - med.k_p - 2 * delta) * (i + 0.5) / 200.0;
      const KernelSignReport r = sign_report(med, xi);
      ok &= r.a1 < 0;
      ok &= std::abs(r.det_im_Minv) < 1e-8;
      const double dres =
          std::max({std::abs(r.d1), std::abs(r.d2), std::abs(r.d3)});
      worst = std::max(worst, dres);
      ok &= dres < 1e-10;
    }
    for (double xi : log_spaced(med.k_s + delta, 50.0 * med.k_s, 200)) {
      const KernelSignReport r = sign_report(med, xi);
      ok &= r.im_Minv_classification == DefinitenessClass::Zero;
    }
    detail = worst;
    return ok;
  });
}

// 4. Reflected plane waves cancel the ground data for both wall conditions.
static void criterion_reflection() {
  timed(4, "ground reflection", [](double& detail) {
    const ElasticMedium med = make_medium(1, 1, 1);
    const Vec2 nrm(0, 1);
    double worst = 0;
    for (int a = 0; a < 10; ++a) {
      const double theta = -1.35 + 2.7 * a / 9.0;
      const auto cfg =
          make_incidence(med, theta, Complex(1.0, 0.2), Complex(0.6, -0.3));
      const PlaneWaveField inc = incident_field(med, cfg);
      const PlaneWaveField d = ground_field(med, cfg, BoundaryKind::Dirichlet);
      const PlaneWaveField n = ground_field(med, cfg, BoundaryKind::Neumann);
      double scale_u = 0, scale_t = 0;
      for (int i = 0; i < 50; ++i) {
        const Vec2 x(-5.0 + 10.0 * i / 49.0, 0.0);
        scale_u = std::max(scale_u, inc.value(x).norm());
        scale_t = std::max(scale_t, inc.traction(x, nrm).norm());
      }
      for (int i = 0; i < 50; ++i) {
        const Vec2 x(-5.0 + 10.0 * i / 49.0, 0.0);
        worst = std::max(worst, d.value(x).norm() / scale_u);
        worst = std::max(worst, n.traction(x, nrm).norm() / scale_t);
      }
    }
    detail = worst;
    return worst < 1e-10;
  });
}

// 5. Self-convergence of the forward solver under uniform refinement.
static void criterion_convergence() {
  timed(5, "mesh self-convergence", [](double& detail) {
    const ElasticMedium med = make_medium(1, 1, 1);
    const auto cfg = make_incidence(med, M_PI / 6);
    std::vector<Mesh> meshes;
    std::vector<std::vector<std::array<int, 2>>> parents;
    meshes.push_back(generate_mesh(CavityShape::semicircle(1.0), 0.6, 2.0));
    for (int l = 0; l < 3; ++l) {
      std::vector<std::array<int, 2>> p;
      meshes.push_back(refine(meshes.back(), &p));
      parents.push_back(std::move(p));
    }
    bool ok = true;
    double worst_ratio = 1e300;
    for (BoundaryKind bc : {BoundaryKind::Dirichlet, BoundaryKind::Neumann}) {
      std::vector<CVecX> sols;
      for (const Mesh& m : meshes)
        sols.push_back(bc == BoundaryKind::Dirichlet
                           ? solve_dirichlet(med, cfg, m).field.values
                           : solve_neumann(med, cfg, m).field.values);
      // prolong every level to the finest mesh
      std::vector<CVecX> on_finest(4);
      on_finest[3] = sols[3];
      for (int l = 2; l >= 0; --l) {
        CVecX v = sols[l];
        for (int step = l; step < 3; ++step) v = prolong(v, parents[step]);
        on_finest[l] = v;
      }
      std::vector<double> err;
      for (int l = 0; l < 3; ++l)
        err.push_back(
            h1_corner_excluded(meshes[3], on_finest[l] - on_finest[3], 0.25));
      for (int l = 0; l + 1 < 3; ++l) {
        const double r = err[l] / std::max(err[l + 1], 1e-300);
        worst_ratio = std::min(worst_ratio, r);
        ok &= r >= 1.8;
      }
    }
    detail = worst_ratio;
    return ok;
  });
}

// 6. The two independent computations of the radiated power agree, and the
//    agreement improves when the band quadrature is refined.
static void criterion_flux_balance() {
  timed(6, "radiated power balance", [](double& detail) {
    const ElasticMedium med = make_medium(1, 1, 1);
    const auto cfg = make_incidence(med, M_PI / 6);
    const Mesh mesh = generate_mesh(CavityShape::semicircle(1.0), 0.08, 2.0);
    const ForwardSolution sol = solve_dirichlet(med, cfg, mesh);
    const double crude = flux_balance(sol, 4, 2);
    const double base = flux_balance(sol, 16, 10);
    const double fine = flux_balance(sol, 32, 12);
    detail = base;
    return base < 0.02 && base < crude && fine < crude;
  });
}

// 7. Shrinking the cavity depth to zero shrinks the scattered field.
static void criterion_shallow_limit() {
  timed(7, "shallow cavity limit", [](double& detail) {
    const ElasticMedium med = make_medium(1, 1, 1);
    const auto cfg = make_incidence(med, M_PI / 6);
    const Mesh base = generate_mesh(CavityShape::semicircle(1.0), 0.1, 2.0);
    const PlaneWaveField h = ground_field(med, cfg, BoundaryKind::Dirichlet);
    std::vector<double> norms;
    for (double s : {0.2, 0.1, 0.05}) {
      Mesh squashed = base;
      for (auto& p : squashed.nodes) p(1) *= s;
      const ForwardSolution sol = solve_dirichlet(med, cfg, squashed);
      CVecX us(2 * squashed.nodes.size());
      for (size_t i = 0; i < squashed.nodes.size(); ++i) {
        const CVec2 v = sol.field.at(static_cast<int>(i)) -
                        h.value(squashed.nodes[i]);
        us(2 * i) = v(0);
        us(2 * i + 1) = v(1);
      }
      norms.push_back(l2_norm(squashed, us));
    }
    detail = norms.back();
    return norms[0] > norms[1] && norms[1] > norms[2];
  });
}

// 8. Difference quotients of the boundary measurements converge to the
//    computed shape derivative at the first-order rate.
static void criterion_derivative_windows() {
  timed(8, "shape derivative rate", [](double& detail) {
    const ElasticMedium med = make_medium(1, 1, 4);
    const auto cfg = make_incidence(med, M_PI / 6);
    const Mesh mesh = generate_mesh(CavityShape::semicircle(1.0), 0.02, 2.0);
    const std::vector<double> ts = {0.02, 0.01, 0.005};
    bool ok = true;
    double worst = 0;
    for (BoundaryKind bc : {BoundaryKind::Dirichlet, BoundaryKind::Neumann}) {
      const double lo = bc == BoundaryKind::Dirichlet ? 1.5 : 1.4;
      const double hi = bc == BoundaryKind::Dirichlet ? 2.5 : 2.6;
      for (int prof = 1; prof <= 2; ++prof) {
        const FdCheck chk = frechet_fd_check(
            med, cfg, mesh, bc,
            [prof](double phi) { return std::sin(prof * phi); }, ts);
        for (double r : chk.ratios) {
          ok &= (r >= lo && r <= hi);
          worst = std::max(worst, std::abs(r - 2.0));
        }
      }
    }
    detail = worst;
    return ok;
  });
}

// 9. The local stability quotient stays within a bounded spread as the
//    perturbation size decreases.
static void criterion_stability() {
  timed(9, "local stability spread", [](double& detail) {
    const ElasticMedium med = make_medium(1, 1, 1);
    const auto cfg = make_incidence(med, M_PI / 6);
    StarPerturbation p;
    p.b = {1.0};
    const auto rows = local_stability_experiment(
        med, cfg, CavityShape::semicircle(1.0), p, {0.02, 0.01, 0.005}, 0.15,
        2.0);
    double lo = 1e300, hi = 0;
    int used = 0;
    for (const auto& r : rows) {
      if (r.skipped) continue;
      ++used;
      lo = std::min(lo, r.ratio);
      hi = std::max(hi, r.ratio);
    }
    detail = used ? hi / lo : 0.0;
    return used == 3 && hi / lo < 3.0;
  });
}

// 10. Gradient descent on the aperture data recovers the star coefficients.
static void criterion_reconstruction() {
  timed(10, "shape reconstruction", [](double& detail) {
    const ElasticMedium med = make_medium(1, 1, 1);
    const auto cfg = make_incidence(med, M_PI / 6);
    const CavityShape target = CavityShape::star(1.0, {0.05, -0.03}, {0.02});
    const Mesh dmesh = generate_mesh(target, 0.08, 2.0);
    const TraceData data = make_trace_data(solve_dirichlet(med, cfg, dmesh));
    ReconstructionOptions opts;
    opts.n_cos = 2;
    opts.n_sin = 1;
    opts.max_iter = 50;
    opts.target_h = 0.15;
    const ReconstructionState st =
        reconstruct(med, cfg, data, CavityShape::semicircle(1.0), opts);
    double err2 = 0;
    err2 += (st.a[0] - 0.05) * (st.a[0] - 0.05);
    err2 += (st.a[1] + 0.03) * (st.a[1] + 0.03);
    err2 += (st.b[0] - 0.02) * (st.b[0] - 0.02);
    const double mag =
        std::sqrt(0.05 * 0.05 + 0.03 * 0.03 + 0.02 * 0.02);
    detail = std::sqrt(err2) / mag;
    return std::sqrt(err2) < 0.05 * mag && st.iterations <= 50;
  });
}

int main() {
  criterion_inverse_pair();
  criterion_evanescent_definiteness();
  criterion_regime_structure();
  criterion_reflection();
  criterion_convergence();
  criterion_flux_balance();
  criterion_shallow_limit();
  criterion_derivative_windows();
  criterion_stability();
  criterion_reconstruction();
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures;
}
