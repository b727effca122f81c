#include <catch_amalgamated.hpp>
#include <cmath>

#include "elcav/inverse.hpp"

using namespace elcav;

TEST_CASE("aperture half-order norm") {
  const ElasticMedium med = make_medium(1, 1, 1);
  const Mesh mesh = generate_mesh(CavityShape::semicircle(1.0), 0.15, 2.0);
  const GammaGeometry gg = gamma_geometry(mesh);
  const QuadratureGrid grid = make_kernel_grid(med);
  const int m = gg.interior_count();
  CHECK(gamma_h_half_norm(gg, grid, CVecX::Zero(2 * m)) == 0.0);
  const CVecX v = CVecX::Random(2 * m);
  const double nv = gamma_h_half_norm(gg, grid, v);
  CHECK(nv > 0);
  CHECK(gamma_h_half_norm(gg, grid, 3.0 * v) ==
        Catch::Approx(3.0 * nv).epsilon(1e-12));
  const CVecX w = CVecX::Random(2 * m);
  CHECK(gamma_h_half_norm(gg, grid, v + w) <=
        nv + gamma_h_half_norm(gg, grid, w) + 1e-12);
}

TEST_CASE("derivative fields are linear in the wall perturbation") {
  const ElasticMedium med = make_medium(1, 1, 1);
  const Mesh mesh = generate_mesh(CavityShape::semicircle(1.0), 0.15, 2.0);
  const auto cfg = make_incidence(med, M_PI / 6);
  const ForwardSolution base = solve_dirichlet(med, cfg, mesh);

  const ShapePerturbation zero =
      extend_perturbation(mesh, [](double) { return 0.0; }, 1.0);
  const ShapePerturbation p1 = extend_perturbation(
      mesh, [](double phi) { return std::sin(phi); }, 1.0);
  const ShapePerturbation p2 = extend_perturbation(
      mesh, [](double phi) { return std::sin(2.0 * phi); }, 1.0);
  const ShapePerturbation p12 = extend_perturbation(
      mesh, [](double phi) { return std::sin(phi) + std::sin(2.0 * phi); },
      1.0);

  SECTION("rigid wall") {
    CHECK(frechet_dirichlet(base, zero).gamma_trace.norm() == 0.0);
    const CVecX t1 = frechet_dirichlet(base, p1).gamma_trace;
    const CVecX t2 = frechet_dirichlet(base, p2).gamma_trace;
    const CVecX t12 = frechet_dirichlet(base, p12).gamma_trace;
    CHECK((t12 - t1 - t2).norm() < 1e-9 * (t1.norm() + t2.norm()));
  }
  SECTION("traction-free wall") {
    const ForwardSolution nb = solve_neumann(med, cfg, mesh);
    CHECK(frechet_neumann(nb, zero).gamma_trace.norm() == 0.0);
    const CVecX t1 = frechet_neumann(nb, p1).gamma_trace;
    const CVecX t2 = frechet_neumann(nb, p2).gamma_trace;
    const CVecX t12 = frechet_neumann(nb, p12).gamma_trace;
    CHECK((t12 - t1 - t2).norm() < 1e-9 * (t1.norm() + t2.norm()));
  }
  SECTION("interior trace vector matches the field") {
    const CVecX tr = gamma_trace_vector(base.gamma(), base.field);
    for (int j = 0; j < base.gamma().interior_count(); ++j) {
      const CVec2 v = base.field.at(base.gamma().interior_node(j));
      CHECK(tr(2 * j) == v(0));
      CHECK(tr(2 * j + 1) == v(1));
    }
  }
}

TEST_CASE("wall derivative load with constant data") {
  const ElasticMedium med = make_medium(1.4, 0.9, 1.2);
  const Mesh mesh = generate_mesh(CavityShape::semicircle(1.0), 0.2, 2.0);
  const int n = static_cast<int>(mesh.nodes.size());
  // constant field, zero gradient, constant displacement direction: only the
  // zeroth-order term survives and it reduces to a weighted boundary load
  const CVec2 u0(Complex(1.0, 0.5), Complex(-0.4, 0.2));
  CVecX total(2 * n);
  for (int i = 0; i < n; ++i) {
    total(2 * i) = u0(0);
    total(2 * i + 1) = u0(1);
  }
  const std::vector<CMat2> J(n, CMat2::Zero());
  const Vec2 d(0.3, -0.8);
  const std::vector<Vec2> disp(n, d);
  const CVecX rhs = detail::assemble_shape_load(mesh, med, total, J, disp, 2 * n);

  CVecX load = CVecX::Zero(2 * n);
  accumulate_boundary_load(
      mesh, BTag::S,
      [&](const Vec2&, const Vec2& nrm) {
        const double hn = d.dot(nrm);
        return CVec2(Complex(hn, 0), Complex(hn, 0));
      },
      load);
  const double w2 = med.omega * med.omega;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c)
      CHECK(std::abs(rhs(2 * i + c) - w2 * u0(c) * load(2 * i)) < 1e-13);
}

TEST_CASE("difference-quotient validation runs and reports finite errors") {
  const ElasticMedium med = make_medium(1, 1, 1);
  const Mesh mesh = generate_mesh(CavityShape::semicircle(1.0), 0.25, 2.0);
  const auto cfg = make_incidence(med, M_PI / 6);
  const FdCheck chk = frechet_fd_check(
      med, cfg, mesh, BoundaryKind::Dirichlet,
      [](double phi) { return std::sin(phi); }, {0.04, 0.02});
  REQUIRE(chk.error.size() == 2);
  REQUIRE(chk.ratios.size() == 1);
  CHECK(chk.error[0] > 0);
  CHECK(std::isfinite(chk.error[1]));
  CHECK(chk.ratios[0] > 0);
}

TEST_CASE("stability experiment bookkeeping") {
  const ElasticMedium med = make_medium(1, 1, 1);
  const auto cfg = make_incidence(med, M_PI / 6);
  const CavityShape shape = CavityShape::semicircle(1.0);
  StarPerturbation p;
  p.b = {1.0};  // sin(phi) profile
  const auto rows =
      local_stability_experiment(med, cfg, shape, p, {0.0, 0.02}, 0.2, 2.0);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].skipped);
  CHECK(rows[0].note == "zero perturbation");
  CHECK_FALSE(rows[1].skipped);
  CHECK(rows[1].dist == Catch::Approx(0.02).epsilon(0.3));
  CHECK(rows[1].trace_diff > 0);
  CHECK(rows[1].ratio == Catch::Approx(rows[1].dist / rows[1].trace_diff)
                             .epsilon(1e-12));
}

TEST_CASE("star coefficient arithmetic") {
  const CavityShape base = CavityShape::star(1.0, {0.05}, {});
  StarPerturbation p;
  p.a = {0.01, 0.02};
  p.b = {0.03};
  const CavityShape out = p.applied_to(base, 2.0);
  REQUIRE(out.a.size() == 2);
  REQUIRE(out.b.size() == 1);
  CHECK(out.a[0] == Catch::Approx(0.07).epsilon(1e-14));
  CHECK(out.a[1] == Catch::Approx(0.04).epsilon(1e-14));
  CHECK(out.b[0] == Catch::Approx(0.06).epsilon(1e-14));
  CHECK(out.r0 == 1.0);
}

TEST_CASE("objective gradient against central differences") {
  const ElasticMedium med = make_medium(1, 1, 1);
  const auto cfg = make_incidence(med, M_PI / 6);
  // data measured on a slightly perturbed cavity, evaluated at the unperturbed
  // initial shape where the residual (and thus the gradient) is nonzero
  const CavityShape target = CavityShape::star(1.0, {0.1}, {});
  const Mesh dmesh = generate_mesh(target, 0.08, 2.0);
  const TraceData data = make_trace_data(solve_dirichlet(med, cfg, dmesh));
  // The analytic gradient and the re-meshed difference quotient carry
  // different discretization errors, so they only agree in the fine-mesh
  // limit: with the data held fixed, require the matching sign at every
  // resolution and a shrinking relative gap under refinement.
  std::vector<double> rel;
  for (double h : {0.2, 0.1}) {
    ReconstructionOptions opts;
    opts.n_cos = 1;
    opts.n_sin = 0;
    opts.target_h = h;
    const CavityShape at = CavityShape::semicircle(1.0);
    const auto ev = detail::evaluate_objective(med, cfg, at, data, opts, true);
    REQUIRE(ev.grad.size() == 1);

    const double eps = 1e-3;
    auto value_at = [&](double a1) {
      const CavityShape s = CavityShape::star(1.0, {a1}, {});
      return detail::evaluate_objective(med, cfg, s, data, opts, false).value;
    };
    const double fd = (value_at(eps) - value_at(-eps)) / (2.0 * eps);
    CHECK(ev.grad[0] * fd > 0);  // descent direction agrees
    rel.push_back(std::abs(ev.grad[0] - fd) / std::abs(fd));
  }
  CHECK(rel[1] < rel[0]);
}

TEST_CASE("reconstruction is a fixed point on consistent data") {
  const ElasticMedium med = make_medium(1, 1, 1);
  const auto cfg = make_incidence(med, M_PI / 6);
  const CavityShape shape = CavityShape::semicircle(1.0);
  ReconstructionOptions opts;
  opts.target_h = 0.2;
  opts.max_iter = 3;
  // measure the data on the exact mesh the objective will use for this shape
  // so the initial residual vanishes identically
  const Mesh dmesh = refine(generate_mesh(shape, opts.target_h, opts.gamma_extent));
  const TraceData data = make_trace_data(solve_dirichlet(med, cfg, dmesh));
  const ReconstructionState st = reconstruct(med, cfg, data, shape, opts);
  CHECK(st.converged);
  CHECK(st.iterations == 0);
  CHECK(st.objective < 1e-18);
  for (double a : st.a) CHECK(std::abs(a) < 1e-12);
  for (double b : st.b) CHECK(std::abs(b) < 1e-12);
}
