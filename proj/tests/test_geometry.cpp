#include <catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "elcav/geometry.hpp"

using namespace elcav;

TEST_CASE("shape validation") {
  CHECK_NOTHROW(CavityShape::semicircle(1.0).validate());
  CHECK_NOTHROW(CavityShape::star(1.0, {0.05, -0.03}, {0.02}).validate());
  CHECK_THROWS_AS(CavityShape::star(1.0, {1.5}, {}).validate(), GeometryError);
  const CavityShape s = CavityShape::star(1.0, {0.1}, {0.05});
  CHECK(s.radius(0.0) == Catch::Approx(1.1));
  CHECK(std::abs(s.point(0.0)(1)) < 1e-15);
  CHECK(std::abs(s.point(M_PI)(1)) < 1e-15);
  // outward normal points away from the origin on a circle
  const Vec2 n = CavityShape::semicircle(1.0).outward_normal(M_PI / 3);
  const Vec2 p = CavityShape::semicircle(1.0).point(M_PI / 3);
  CHECK(n.dot(p) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("structured mesh generation") {
  const CavityShape shape = CavityShape::semicircle(1.0);
  const Mesh mesh = generate_mesh(shape, 0.1, 2.0);
  mesh.validate();
  for (const auto& p : mesh.nodes) {
    CHECK(p.squaredNorm() <= 1.0 + 1e-9);
    CHECK(p(1) <= 1e-9);
  }
  CHECK(mesh.max_edge_length() <= 1.5 * 0.1);
  CHECK(mesh.total_area() == Catch::Approx(M_PI / 2.0).epsilon(1e-2));

  SECTION("red refinement quadruples the triangle count") {
    const Mesh fine = refine(mesh);
    fine.validate();
    CHECK(fine.tris.size() == 4 * mesh.tris.size());
    CHECK(fine.refinement_level == mesh.refinement_level + 1);
  }
  SECTION("degenerate spacing and aperture are rejected") {
    CHECK_THROWS_AS(generate_mesh(shape, 0.0, 2.0), GeometryError);
    CHECK_THROWS_AS(generate_mesh(shape, 0.1, 0.5), GeometryError);
  }
  SECTION("midpoint parents reproduce linear functions exactly") {
    std::vector<std::array<int, 2>> parents;
    const Mesh fine = refine(mesh, &parents);
    for (size_t i = 0; i < fine.nodes.size(); ++i) {
      const Vec2 expect =
          0.5 * (mesh.nodes[parents[i][0]] + mesh.nodes[parents[i][1]]);
      CHECK((fine.nodes[i] - expect).norm() < 1e-15);
    }
  }
}

TEST_CASE("perturbation extension and mesh deformation") {
  const Mesh mesh = generate_mesh(CavityShape::semicircle(1.0), 0.1, 2.0);
  SECTION("zero boundary data extends to zero") {
    const ShapePerturbation p =
        extend_perturbation(mesh, [](double) { return 0.0; }, 1.0);
    for (const auto& d : p.displacement) CHECK(d.norm() == 0.0);
    const Mesh same = deform_mesh(mesh, p);
    for (size_t i = 0; i < mesh.nodes.size(); ++i)
      CHECK((same.nodes[i] - mesh.nodes[i]).norm() == 0.0);
  }
  SECTION("deepest node moves outward by the prescribed amount") {
    const ShapePerturbation p = extend_perturbation(
        mesh, [](double phi) { return std::sin(phi); }, 0.05);
    const Mesh moved = deform_mesh(mesh, p);
    // locate the boundary node closest to phi = pi/2
    int best = -1;
    double bd = 1e300;
    for (int j : mesh.tagged_nodes(BTag::S)) {
      const double d = (mesh.nodes[j] - Vec2(0, -1)).norm();
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    REQUIRE(best >= 0);
    const double dr = moved.nodes[best].norm() - mesh.nodes[best].norm();
    CHECK(dr == Catch::Approx(0.05).margin(0.004));
  }
  SECTION("interior maximum principle of the harmonic blend") {
    const ShapePerturbation p = extend_perturbation(
        mesh, [](double phi) { return std::sin(phi); }, 0.02);
    double bmax = 0;
    for (int j : mesh.tagged_nodes(BTag::S))
      bmax = std::max(bmax, p.displacement[j].norm());
    for (const auto& d : p.displacement) CHECK(d.norm() <= bmax * (1.0 + 1e-12));
    // junction corners are clamped to zero
    for (int j : mesh.junction_nodes()) CHECK(p.displacement[j].norm() == 0.0);
  }
  SECTION("extension constant is stable under refinement") {
    const ShapePerturbation p0 = extend_perturbation(
        mesh, [](double phi) { return std::sin(phi); }, 0.02);
    const ShapePerturbation p1 = extend_perturbation(
        refine(mesh), [](double phi) { return std::sin(phi); }, 0.02);
    CHECK(p0.measured_C > 0);
    CHECK(std::abs(p1.measured_C - p0.measured_C) < 0.2 * p0.measured_C);
  }
  SECTION("determinant expansion of the deformation map") {
    const ShapePerturbation p = extend_perturbation(
        mesh, [](double phi) { return std::sin(2.0 * phi); }, 0.03);
    const Mesh moved = deform_mesh(mesh, p);
    double worst = 0;
    for (size_t t = 0; t < mesh.tris.size(); ++t) {
      // per-triangle deformation gradient G with F = I + G
      const auto& tri = mesh.tris[t];
      Mat2 E0, E1;  // edge matrices before/after
      E0.col(0) = mesh.nodes[tri[1]] - mesh.nodes[tri[0]];
      E0.col(1) = mesh.nodes[tri[2]] - mesh.nodes[tri[0]];
      E1.col(0) = moved.nodes[tri[1]] - moved.nodes[tri[0]];
      E1.col(1) = moved.nodes[tri[2]] - moved.nodes[tri[0]];
      const Mat2 F = E1 * E0.inverse();
      const Mat2 G = F - Mat2::Identity();
      const double dev = std::abs(F.determinant() - 1.0 - G.trace());
      worst = std::max(worst, dev);
      CHECK(dev <= 2.0 * p.h1inf_on_mesh * p.h1inf_on_mesh + 1e-14);
    }
    CHECK(worst < 1e-2);
    // first-order inverse: applying the negated displacement returns the
    // original nodes exactly for a nodal displacement field
    ShapePerturbation back = p;
    for (auto& d : back.displacement) d = -d;
    const Mesh orig = deform_mesh(moved, back);
    for (size_t i = 0; i < mesh.nodes.size(); ++i)
      CHECK((orig.nodes[i] - mesh.nodes[i]).norm() < 1e-14);
  }
  SECTION("oversized deformation is rejected") {
    const ShapePerturbation p = extend_perturbation(
        mesh, [](double phi) { return std::sin(phi); }, -3.0);
    CHECK_THROWS_AS(deform_mesh(mesh, p), GeometryError);
  }
}

TEST_CASE("two-sided boundary distance") {
  const CavityShape c1 = CavityShape::semicircle(1.0);
  SECTION("identity and concentric circles") {
    CHECK(hausdorff_distance(c1, c1, 2000) == 0.0);
    const CavityShape c2 = CavityShape::semicircle(1.1);
    CHECK(hausdorff_distance(c1, c2, 2000) ==
          Catch::Approx(0.1).margin(1e-3));
    CHECK(hausdorff_distance(c2, c1, 2000) ==
          hausdorff_distance(c1, c2, 2000));
  }
  SECTION("small star perturbation") {
    const CavityShape s = CavityShape::star(1.0, {0.05}, {});
    const double d = hausdorff_distance(c1, s, 4000);
    CHECK(d == Catch::Approx(0.05).epsilon(0.1));
  }
  SECTION("triangle inequality on a fixed sample set") {
    const CavityShape a = CavityShape::semicircle(1.0);
    const CavityShape b = CavityShape::star(1.0, {0.04}, {});
    const CavityShape c = CavityShape::star(1.0, {0.04}, {0.03});
    const double dab = hausdorff_distance(a, b, 1000);
    const double dbc = hausdorff_distance(b, c, 1000);
    const double dac = hausdorff_distance(a, c, 1000);
    CHECK(dac <= dab + dbc + 1e-3);
  }
  SECTION("distance scales linearly with the perturbation size") {
    // profile sin(phi) has unit maximum; dist/k should track it
    for (double k : {0.02, 0.01, 0.005}) {
      const CavityShape s = CavityShape::star(1.0, {}, {k});
      const double d = hausdorff_distance(s, c1, 2000);
      CHECK(d / k == Catch::Approx(1.0).epsilon(0.2));
    }
  }
  SECTION("sample floor") {
    CHECK_THROWS_AS(hausdorff_distance(c1, c1, 50), ConfigError);
  }
}

TEST_CASE("mesh file round trip") {
  const Mesh mesh = generate_mesh(CavityShape::star(1.0, {0.05}, {0.02}), 0.2, 2.0);
  std::stringstream ss;
  write_mesh(mesh, ss);
  const Mesh back = read_mesh(ss);
  REQUIRE(back.nodes.size() == mesh.nodes.size());
  REQUIRE(back.tris.size() == mesh.tris.size());
  REQUIRE(back.bedges.size() == mesh.bedges.size());
  for (size_t i = 0; i < mesh.nodes.size(); ++i)
    CHECK((back.nodes[i] - mesh.nodes[i]).norm() < 1e-15);
  for (size_t i = 0; i < mesh.bedges.size(); ++i)
    CHECK(back.bedges[i].tag == mesh.bedges[i].tag);

  std::stringstream bad("nodes 1 triangles 0");
  CHECK_THROWS_AS(read_mesh(bad), GeometryError);
}
