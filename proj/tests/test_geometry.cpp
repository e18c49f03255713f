#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nearcloak/geometry.hpp"
#include "nearcloak/quadrature.hpp"
#include "nearcloak/special_functions.hpp"

using namespace nearcloak;

TEST_CASE("icosahedron combinatorics") {
  const SurfaceMesh m = make_sphere_mesh(1.0, 0);
  CHECK(m.vertices.size() == 12);
  CHECK(m.triangles.size() == 20);
  for (int r = 1; r <= 3; ++r) {
    const SurfaceMesh mr = make_sphere_mesh(1.0, r);
    CHECK(mr.triangles.size() == 20u * (1u << (2 * r)));
    CHECK(mr.vertices.size() == 10u * (1u << (2 * r)) + 2u);
    CHECK_NOTHROW(validate_mesh(mr));
  }
}

TEST_CASE("refined vertex sets are nested") {
  const SurfaceMesh a = make_sphere_mesh(1.0, 2), b = make_sphere_mesh(1.0, 3);
  for (std::size_t i = 0; i < a.vertices.size(); ++i) CHECK((a.vertices[i] - b.vertices[i]).norm() < 1e-15);
}

TEST_CASE("sphere area and integrals") {
  const SurfaceMesh m = make_sphere_mesh(1.0, 3);
  CHECK(std::abs(m.quad.total_weight() - 4 * pi) < 0.01 * 4 * pi);
  CHECK(std::abs(integrate_scalar(m, [](const Vec3&) { return cplx(1.0); }) - 4 * pi) < 0.01 * 4 * pi);
  CHECK(std::abs(integrate_scalar(m, [](const Vec3& x) { return cplx(x.x()); })) < 1e-12);
  const cplx y10 = integrate_scalar(m, [](const Vec3& x) {
    const double y = real_harmonics(1, x).value[sh_index(1, 0)];
    return cplx(y * y);
  });
  CHECK(std::abs(y10 - 1.0) < 1e-3);
  for (double w : m.quad.weights) CHECK(w > 0.0);
}

TEST_CASE("outward unit normals") {
  const SurfaceMesh m = make_sphere_mesh(2.0, 2);
  for (std::size_t k = 0; k < m.quad.size(); ++k) {
    CHECK(m.quad.normals[k].dot(m.quad.nodes[k]) > 0.0);
    CHECK(std::abs(m.quad.normals[k].norm() - 1.0) < 1e-14);
  }
}

TEST_CASE("area error decreases monotonically as O(h^2)") {
  // Flat-panel quadrature exposes the geometric error.
  double prev = 1e9;
  for (int r = 1; r <= 3; ++r) {
    SurfaceMesh m = make_sphere_mesh(1.0, r);
    SurfaceMesh flat = make_polyhedral_mesh(m.vertices, m.triangles);
    const double err = std::abs(flat.quad.total_weight() - 4 * pi);
    CHECK(err < prev);
    if (r > 1) CHECK(prev / err > 3.5);
    prev = err;
  }
}

TEST_CASE("scale_mesh") {
  const SurfaceMesh m = make_sphere_mesh(1.0, 2);
  const SurfaceMesh same = scale_mesh(m, 1.0);
  for (std::size_t k = 0; k < m.quad.size(); ++k) CHECK(same.quad.nodes[k] == m.quad.nodes[k]);
  const SurfaceMesh half = scale_mesh(m, 0.5);
  CHECK(half.quad.total_weight() == doctest::Approx(0.25 * m.quad.total_weight()).epsilon(1e-14));
  CHECK(half.nominal_radius == 0.5);
  const SurfaceMesh back = scale_mesh(scale_mesh(m, 0.3), 1.0 / 0.3);
  const SurfaceMesh ab = scale_mesh(scale_mesh(m, 0.3), 0.7), direct = scale_mesh(m, 0.21);
  for (std::size_t k = 0; k < m.quad.size(); ++k) {
    CHECK((back.quad.nodes[k] - m.quad.nodes[k]).norm() < 1e-15);
    CHECK((ab.quad.nodes[k] - direct.quad.nodes[k]).norm() < 1e-15);
    CHECK(back.quad.normals[k] == m.quad.normals[k]);
  }
  CHECK_THROWS(scale_mesh(m, 0.0));
}

TEST_CASE("mesh errors") {
  CHECK_THROWS_AS(make_sphere_mesh(1.0, max_sphere_refinement + 1), Error);
  try {
    make_sphere_mesh(1.0, 20);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::resource);
  }
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  std::vector<std::array<int, 3>> open = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}};
  CHECK_THROWS_AS(make_polyhedral_mesh(v, open), Error);
  std::vector<Vec3> flat = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 0, 1}};
  std::vector<std::array<int, 3>> tet = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};
  try {
    make_polyhedral_mesh(flat, tet);
    FAIL("expected a mesh error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::mesh);
  }
}

TEST_CASE("OFF round trip") {
  const SurfaceMesh m = make_sphere_mesh(1.5, 1);
  std::stringstream ss;
  write_off(ss, m);
  const SurfaceMesh r = read_off(ss);
  REQUIRE(r.vertices.size() == m.vertices.size());
  REQUIRE(r.triangles.size() == m.triangles.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK((r.vertices[i] - m.vertices[i]).norm() < 1e-15);
  CHECK(r.triangles == m.triangles);
}

TEST_CASE("quadrature rules") {
  const Rule1D g = gauss_legendre(7, 0.0, 2.0);
  double s = 0.0;
  for (int i = 0; i < 7; ++i) s += g.weights[i] * std::pow(g.nodes[i], 13);
  CHECK(s == doctest::Approx(std::pow(2.0, 14) / 14).epsilon(1e-13));
  for (int deg : {1, 2, 4, 5}) {
    const TriangleRule& r = triangle_rule(deg);
    // integral of l1^a l2^b over the unit-area reference = 2 a! b! / (a+b+2)!
    for (int a = 0; a <= deg; ++a) {
      for (int b = 0; a + b <= deg; ++b) {
        double q = 0.0;
        for (std::size_t k = 0; k < r.weights.size(); ++k) q += r.weights[k] * std::pow(r.bary[k][0], a) * std::pow(r.bary[k][1], b);
        const double exact = 2.0 * std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
        CHECK(q == doctest::Approx(exact).epsilon(1e-12));
      }
    }
  }
  const TriangleRule d = duffy_rule(6);
  double q = 0.0;
  for (std::size_t k = 0; k < d.weights.size(); ++k) q += d.weights[k] * d.bary[k][1] * d.bary[k][2];
  CHECK(q == doctest::Approx(2.0 / 24).epsilon(1e-13));
}

TEST_CASE("sphere grid exactness") {
  const SurfaceQuadrature g = make_sphere_grid_for_degree(2.0, 6);
  CHECK(g.total_weight() == doctest::Approx(16 * pi).epsilon(1e-13));
  const int N = 6;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(sh_count(N), sh_count(N));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const HarmonicSample h = real_harmonics(N, g.nodes[k]);
    for (int i = 0; i < sh_count(N); ++i)
      for (int j = 0; j < sh_count(N); ++j) gram(i, j) += g.weights[k] / 4.0 * h.value[i] * h.value[j];
  }
  CHECK((gram - Eigen::MatrixXd::Identity(sh_count(N), sh_count(N))).norm() < 1e-12);
}
