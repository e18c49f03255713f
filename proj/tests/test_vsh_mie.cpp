#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "nearcloak/mie.hpp"
#include "nearcloak/special_functions.hpp"
#include "nearcloak/vsh.hpp"

using namespace nearcloak;

namespace {

using Field = std::function<CVec3(const Vec3&)>;

CVec3 fd_curl(const Field& F, const Vec3& x, double h) {
  CVec3 d[3];
  for (int c = 0; c < 3; ++c) {
    Vec3 e = Vec3::Zero();
    e[c] = h;
    d[c] = (F(x + e) - F(x - e)) / (2 * h);
  }
  return CVec3(d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]);
}

std::vector<Vec3> test_points(double r) {
  return {r * Vec3(0.3, -0.5, 0.8).normalized(), r * Vec3(-0.9, 0.2, 0.1).normalized(),
          r * Vec3(0.1, 0.1, -1.0).normalized()};
}

// nu ^ (p e^{i w d.x}) sampled on a sphere quadrature.
TangentialTrace plane_wave_trace(const SurfaceQuadrature& q, const Vec3& d, const Vec3& p, double w, double sign) {
  TangentialTrace t;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const CVec3 E = p.cast<cplx>() * std::exp(imag_unit * w * d.dot(q.nodes[k]));
    t.values.push_back(sign * cross(q.normals[k], E));
  }
  return t;
}

LayeredSphereSpec three_layer(double omega) {
  LayeredSphereSpec s;
  s.omega = omega;
  s.layers = {{0.3, 4.0, 1.5, 2.0}, {0.6, 1.0, 1.0, 25.0}, {2.0, 1.0, 1.0, 0.0}};
  return s;
}

}  // namespace

TEST_CASE("VSH basis analysis") {
  const SurfaceQuadrature g = make_sphere_grid_for_degree(1.0, 4);
  TangentialTrace t;
  for (const Vec3& x : g.nodes) t.values.push_back(vsh_gradient_basis(1, 0, x).cast<cplx>());
  VshExpansion e = vsh_analyze(g, t, 4);
  VshExpansion expect = VshExpansion::zero(4);
  expect.a[vsh_index(1, 0)] = 1.0;
  CHECK((e.flat() - expect.flat()).norm() < 1e-13);

  t.values.clear();
  for (std::size_t k = 0; k < g.size(); ++k) {
    t.values.push_back(g.normals[k].cross(vsh_gradient_basis(2, 1, g.nodes[k])).cast<cplx>());
  }
  e = vsh_analyze(g, t, 4);
  expect = VshExpansion::zero(4);
  expect.b[vsh_index(2, 1)] = -1.0;  // nu ^ grad = -(grad ^ nu)
  CHECK((e.flat() - expect.flat()).norm() < 1e-13);
}

TEST_CASE("VSH round trip and tangency check") {
  for (double R : {1.0, 2.0}) {
    const int N = 7;
    const SurfaceQuadrature g = make_sphere_grid_for_degree(R, N);
    const VshExpansion e = random_vsh(N, 42);
    const VshExpansion back = vsh_analyze(g, vsh_synthesize_trace(e, g), N);
    CHECK((back.flat() - e.flat()).norm() < 1e-10 * e.flat().norm());
    TangentialTrace bad = vsh_synthesize_trace(e, g);
    bad.values[3] += g.normals[3].cast<cplx>();
    CHECK_THROWS_AS(vsh_analyze(g, bad, N), Error);
  }
  CHECK(VshExpansion::zero(12).flat().size() == 2 * 12 * 14);
}

TEST_CASE("surface divergence matches finite differences of the homogeneous extension") {
  const double R = 1.5;
  const VshExpansion e = random_vsh(4, 7);
  const double h = 1e-5;
  for (const Vec3& x : test_points(R)) {
    auto ext = [&](const Vec3& p) { return vsh_synthesize(e, {R * p.normalized()})[0]; };
    cplx div = 0.0;
    for (int c = 0; c < 3; ++c) {
      Vec3 d = Vec3::Zero();
      d[c] = h;
      div += (ext(x + d)[c] - ext(x - d)[c]) / (2 * h);
    }
    CHECK(std::abs(div - vsh_divergence(e, {x})[0]) < 1e-6 * std::max(1.0, std::abs(div)));
  }
}

TEST_CASE("vacuum ball reproduces a plane wave and its admittance") {
  const double w = 1.0, R = 2.0;
  const int N = 20;
  const Vec3 d = Vec3(0.2, 0.3, 1.0).normalized();
  const Vec3 p = d.cross(Vec3(1, 0, 0)).normalized();
  const SurfaceQuadrature g = make_sphere_grid_for_degree(R, N);
  const VshExpansion psi = vsh_analyze(g, plane_wave_trace(g, d, p, w, 1.0), N);
  const LayeredSolution sol = solve_layered_sphere(LayeredSphereSpec::vacuum_ball(R, w), psi);
  for (double r : {0.3, 1.1, 1.9}) {
    for (const Vec3& x : test_points(r)) {
      const cplx ph = std::exp(imag_unit * w * d.dot(x));
      CHECK((sol.E(x) - p.cast<cplx>() * ph).norm() < 1e-10);
      CHECK((sol.H(x) - d.cross(p).cast<cplx>() * ph).norm() < 1e-10);
    }
  }
  // Lambda_0 maps nu^E to nu^H of the plane wave.
  TangentialTrace th;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const CVec3 H = d.cross(p).cast<cplx>() * std::exp(imag_unit * w * d.dot(g.nodes[k]));
    th.values.push_back(cross(g.normals[k], H));
  }
  const VshExpansion lam = vsh_analyze(g, th, N);
  CHECK((admittance_sphere(LayeredSphereSpec::vacuum_ball(R, w), N).apply(psi).flat() - lam.flat()).norm() < 1e-10);
  CHECK((sol.magnetic_trace().flat() - lam.flat()).norm() < 1e-10);
}

TEST_CASE("layered sphere: Maxwell equations, continuity and boundary data") {
  const LayeredSphereSpec spec = three_layer(1.0);
  const int N = 5;
  const VshExpansion psi = random_vsh(N, 3);
  const LayeredSolution sol = solve_layered_sphere(spec, psi);
  const double h = 1e-5;
  for (double r : {0.15, 0.45, 1.3}) {
    const std::size_t l = spec.layer_of(r);
    const Layer& L = spec.layers[l];
    const cplx eps_c(L.eps, L.sigma / spec.omega);
    for (const Vec3& x : test_points(r)) {
      const CVec3 E = sol.E(x), H = sol.H(x);
      const CVec3 cE = fd_curl([&](const Vec3& y) { return sol.E(y); }, x, h);
      const CVec3 cH = fd_curl([&](const Vec3& y) { return sol.H(y); }, x, h);
      const double scale = E.norm() + H.norm();
      CHECK((cE - imag_unit * spec.omega * L.mu * H).norm() < 1e-6 * scale);
      CHECK((cH + imag_unit * spec.omega * eps_c * E).norm() < 1e-6 * scale);
    }
  }
  for (std::size_t l = 0; l + 1 < spec.layers.size(); ++l) {
    const double r = spec.layers[l].outer_radius;
    for (const Vec3& u : test_points(1.0)) {
      const Vec3 xi = u * r * (1 - 1e-13), xo = u * r * (1 + 1e-13);
      const CVec3 dE = cross(u, sol.E(xi)) - cross(u, sol.E(xo));
      const CVec3 dH = cross(u, sol.H(xi)) - cross(u, sol.H(xo));
      CHECK(dE.norm() < 1e-10 * sol.E(xo).norm());
      CHECK(dH.norm() < 1e-10 * sol.H(xo).norm());
    }
  }
  const SurfaceQuadrature g = make_sphere_grid_for_degree(2.0, N);
  TangentialTrace te, th;
  for (std::size_t k = 0; k < g.size(); ++k) {
    te.values.push_back(cross(g.normals[k], sol.E(g.nodes[k])));
    th.values.push_back(cross(g.normals[k], sol.H(g.nodes[k])));
  }
  CHECK((vsh_analyze(g, te, N).flat() - psi.flat()).norm() < 1e-10 * psi.flat().norm());
  CHECK((vsh_analyze(g, th, N).flat() - sol.magnetic_trace().flat()).norm() < 1e-10 * psi.flat().norm());
}

TEST_CASE("admittance structure and vacuum consistency") {
  const int N = 6;
  const AdmittanceMatrix L0 = admittance_sphere(LayeredSphereSpec::vacuum_ball(2.0, 1.0), N);
  const AdmittanceMatrix L0b = admittance_sphere(LayeredSphereSpec::vacuum_ball(2.0, 1.0), N);
  CHECK((L0.matrix - L0b.matrix).norm() == 0.0);
  LayeredSphereSpec split;
  split.omega = 1.0;
  split.layers = {{0.2, 1, 1, 0}, {0.7, 1, 1, 0}, {2.0, 1, 1, 0}};
  CHECK((admittance_sphere(split, N).matrix - L0.matrix).norm() < 1e-12 * L0.matrix.norm());
  const AdmittanceMatrix L = admittance_sphere(three_layer(1.0), N);
  const int K = vsh_mode_count(N);
  for (int i = 0; i < 2 * K; ++i) {
    for (int j = 0; j < 2 * K; ++j) {
      const bool pair = (j == (i + K) % (2 * K));
      if (!pair) CHECK(L.matrix(i, j) == cplx(0.0));
    }
  }
  const BesselTable t(N, 2.0);
  for (int n = 1; n <= N; ++n) {
    const int i = vsh_index(n, 0);
    CHECK(std::abs(L0.matrix(K + i, i) - imag_unit * t.dpsi(n) / t.psi(n)) < 1e-13);
    CHECK(std::abs(L0.matrix(i, K + i) - imag_unit * t.psi(n) / t.dpsi(n)) < 1e-13);
  }
}

TEST_CASE("PEC-core layered sphere equals the two-sphere vacuum annulus with zero inner trace") {
  LayeredSphereSpec pec;
  pec.omega = 1.0;
  pec.pec_radius = 0.4;
  pec.layers = {{2.0, 1, 1, 0}};
  const int N = 5;
  const VshExpansion psi = random_vsh(N, 11);
  const LayeredSolution a = solve_layered_sphere(pec, psi);
  const VacuumAnnulusField b(0.4, 2.0, 1.0, VshExpansion::zero(N), psi);
  CHECK((a.magnetic_trace().flat() - b.magnetic_trace_outer().flat()).norm() < 1e-10 * psi.flat().norm());
  for (const Vec3& x : test_points(1.0)) CHECK((a.E(x) - b.E(x)).norm() < 1e-10);
  for (const Vec3& u : test_points(1.0)) CHECK(cross(u, a.E(0.4 * u)).norm() < 1e-12);
}

TEST_CASE("vacuum annulus: traces and Maxwell residual") {
  const int N = 4;
  const VshExpansion fin = random_vsh(N, 5), fout = random_vsh(N, 6);
  const VacuumAnnulusField f(0.3, 2.0, 1.0, fin, fout);
  for (double r : {0.3, 2.0}) {
    const SurfaceQuadrature g = make_sphere_grid_for_degree(r, N);
    TangentialTrace t, th;
    for (std::size_t k = 0; k < g.size(); ++k) {
      t.values.push_back(cross(g.normals[k], f.E(g.nodes[k])));
      th.values.push_back(cross(g.normals[k], f.H(g.nodes[k])));
    }
    const VshExpansion want = r < 1 ? fin : fout;
    CHECK((vsh_analyze(g, t, N).flat() - want.flat()).norm() < 1e-9 * want.flat().norm());
    const VshExpansion mh = r < 1 ? f.magnetic_trace_inner() : f.magnetic_trace_outer();
    CHECK((vsh_analyze(g, th, N).flat() - mh.flat()).norm() < 1e-9 * mh.flat().norm());
  }
  const Vec3 x(0.5, 0.4, -0.7);
  const CVec3 cE = fd_curl([&](const Vec3& y) { return f.E(y); }, x, 1e-5);
  CHECK((cE - imag_unit * f.H(x)).norm() < 1e-6 * f.H(x).norm());
}

TEST_CASE("radiating field: Maxwell, radiation condition and far field") {
  const int N = 5;
  const RadiatingSphereField f(1.0, 1.3, random_vsh(N, 9));
  const Vec3 x(1.4, -0.3, 0.9);
  const CVec3 cE = fd_curl([&](const Vec3& y) { return f.E(y); }, x, 1e-5);
  const CVec3 cH = fd_curl([&](const Vec3& y) { return f.H(y); }, x, 1e-5);
  CHECK((cE - imag_unit * 1.3 * f.H(x)).norm() < 1e-6 * f.H(x).norm());
  CHECK((cH + imag_unit * 1.3 * f.E(x)).norm() < 1e-6 * f.E(x).norm());
  const Vec3 u = x.normalized();
  double prev = 1e9;
  for (double r : {250.0, 500.0, 1000.0}) {
    const CVec3 approx = f.E(r * u) * r * std::exp(-imag_unit * 1.3 * r);
    const double err = (approx - f.far_field(u)).norm();
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-2 * f.far_field(u).norm());
}

TEST_CASE("resonance detection") {
  const EigenvalueReport r = is_em_eigenvalue(1.0, 2.0, 1e-9, 12);
  CHECK_FALSE(r.is_eigenvalue);
  CHECK(r.min_determinant > 1e-3);
  REQUIRE(r.determinants.size() == 12);
  CHECK(r.nearest_n == 1);
  CHECK(r.nearest_pol == Polarization::tm);
  CHECK(r.nearest_omega * 2.0 == doctest::Approx(2.7437072699922693).epsilon(1e-9));
  CHECK_FALSE(is_em_eigenvalue(1e-4, 2.0, 1e-9).is_eigenvalue);
  // first zero of j_1: 4.493409457909064
  const double ws = 4.493409457909064 / 2.0;
  const EigenvalueReport at = is_em_eigenvalue(ws, 2.0, 1e-9);
  CHECK(at.is_eigenvalue);
  CHECK(at.min_n == 1);
  CHECK(at.min_pol == Polarization::te);
  CHECK_FALSE(is_em_eigenvalue(ws + 1e-8, 2.0, 1e-9).is_eigenvalue);
  CHECK_FALSE(is_em_eigenvalue(ws - 1e-8, 2.0, 1e-9).is_eigenvalue);
  LayeredSphereSpec s = LayeredSphereSpec::vacuum_ball(2.0, ws);
  try {
    solve_layered_sphere(s, random_vsh(3, 1));
    FAIL("expected resonance");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::resonance);
    CHECK(std::string(e.what()).find("n=1 TE") != std::string::npos);
  }
}

TEST_CASE("lossy layer shields the core") {
  double prev = 1e300;
  for (double gamma : {1.0, 10.0, 100.0, 1000.0}) {
    LayeredSphereSpec s;
    s.omega = 1.0;
    s.layers = {{0.05, 2.0, 1.0, 0.0}, {0.1, 1.0, 1.0, gamma / 0.01}, {2.0, 1.0, 1.0, 0.0}};
    VshExpansion psi = VshExpansion::zero(2);
    psi.a[vsh_index(1, 0)] = 1.0;
    psi.b[vsh_index(1, 0)] = 1.0;
    const LayeredSolution sol = solve_layered_sphere(s, psi);
    const double core = std::abs(sol.coefficient(1, 0, Polarization::te, 0, false)) +
                        std::abs(sol.coefficient(1, 0, Polarization::tm, 0, false));
    CHECK(core < prev);
    prev = core;
  }
}

TEST_CASE("modal CSV dump") {
  const LayeredSolution sol = solve_layered_sphere(three_layer(1.0), random_vsh(2, 1));
  std::ostringstream os;
  sol.write_csv(os);
  const std::string s = os.str();
  CHECK(s.rfind("n,m,pol,layer,coeff_re,coeff_im\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 8 * 3 * 4);
  CHECK(s.find("TM_h") != std::string::npos);
}
