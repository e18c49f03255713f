#include <doctest.h>

#include <cmath>

#include "nearcloak/media.hpp"
#include "nearcloak/special_functions.hpp"

using namespace nearcloak;

namespace {

const Vec3 dir = Vec3(0.36, -0.48, 0.8);  // unit length

CVec3 fd_curl_forward(const std::function<CVec3(const Vec3&)>& F, const Vec3& x, double h) {
  const CVec3 f0 = F(x);
  CVec3 d[3];
  for (int c = 0; c < 3; ++c) {
    Vec3 e = Vec3::Zero();
    e[c] = h;
    d[c] = (F(x + e) - f0) / h;
  }
  return CVec3(d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]);
}

}  // namespace

TEST_CASE("radial blow-up map") {
  const BlowupMap F = radial_blowup_map(0.5, 1.0, 2.0);
  const Vec3 xb = 2.0 * dir;
  CHECK((F.apply(xb) - xb).norm() < 1e-15);
  CHECK(F.apply(0.5 * dir).norm() == doctest::Approx(1.0));
  CHECK(F.apply(1.25 * dir).norm() == doctest::Approx(1.5));
  CHECK((F.inverse(F.apply(0.8 * dir)) - 0.8 * dir).norm() < 1e-15);
  CHECK_THROWS_AS(radial_blowup_map(1.0, 1.0, 2.0), Error);
  CHECK_THROWS_AS(radial_blowup_map(0.0, 1.0, 2.0), Error);
  // continuity across |x| = rho R_D
  const double rD = 0.5;
  CHECK((F.apply(rD * (1 - 1e-15) * dir) - F.apply(rD * (1 + 1e-15) * dir)).norm() < 1e-12);
}

TEST_CASE("jacobian") {
  const BlowupMap F = radial_blowup_map(0.3, 1.0, 2.0);
  CHECK((jacobian(F, 0.1 * dir) - Mat3::Identity() / 0.3).norm() < 1e-13);
  const double h = 1e-6;
  for (const Vec3& x : {Vec3(2.0 * dir), Vec3(1.1 * dir), Vec3(0.05, 0.1, -0.2)}) {
    const Mat3 J = jacobian(F, x);
    Mat3 fd;
    for (int c = 0; c < 3; ++c) {
      Vec3 e = Vec3::Zero();
      e[c] = h;
      fd.col(c) = (F.apply(x + e) - F.apply(x - e)) / (2 * h);
    }
    CHECK((J - fd).norm() < 1e-6 * J.norm());
    CHECK(J.determinant() > 0.0);
  }
  try {
    jacobian(F, 0.3 * dir);
    FAIL("expected interface error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::interface);
  }
}

TEST_CASE("push-forward") {
  const TensorFunction eye = constant_tensor(SymTensor3::isotropic(1.0));
  const RadialMap id({0.0, 1.0}, {0.0, 1.0});
  const TensorFunction aniso = constant_tensor(SymTensor3(2.0, 1.0, 3.0, 0.2, -0.1, 0.3));
  CHECK((push_forward(aniso, id, 0.4 * dir).matrix() - aniso(dir).matrix()).norm() < 1e-15);
  const double rho = 0.2;
  const RadialMap dil = RadialMap::dilation(1.0 / rho, 1.0);
  CHECK((push_forward(eye, dil, 0.7 * dir).matrix() - rho * Mat3::Identity()).norm() < 1e-14);
  const TensorFunction s = constant_tensor(SymTensor3::isotropic(3.0 / (rho * rho)));
  CHECK((push_forward(s, dil, 0.7 * dir).matrix() - 3.0 / rho * Mat3::Identity()).norm() < 1e-12);
  const BlowupMap F = radial_blowup_map(0.25, 1.0, 2.0);
  const SymTensor3 pf = push_forward(aniso, F, 1.3 * dir);
  CHECK((pf.matrix() - pf.matrix().transpose()).norm() == 0.0);
  CHECK(pf.eigenvalues()[0] > 0.0);
  CHECK_THROWS_AS(push_forward(eye, F, 2.5 * dir), Error);
}

TEST_CASE("push-forward functoriality") {
  const BlowupMap F = radial_blowup_map(0.4, 1.0, 2.0);
  const RadialMap G({0.0, 0.3, 1.5, 2.0}, {0.0, 0.2, 1.6, 2.0});
  const RadialMap FG = F.map.compose(G);
  const TensorFunction m = [](const Vec3& y) {
    return SymTensor3(1.0 + y.x() * y.x(), 2.0, 1.5 + 0.1 * y.z(), 0.1 * y.y(), 0.05, -0.2 * y.x());
  };
  const TensorFunction Gm = [&](const Vec3& x) { return push_forward(m, G, x); };
  for (double r : {0.15, 0.7, 1.3, 1.9}) {
    const Vec3 x = FG.apply(r * dir);
    const Mat3 a = push_forward(m, FG, x).matrix();
    const Mat3 b = push_forward(Gm, F.map, x).matrix();
    CHECK((a - b).norm() < 1e-10 * a.norm());
  }
}

TEST_CASE("physical medium layout") {
  const double rho = 0.1;
  const BlowupMap F = radial_blowup_map(rho, 1.0, 2.0);
  const MaterialField mf = build_physical_medium(F, {}, CoreMedium::isotropic(5.0, 2.0, 3.0));
  for (const Vec3& x : radial_sample_grid(2.0, 5, 20, 1.0)) CHECK(mf.at(x).sigma.matrix().norm() == 0.0);
  CHECK((mf.at(0.75 * dir).sigma.matrix() - Mat3::Identity() / rho).norm() < 1e-10);
  CHECK((mf.at(0.75 * dir).eps.matrix() - rho * Mat3::Identity()).norm() < 1e-14);
  CHECK((mf.at(0.2 * dir).eps.matrix() - 5.0 * rho * Mat3::Identity()).norm() < 1e-13);
  try {
    mf.at(1.0 * dir);
    FAIL("expected interface error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::interface);
  }
  // cloak shell eigenvalues: radial s (r/r')^2, tangential 1/s
  const double s = (2.0 - 1.0) / (2.0 - rho);
  const Vec3 x = 1.5 * dir;
  const double y = rho + (1.5 - 1.0) / s;
  const Eigen::Vector3d ev = mf.at(x).eps.eigenvalues();
  CHECK(ev[0] == doctest::Approx(std::min(s * (y / 1.5) * (y / 1.5), 1 / s)));
  CHECK(ev[2] == doctest::Approx(std::max(s * (y / 1.5) * (y / 1.5), 1 / s)));
  const CoreMedium bad = CoreMedium::isotropic(-1.0, 1.0, 0.0);
  try {
    build_physical_medium(F, {}, bad);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK(std::string(e.what()).find("at (") != std::string::npos);
  }
}

TEST_CASE("rho -> 1 approaches vacuum") {
  double prev = 1e9;
  for (double rho : {0.9, 0.99, 0.999}) {
    const MaterialField mf = build_physical_medium(radial_blowup_map(rho, 1.0, 2.0), {1.0, 1.0, 0.0},
                                                   CoreMedium::isotropic(1.0, 1.0, 0.0));
    double dev = 0.0;
    for (const Vec3& x : radial_sample_grid(2.0, 9, 30)) {
      if (mf.near_interface(x)) continue;
      const MaterialSample s = mf.at(x);
      dev = std::max({dev, (s.eps.matrix() - Mat3::Identity()).norm(), (s.mu.matrix() - Mat3::Identity()).norm(),
                      s.sigma.matrix().norm()});
    }
    CHECK(dev < 10.0 * (1.0 - rho));
    CHECK(dev < prev);
    prev = dev;
  }
}

TEST_CASE("virtual medium layout") {
  const CoreMedium core = CoreMedium::isotropic(10.0, 1.0, 1.0);
  const MaterialField off = build_virtual_medium(0.1, 1.0, 2.0, {}, core, false);
  const MaterialSample vac = off.at(1.0 * dir);
  CHECK(vac.eps.matrix() == Mat3::Identity());
  CHECK(vac.mu.matrix() == Mat3::Identity());
  CHECK(vac.sigma.matrix().norm() == 0.0);
  const MaterialSample lay = off.at(0.075 * dir);
  CHECK(lay.eps.matrix() == Mat3::Identity());
  CHECK(lay.mu.matrix() == Mat3::Identity());
  CHECK((lay.sigma.matrix() - 100.0 * Mat3::Identity()).norm() < 1e-12);
  const MaterialField on = build_virtual_medium(0.1, 1.0, 2.0, {}, core, true);
  CHECK((on.at(0.075 * dir).mu.matrix() - 0.01 * Mat3::Identity()).norm() < 1e-15);
  const LayeredSphereSpec spec = layered_spec_from_medium(off, 1.0);
  REQUIRE(spec.layers.size() == 3);
  CHECK(spec.layers[0].eps == 10.0);
  CHECK(spec.layers[1].sigma == doctest::Approx(100.0));
  CHECK(spec.layers[2].outer_radius == 2.0);
}

TEST_CASE("regularity report") {
  const MaterialField vac = build_virtual_medium(0.5, 1.0, 2.0, {1.0, 1.0, 0.0}, CoreMedium::isotropic(1, 1, 0), false);
  RegularityReport r = check_regularity(vac, radial_sample_grid(2.0, 6, 20));
  CHECK(r.eps.c_min == 1.0);
  CHECK(r.eps.C_max == 1.0);
  CHECK(r.sigma.C_max == 0.0);
  CHECK(r.ok());
  const MaterialField lay = build_virtual_medium(0.1, 1.0, 2.0, {1.0, 1.0, 1.0}, CoreMedium::isotropic(1, 1, 0), false);
  const RegularityReport rl = check_regularity(lay, radial_sample_grid(0.1, 4, 10, 0.05));
  CHECK(rl.sigma.c_min == doctest::Approx(100.0));
  const MaterialField phys = build_physical_medium(radial_blowup_map(0.1, 1.0, 2.0), {}, CoreMedium::isotropic(1, 1, 0));
  const RegularityReport rp = check_regularity(phys, radial_sample_grid(0.75, 4, 10, 0.5));
  CHECK(rp.sigma.c_min == doctest::Approx(10.0));
  // degeneracy of the cloak next to the inner boundary
  double prev = 1e9;
  for (double rho : {0.1, 0.01, 0.001}) {
    const MaterialField mf = build_physical_medium(radial_blowup_map(rho, 1.0, 2.0), {}, CoreMedium::isotropic(1, 1, 0));
    const RegularityReport rr = check_regularity(mf, radial_sample_grid(1.01, 1, 20, 1.0 + 1e-4));
    CHECK(rr.eps.c_min < prev);
    prev = rr.eps.c_min;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("pull-back of fields") {
  const RadialMap id({0.0, 1.0}, {0.0, 1.0});
  const auto E = [](const Vec3& x) { return CVec3(cplx(x.y(), 1.0), cplx(0.0, x.z()), cplx(2.0, 0.0)); };
  CHECK((pull_back_field(E, id, 0.3 * dir) - E(0.3 * dir)).norm() == 0.0);
  const BlowupMap F = radial_blowup_map(0.2, 1.0, 2.0);
  const auto c = [](const Vec3&) { return CVec3(cplx(1.0, 2.0), 3.0, cplx(0.0, -1.0)); };
  CHECK((pull_back_field(c, F, 0.1 * dir) - c(dir) / 0.2).norm() < 1e-13);
}

TEST_CASE("transformed Maxwell system: first-order FD residual of a pushed-forward mode") {
  // Vacuum TE+TM mode in virtual coordinates, pushed into the cloak shell.
  const double omega = 1.0;
  VshExpansion psi = VshExpansion::zero(2);
  psi.a[vsh_index(1, 0)] = 1.0;
  psi.b[vsh_index(2, 1)] = cplx(0.5, 0.5);
  const LayeredSolution sol = solve_layered_sphere(LayeredSphereSpec::vacuum_ball(2.0, omega), psi);
  const BlowupMap F = radial_blowup_map(0.3, 1.0, 2.0);
  const RadialMap Finv = F.map.inverse();
  const MaterialField mf = build_physical_medium(F, {}, CoreMedium::isotropic(1, 1, 0));
  const auto E = [&](const Vec3& x) { return pull_back_field([&](const Vec3& y) { return sol.E(y); }, Finv, x); };
  const auto H = [&](const Vec3& x) { return pull_back_field([&](const Vec3& y) { return sol.H(y); }, Finv, x); };
  const Vec3 x = 1.4 * dir;
  const Mat3 mu = mf.at(x).mu.matrix();
  const Mat3 eps = mf.at(x).eps.matrix();
  std::vector<double> res;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const CVec3 rE = fd_curl_forward(E, x, h) - imag_unit * omega * (mu.cast<cplx>() * H(x));
    const CVec3 rH = fd_curl_forward(H, x, h) + imag_unit * omega * (eps.cast<cplx>() * E(x));
    res.push_back(rE.norm() + rH.norm());
  }
  CHECK(res[0] / res[1] == doctest::Approx(2.0).epsilon(0.1));
  CHECK(res[1] / res[2] == doctest::Approx(2.0).epsilon(0.1));
  // pulling back through F recovers the vacuum mode
  const Vec3 y = 1.1 * dir;
  const CVec3 back = pull_back_field(E, F, y);
  CHECK((back - sol.E(y)).norm() < 1e-12);
}
