#include <doctest.h>

#include <sstream>

#include "nearcloak/harness.hpp"

using namespace nearcloak;

namespace {

SweepConfig parse(const std::string& s) {
  std::istringstream is(s);
  return parse_config(is);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::numeric;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const SweepConfig d = parse("");
  CHECK(d.omega == 1.0);
  CHECK(d.rho == std::vector<double>{0.4, 0.2, 0.1, 0.05});
  CHECK(d.core_eps.size() * d.core_mu.size() * d.core_sigma.size() == 12);

  const SweepConfig c = parse("[physics]\nomega = 0.5\n[sweep]\nrho = 0.3, 0.1\n[medium]\ngamma0 = 0\n"
                              "scaled_layer_mu = true\n[run]\nthreads = 3\n");
  CHECK(c.omega == 0.5);
  CHECK(c.rho == std::vector<double>{0.3, 0.1});
  CHECK(c.layer.gamma0 == 0.0);
  CHECK(c.scaled_layer_mu);
  CHECK(c.threads == 3);
}

TEST_CASE("config round trip") {
  SweepConfig c;
  c.omega = 0.7;
  c.rho = {0.35, 0.125};
  c.core_sigma = {0.0, 2.5};
  c.out_dir = "results";
  std::ostringstream os;
  write_config(os, c);
  const SweepConfig back = parse(os.str());
  std::ostringstream again;
  write_config(again, back);
  CHECK(again.str() == os.str());
}

TEST_CASE("config validation") {
  CHECK(kind_of([] { parse("[sweep]\nrho = 0.1, 0.2\n"); }) == ErrorKind::validation);
  CHECK(kind_of([] { parse("[sweep]\nrho = 0.5, 1.5\n"); }) == ErrorKind::validation);
  CHECK(kind_of([] { parse("[sweep]\nrho = 0.5, x\n"); }) == ErrorKind::validation);
  CHECK(kind_of([] { parse("[core]\neps =\n"); }) == ErrorKind::validation);
  CHECK(kind_of([] { parse("[bogus]\na = 1\n"); }) == ErrorKind::validation);
  CHECK(kind_of([] { parse("[physics]\nomegaa = 1\n"); }) == ErrorKind::validation);
  CHECK(kind_of([] { parse("[physics]\nomega = fast\n"); }) == ErrorKind::validation);
  CHECK(kind_of([] { parse("[geometry]\ninner_radius = 3\n"); }) == ErrorKind::validation);
  CHECK(kind_of([] { load_config("/nonexistent/config.ini"); }) == ErrorKind::validation);
}

TEST_CASE("parallel map keeps index order and rethrows") {
  for (int threads : {1, 4}) {
    const auto v = parallel_map(50, threads, [](std::size_t i) { return static_cast<int>(i * i); });
    REQUIRE(v.size() == 50);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<int>(i * i));
    CHECK_THROWS_AS(parallel_map(10, threads,
                                 [](std::size_t i) {
                                   if (i == 7) throw Error(ErrorKind::numeric, "boom");
                                   return 1;
                                 }),
                    Error);
  }
}

TEST_CASE("rho sweep without any contrast skips the fit") {
  SweepConfig c;
  c.layer = LayerParameters{1.0, 1.0, 0.0};
  c.core_eps = {1.0};
  c.core_sigma = {0.0};
  c.n_max = 4;
  const RhoSweep s = run_sweep_rho(c);
  REQUIRE(s.cores.size() == 1);
  CHECK(!s.cores[0].fit);
  for (double d : s.cores[0].diff) CHECK(d < 1e-12);
}

TEST_CASE("rho sweep output is versioned and deterministic") {
  SweepConfig c;
  c.n_max = 4;
  std::ostringstream a, b;
  write_sweep_csv(a, run_sweep_rho(c));
  c.threads = 3;
  write_sweep_csv(b, run_sweep_rho(c));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("# nearcloak-csv v1 sweep-rho\n", 0) == 0);
  std::ostringstream r;
  write_slope_report(r, run_sweep_rho(c));
  CHECK(r.str().rfind("# nearcloak-csv v1 slope-report\n", 0) == 0);
}

TEST_CASE("rho sweep refuses interior resonances") {
  SweepConfig c;
  c.omega = 4.493409457909064 / 2.0;  // first TE zero of j_1 on the radius 2 ball
  CHECK(kind_of([&] { run_sweep_rho(c); }) == ErrorKind::resonance);
}

TEST_CASE("check report: clean run, corrupted weight and resonant frequency") {
  SweepConfig c;
  CheckOptions o;
  o.include_bie = false;
  const CheckReport clean = run_check(c, o);
  for (const CheckEntry& e : clean.entries) {
    INFO(e.name << " " << e.value << " " << e.detail);
    CHECK(e.pass);
  }
  std::ostringstream js;
  clean.write_json(js);
  CHECK(js.str().find("\"pairing_skewness\"") != std::string::npos);

  o.corrupt_quadrature_weight = true;
  const CheckReport bad = run_check(c, o);
  CHECK(!bad.find("pairing_skewness")->pass);
  CHECK(bad.find("norm_axioms")->pass);

  c.omega = 4.493409457909064 / 2.0;
  const CheckReport res = run_check(c, CheckOptions{false, false});
  const CheckEntry* e = res.find("eigenvalue");
  REQUIRE(e != nullptr);
  CHECK(!e->pass);
  CHECK(e->detail.find("2.24670") != std::string::npos);
}

TEST_CASE("default data for the tau sweeps") {
  const auto phi = default_phi(1.0);
  const SurfaceQuadrature g = make_sphere_grid_for_degree(1.0, 4);
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const CVec3 v = phi(g.nodes[k]);
    CHECK(std::abs(dotu(g.normals[k], v)) < 1e-14);
    s += g.weights[k] * v.squaredNorm();
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(default_psi().a[vsh_index(1, 0)] == 1.0);
}
