#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "nearcloak/harness.hpp"

namespace fs = std::filesystem;
using namespace nearcloak;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<int> threads;
  std::optional<int> refinement;
  bool busting = false;
  bool strict = false;
  bool no_bie = false;
};

SweepConfig resolve(const Options& o) {
  SweepConfig c = o.config_path.empty() ? SweepConfig{} : load_config(o.config_path);
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (o.threads) c.threads = *o.threads;
  if (o.refinement) c.refinement = *o.refinement;
  c.validate();
  return c;
}

fs::path prepare(const SweepConfig& c) {
  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::validation, "cannot create output directory " + c.out_dir + ": " + ec.message());
  std::ofstream f(dir / "config.ini");
  write_config(f, c);
  return dir;
}

std::ofstream open(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorKind::validation, "cannot write " + p.string());
  return f;
}

void report_written(const fs::path& p) { std::cout << "wrote " << p.string() << "\n"; }

int cmd_medium(const SweepConfig& c) {
  const fs::path dir = prepare(c);
  const std::vector<Vec3> samples = radial_sample_grid(c.outer_radius, 64, 12);
  const CoreParams core = core_grid(c).front();
  const CoreMedium cm = CoreMedium::isotropic(core.eps, core.mu, core.sigma);
  auto f = open(dir / "medium.csv");
  auto g = open(dir / "regularity.csv");
  f << std::setprecision(17) << csv_version << " medium\n";
  f << "rho,medium,x,y,z,region,eps_min,eps_max,mu_min,mu_max,sigma_min,sigma_max\n";
  g << std::setprecision(17) << csv_version << " regularity\n";
  g << "rho,medium,eps_min,eps_max,mu_min,mu_max,sigma_min,sigma_max,ok,samples_used,samples_skipped\n";
  for (double rho : c.rho) {
    const MaterialField phys = build_physical_medium(radial_blowup_map(rho, c.inner_radius, c.outer_radius), c.layer, cm);
    const MaterialField virt =
        build_virtual_medium(rho, c.inner_radius, c.outer_radius, c.layer, cm, c.scaled_layer_mu);
    for (const auto& [name, mf] : {std::pair<const char*, const MaterialField*>{"physical", &phys}, {"virtual", &virt}}) {
      for (const Vec3& x : samples) {
        if (mf->near_interface(x) || x.norm() >= mf->outer_radius()) continue;
        const MaterialSample s = mf->at(x);
        const Eigen::Vector3d e = s.eps.eigenvalues(), m = s.mu.eigenvalues(), sg = s.sigma.eigenvalues();
        f << rho << ',' << name << ',' << x[0] << ',' << x[1] << ',' << x[2] << ',' << mf->region_at(x).name << ','
          << e[0] << ',' << e[2] << ',' << m[0] << ',' << m[2] << ',' << sg[0] << ',' << sg[2] << '\n';
      }
      const RegularityReport r = check_regularity(*mf, samples);
      g << rho << ',' << name << ',' << r.eps.c_min << ',' << r.eps.C_max << ',' << r.mu.c_min << ',' << r.mu.C_max
        << ',' << r.sigma.c_min << ',' << r.sigma.C_max << ',' << (r.ok() ? 1 : 0) << ',' << r.samples_used << ','
        << r.samples_skipped << '\n';
    }
  }
  report_written(dir / "medium.csv");
  report_written(dir / "regularity.csv");
  return 0;
}

int cmd_mie_admittance(const SweepConfig& c) {
  const fs::path dir = prepare(c);
  const std::vector<CoreParams> cores = core_grid(c);
  auto f = open(dir / "admittance.csv");
  f << std::setprecision(17) << csv_version << " admittance\n";
  f << "rho,core,eps,mu,sigma,n,te_re,te_im,tm_re,tm_im\n";
  const auto free_modes = modal_admittances(LayeredSphereSpec::vacuum_ball(c.outer_radius, c.omega), c.n_max);
  for (int n = 1; n <= c.n_max; ++n) {
    const ModalAdmittance& a = free_modes[n - 1];
    f << 0 << ",-1,1,1,0," << n << ',' << a.te.real() << ',' << a.te.imag() << ',' << a.tm.real() << ','
      << a.tm.imag() << '\n';
  }
  for (double rho : c.rho) {
    for (std::size_t k = 0; k < cores.size(); ++k) {
      const CoreParams& p = cores[k];
      const MaterialField mf = build_virtual_medium(rho, c.inner_radius, c.outer_radius, c.layer,
                                                    CoreMedium::isotropic(p.eps, p.mu, p.sigma), c.scaled_layer_mu);
      const auto modes = modal_admittances(layered_spec_from_medium(mf, c.omega), c.n_max);
      for (int n = 1; n <= c.n_max; ++n) {
        const ModalAdmittance& a = modes[n - 1];
        f << rho << ',' << k << ',' << p.eps << ',' << p.mu << ',' << p.sigma << ',' << n << ',' << a.te.real() << ','
          << a.te.imag() << ',' << a.tm.real() << ',' << a.tm.imag() << '\n';
      }
    }
  }
  // modal coefficients of the default boundary data for the first rho and core
  const CoreParams& p = cores.front();
  const MaterialField mf = build_virtual_medium(c.rho.front(), c.inner_radius, c.outer_radius, c.layer,
                                                CoreMedium::isotropic(p.eps, p.mu, p.sigma), c.scaled_layer_mu);
  auto g = open(dir / "modal_coefficients.csv");
  g << std::setprecision(17) << csv_version << " modal-coefficients\n";
  solve_layered_sphere(layered_spec_from_medium(mf, c.omega), default_psi()).write_csv(g);
  report_written(dir / "admittance.csv");
  report_written(dir / "modal_coefficients.csv");
  return 0;
}

void print_sweep(const char* label, const RhoSweep& s) {
  std::cout << label << ": C-hat min " << s.c_hat_min << ", max " << s.c_hat_max << ", spread " << s.c_hat_spread()
            << "\n";
  for (std::size_t i = 0; i < s.cores.size(); ++i) {
    const CoreSweep& k = s.cores[i];
    std::cout << "  core " << i << " (eps " << k.core.eps << ", mu " << k.core.mu << ", sigma " << k.core.sigma << "): ";
    if (k.fit) {
      std::cout << "slope " << k.fit->slope << " (R^2 " << k.fit->r_squared << (k.fit->flagged ? ", flagged" : "")
                << "), unweighted slope " << k.fit_l2->slope << ", C-hat " << k.c_hat << "\n";
    } else {
      std::cout << "differences negligible, fit skipped\n";
    }
  }
}

int cmd_sweep_rho(const SweepConfig& c, bool busting) {
  const fs::path dir = prepare(c);
  const RhoSweep s = run_sweep_rho(c);
  {
    auto f = open(dir / "sweep_rho.csv");
    write_sweep_csv(f, s);
    auto g = open(dir / "slope_report.csv");
    write_slope_report(g, s);
  }
  print_sweep("sweep", s);
  report_written(dir / "sweep_rho.csv");
  report_written(dir / "slope_report.csv");
  if (busting) {
    const CloakBusting b = run_cloak_busting(c);
    auto f = open(dir / "cloak_busting.csv");
    f << std::setprecision(17) << csv_version << " cloak-busting\n";
    f << "core,eps,mu,sigma,layer,slope,c_hat,busted\n";
    for (int layer = 0; layer < 2; ++layer) {
      const RhoSweep& r = layer ? b.with_layer : b.without_layer;
      const auto& idx = layer ? b.busted_with : b.busted_without;
      for (std::size_t i = 0; i < r.cores.size(); ++i) {
        const CoreSweep& k = r.cores[i];
        f << i << ',' << k.core.eps << ',' << k.core.mu << ',' << k.core.sigma << ',' << layer << ',';
        if (k.fit) f << k.fit->slope;
        f << ',' << k.c_hat << ',' << (std::find(idx.begin(), idx.end(), i) != idx.end() ? 1 : 0) << '\n';
      }
    }
    f << "# baseline_c_hat," << b.baseline_c_hat << '\n';
    std::cout << "cloak busting: baseline C-hat " << b.baseline_c_hat << ", busted without layer "
              << b.busted_without.size() << ", with layer " << b.busted_with.size() << "\n";
    report_written(dir / "cloak_busting.csv");
  }
  return 0;
}

int cmd_props(const SweepConfig& c) {
  const fs::path dir = prepare(c);
  const PropsSweep s = run_props(c);
  auto f = open(dir / "props.csv");
  write_props_csv(f, s);
  for (const PropsRow& r : s.rows) {
    std::cout << r.driver << " tau " << r.tau << ": norm " << r.norm << ", oracle " << r.oracle_norm
              << ", relative error " << r.relative_error << "\n";
  }
  std::cout << "psi-driven slope " << s.psi_fit.slope << " (oracle " << s.psi_oracle_fit.slope << ")\n";
  std::cout << "phi-driven slope " << s.phi_fit.slope << " (oracle " << s.phi_oracle_fit.slope << ")\n";
  report_written(dir / "props.csv");
  return 0;
}

int cmd_exterior(const SweepConfig& c) {
  const fs::path dir = prepare(c);
  const PecComparison p = run_pec_mie(c.inner_radius, c.omega, c.refinement);
  auto f = open(dir / "pec_far_field.csv");
  f << std::setprecision(17) << csv_version << " pec-far-field\n";
  f << "dx,dy,dz,bie_x_re,bie_x_im,bie_y_re,bie_y_im,bie_z_re,bie_z_im,mie_x_re,mie_x_im,mie_y_re,mie_y_im,mie_z_re,"
       "mie_z_im\n";
  for (std::size_t i = 0; i < p.directions.size(); ++i) {
    const Vec3& d = p.directions[i];
    f << d[0] << ',' << d[1] << ',' << d[2];
    for (const CVec3* v : {&p.bie[i], &p.mie[i]}) {
      for (int k = 0; k < 3; ++k) f << ',' << (*v)[k].real() << ',' << (*v)[k].imag();
    }
    f << '\n';
  }
  f << "# relative_l2_error," << p.error << ",condition," << p.condition << '\n';

  // scattered field on a slice y = 0 outside the sphere
  const SpacePtr s = make_space(make_sphere_mesh(c.inner_radius, std::min(c.refinement, 2)));
  const Vec3 k(0, 0, 1), pol(1, 0, 0);
  const ScatterSolution sol = solve_exterior(s, c.omega, s->sample([&](const Vec3& x, const Vec3& n) {
    return CVec3(-cross(n, CVec3(pol.cast<cplx>() * std::exp(imag_unit * c.omega * k.dot(x)))));
  }));
  auto g = open(dir / "field_slice.csv");
  g << std::setprecision(17) << csv_version << " field-slice\n";
  g << "x,y,z,Ex_re,Ex_im,Ey_re,Ey_im,Ez_re,Ez_im\n";
  const int n = 41;
  const double L = 3.0 * c.inner_radius;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec3 x(-L + 2 * L * i / (n - 1), 0.0, -L + 2 * L * j / (n - 1));
      if (x.norm() < 1.2 * c.inner_radius) continue;
      const CVec3 E = sol.E(x);
      g << x[0] << ',' << x[1] << ',' << x[2];
      for (int q = 0; q < 3; ++q) g << ',' << E[q].real() << ',' << E[q].imag();
      g << '\n';
    }
  }
  std::cout << "PEC far-field relative L2 error " << p.error << " at refinement " << c.refinement << "\n";
  report_written(dir / "pec_far_field.csv");
  report_written(dir / "field_slice.csv");
  return 0;
}

int cmd_annulus(const SweepConfig& c) {
  const fs::path dir = prepare(c);
  const SpacePtr outer = make_space(make_sphere_mesh(c.outer_radius, c.refinement));
  const SpacePtr inner = make_space(make_sphere_mesh(c.inner_radius, c.refinement));
  VshExpansion src_trace = VshExpansion::zero(1);
  src_trace.a[vsh_index(1, 0)] = 1.0;
  src_trace.b[vsh_index(1, 1)] = cplx(0.0, 0.5);
  const int N = c.n_max_trace;
  auto f = open(dir / "annulus.csv");
  f << std::setprecision(17) << csv_version << " annulus\n";
  f << "tau,n,m,type,bie_re,bie_im,oracle_re,oracle_im\n";
  for (double tau : c.tau) {
    // radiating source inside the hole
    const RadiatingSphereField src(0.5 * tau * c.inner_radius, c.omega, src_trace);
    const AnnulusSystem sys(outer, inner, tau, c.omega);
    const ScatterSolution ext = solve_exterior(
        sys.inner(), c.omega, sys.inner()->sample([&](const Vec3& x, const Vec3& n) { return cross(n, src.E(x)); }));
    const ScatterSolution ann = solve_annulus(sys, ext);
    const SurfaceQuadrature g = make_sphere_grid_for_degree(c.outer_radius, N);
    TangentialTrace tr;
    for (std::size_t i = 0; i < g.size(); ++i) tr.values.push_back(cross(g.normals[i], src.E(g.nodes[i])));
    const VacuumAnnulusField exact(tau * c.inner_radius, c.outer_radius, c.omega, VshExpansion::zero(N),
                                   vsh_analyze(g, tr, N));
    const VshExpansion got = vsh_analyze(outer->mesh().quad, outer->trace_at_quadrature(annulus_outer_trace(ann)), N);
    const VshExpansion want = exact.magnetic_trace_outer();
    for (int n = 1; n <= N; ++n) {
      for (int m = -n; m <= n; ++m) {
        const int i = vsh_index(n, m);
        f << tau << ',' << n << ',' << m << ",a," << got.a[i].real() << ',' << got.a[i].imag() << ','
          << want.a[i].real() << ',' << want.a[i].imag() << '\n';
        f << tau << ',' << n << ',' << m << ",b," << got.b[i].real() << ',' << got.b[i].imag() << ','
          << want.b[i].real() << ',' << want.b[i].imag() << '\n';
      }
    }
    std::cout << "tau " << tau << ": outer trace relative error "
              << (got.flat() - want.flat()).norm() / want.flat().norm() << ", residual " << ann.residual << "\n";
  }
  report_written(dir / "annulus.csv");
  return 0;
}

int cmd_check(const SweepConfig& c, const Options& o) {
  const fs::path dir = prepare(c);
  CheckOptions co;
  co.include_bie = !o.no_bie;
  const CheckReport r = run_check(c, co);
  {
    auto f = open(dir / "check.json");
    r.write_json(f);
  }
  for (const CheckEntry& e : r.entries) {
    std::cout << (e.pass ? "PASS " : "FAIL ") << e.name << ": " << e.value << " " << e.relation << " " << e.threshold
              << (e.detail.empty() ? "" : "  (" + e.detail + ")") << "\n";
  }
  report_written(dir / "check.json");
  return o.strict && !r.all_pass() ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-cloaking numerics: layered-sphere oracles, boundary integrals and convergence sweeps"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", o.out_dir, "output directory (overrides run.out_dir)");
  app.add_option("--threads", o.threads, "worker threads (overrides run.threads)")->check(CLI::PositiveNumber);
  app.add_option("--refinement", o.refinement, "sphere mesh refinement (overrides bie.refinement)")
      ->check(CLI::Range(0, max_sphere_refinement));
  app.fallthrough();

  auto* medium = app.add_subcommand("medium", "sample physical and virtual media, regularity report");
  auto* mie = app.add_subcommand("mie-admittance", "modal admittances and coefficient dumps");
  auto* sweep = app.add_subcommand("sweep-rho", "admittance difference sweep over rho with slope fits");
  sweep->add_flag("--busting", o.busting, "also run the cloak-busting search");
  auto* props = app.add_subcommand("props", "tau sweeps of the decomposition solver");
  auto* exterior = app.add_subcommand("exterior", "PEC sphere: boundary integrals against the Mie series");
  auto* annulus = app.add_subcommand("annulus", "annulus solver against the spectral annulus field");
  auto* check = app.add_subcommand("check", "invariant suite, JSON report");
  check->add_flag("--strict", o.strict, "exit with status 2 when a check fails");
  check->add_flag("--no-bie", o.no_bie, "skip boundary-integral checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const SweepConfig c = resolve(o);
    if (*medium) return cmd_medium(c);
    if (*mie) return cmd_mie_admittance(c);
    if (*sweep) return cmd_sweep_rho(c, o.busting);
    if (*props) return cmd_props(c);
    if (*exterior) return cmd_exterior(c);
    if (*annulus) return cmd_annulus(c);
    if (*check) return cmd_check(c, o);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
