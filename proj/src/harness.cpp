#include "nearcloak/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "nearcloak/media.hpp"

namespace nearcloak {

namespace {

MaterialField virtual_medium(const SweepConfig& c, double rho, const CoreParams& core) {
  return build_virtual_medium(rho, c.inner_radius, c.outer_radius, c.layer,
                              CoreMedium::isotropic(core.eps, core.mu, core.sigma), c.scaled_layer_mu);
}

void require_not_resonant(const SweepConfig& c) {
  const EigenvalueReport rep = is_em_eigenvalue(c.omega, c.outer_radius, 1e-6);
  if (rep.is_eigenvalue) {
    std::ostringstream msg;
    msg << "omega = " << c.omega << " is an interior eigenvalue of the ball of radius " << c.outer_radius
        << " (mode n=" << rep.min_n << " " << to_string(rep.min_pol) << ", nearest zero omega = " << rep.nearest_omega
        << ")";
    throw Error(ErrorKind::resonance, msg.str());
  }
}

CVec3 zero_field(const Vec3&) { return CVec3::Zero(); }

std::ostream& csv_precision(std::ostream& os) { return os << std::setprecision(17); }

}  // namespace

std::vector<CoreParams> core_grid(const SweepConfig& c) {
  std::vector<CoreParams> out;
  for (double e : c.core_eps) {
    for (double m : c.core_mu) {
      for (double s : c.core_sigma) out.push_back({e, m, s});
    }
  }
  return out;
}

AdmittanceMatrix virtual_admittance(const SweepConfig& c, double rho, const CoreParams& core, int n_max) {
  return admittance_sphere(layered_spec_from_medium(virtual_medium(c, rho, core), c.omega), n_max);
}

AdmittanceMatrix free_admittance(const SweepConfig& c, int n_max) {
  return admittance_sphere(LayeredSphereSpec::vacuum_ball(c.outer_radius, c.omega), n_max);
}

// --------------------------------------------------------------------------

RhoSweep run_sweep_rho(const SweepConfig& c, const std::vector<CoreParams>& cores) {
  c.validate();
  require_not_resonant(c);
  const WeightedNorm w(c.n_max);
  const AdmittanceMatrix L0 = free_admittance(c, c.n_max);
  const double scale = Eigen::JacobiSVD<Eigen::MatrixXcd>(L0.matrix).singularValues()[0];

  RhoSweep out;
  out.rho = c.rho;
  out.cores = parallel_map(cores.size(), c.threads, [&](std::size_t i) {
    CoreSweep s;
    s.core = cores[i];
    for (double rho : c.rho) {
      const AdmittanceMatrix L = virtual_admittance(c, rho, s.core, c.n_max);
      s.diff.push_back(admittance_diff_norm(L, L0, w));
      s.diff_l2.push_back(admittance_diff_norm_l2(L, L0));
      s.c_hat = std::max(s.c_hat, s.diff.back() / (rho * rho * rho));
    }
    const bool negligible = std::all_of(s.diff_l2.begin(), s.diff_l2.end(),
                                        [&](double d) { return d <= negligible_difference * scale; });
    if (!negligible) {
      s.fit = fit_loglog(c.rho, s.diff);
      s.fit_l2 = fit_loglog(c.rho, s.diff_l2);
    }
    return s;
  });
  out.c_hat_min = std::numeric_limits<double>::infinity();
  for (const CoreSweep& s : out.cores) {
    if (!s.fit) continue;
    out.c_hat_min = std::min(out.c_hat_min, s.c_hat);
    out.c_hat_max = std::max(out.c_hat_max, s.c_hat);
  }
  if (!std::isfinite(out.c_hat_min)) out.c_hat_min = 0.0;
  return out;
}

RhoSweep run_sweep_rho(const SweepConfig& c) { return run_sweep_rho(c, core_grid(c)); }

void write_sweep_csv(std::ostream& os, const RhoSweep& s) {
  csv_precision(os) << csv_version << " sweep-rho\n";
  os << "core,eps,mu,sigma,rho,diff,diff_l2,diff_over_rho3\n";
  for (std::size_t i = 0; i < s.cores.size(); ++i) {
    const CoreSweep& c = s.cores[i];
    for (std::size_t k = 0; k < s.rho.size(); ++k) {
      const double r = s.rho[k];
      os << i << ',' << c.core.eps << ',' << c.core.mu << ',' << c.core.sigma << ',' << r << ',' << c.diff[k] << ','
         << c.diff_l2[k] << ',' << c.diff[k] / (r * r * r) << '\n';
    }
  }
}

void write_slope_report(std::ostream& os, const RhoSweep& s) {
  csv_precision(os) << csv_version << " slope-report\n";
  os << "core,eps,mu,sigma,fitted,slope,intercept,r_squared,flagged,slope_l2,r_squared_l2,c_hat,residuals\n";
  for (std::size_t i = 0; i < s.cores.size(); ++i) {
    const CoreSweep& c = s.cores[i];
    os << i << ',' << c.core.eps << ',' << c.core.mu << ',' << c.core.sigma << ',' << (c.fit ? 1 : 0) << ',';
    if (c.fit) {
      os << c.fit->slope << ',' << c.fit->intercept << ',' << c.fit->r_squared << ',' << (c.fit->flagged ? 1 : 0) << ','
         << c.fit_l2->slope << ',' << c.fit_l2->r_squared << ',' << c.c_hat << ',';
      for (std::size_t k = 0; k < c.fit->residuals.size(); ++k) os << (k ? ";" : "") << c.fit->residuals[k];
    } else {
      os << ",,,,,," << c.c_hat << ',';
    }
    os << '\n';
  }
  os << "# c_hat_min," << s.c_hat_min << ",c_hat_max," << s.c_hat_max << ",spread," << s.c_hat_spread() << '\n';
}

// --------------------------------------------------------------------------

std::vector<double> scan_resonant_eps(const SweepConfig& c, int n_max_scan) {
  SweepConfig c0 = c;
  c0.layer.gamma0 = 0.0;
  const WeightedNorm w(n_max_scan);
  const AdmittanceMatrix L0 = free_admittance(c0, n_max_scan);
  const double lo = std::log(c.scan_eps_min), hi = std::log(c.scan_eps_max);
  const int n = c.scan_points;

  return parallel_map(c.rho.size(), c.threads, [&](std::size_t k) {
    const double rho = c.rho[k];
    auto value = [&](double log_eps) {
      try {
        const AdmittanceMatrix L = virtual_admittance(c0, rho, {std::exp(log_eps), 1.0, 0.0}, n_max_scan);
        return admittance_diff_norm(L, L0, w) / (rho * rho * rho);
      } catch (const Error&) {
        return -1.0;
      }
    };
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double v = value(lo + (hi - lo) * i / (n - 1));
      if (v > best_v) best_v = v, best = i;
    }
    // golden-section refinement inside the neighbouring grid cells
    double a = lo + (hi - lo) * std::max(best - 1, 0) / (n - 1);
    double b = lo + (hi - lo) * std::min(best + 1, n - 1) / (n - 1);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = value(x1), f2 = value(x2);
    while (b - a > 1e-6) {
      if (f1 > f2) {
        b = x2, x2 = x1, f2 = f1;
        x1 = b - g * (b - a), f1 = value(x1);
      } else {
        a = x1, x1 = x2, f1 = f2;
        x2 = a + g * (b - a), f2 = value(x2);
      }
    }
    const double refined = f1 > f2 ? x1 : x2;
    return std::max(f1, f2) >= best_v ? std::exp(refined) : std::exp(lo + (hi - lo) * best / (n - 1));
  });
}

CloakBusting run_cloak_busting(const SweepConfig& c) {
  CloakBusting out;
  const std::vector<CoreParams> base = core_grid(c);
  out.grid = base;
  for (double e : scan_resonant_eps(c)) out.grid.push_back({e, 1.0, 0.0});

  out.with_layer = run_sweep_rho(c, out.grid);
  for (std::size_t i = 0; i < base.size(); ++i) {
    out.baseline_c_hat = std::max(out.baseline_c_hat, out.with_layer.cores[i].c_hat);
  }
  SweepConfig c0 = c;
  c0.layer.gamma0 = 0.0;
  out.without_layer = run_sweep_rho(c0, out.grid);

  auto busted = [&](const RhoSweep& s) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < s.cores.size(); ++i) {
      const CoreSweep& cs = s.cores[i];
      if (cs.fit && (cs.fit->slope < 2.5 || cs.c_hat >= 100.0 * out.baseline_c_hat)) idx.push_back(i);
    }
    return idx;
  };
  out.busted_with = busted(out.with_layer);
  out.busted_without = busted(out.without_layer);
  return out;
}

// --------------------------------------------------------------------------

VshExpansion default_psi() {
  VshExpansion psi = VshExpansion::zero(2);
  psi.a[vsh_index(1, 0)] = 1.0;
  psi.b[vsh_index(2, 1)] = 0.5;
  return psi;
}

std::function<CVec3(const Vec3&)> default_phi(double inner_radius) {
  const CVec3 v(1.0, cplx(0.0, 0.5), 0.2);
  // int |v - n (n . v)|^2 ds = (2/3) |v|^2 4 pi R^2
  const double norm = std::sqrt(2.0 / 3.0 * v.squaredNorm() * 4.0 * pi * inner_radius * inner_radius);
  return [v, norm](const Vec3& xp) {
    const Vec3 n = xp.normalized();
    return CVec3((v - n.cast<cplx>() * dotu(n, v)) / norm);
  };
}

PropsSweep run_props(const SweepConfig& c, bool check_decomposition) {
  c.validate();
  if (c.tau.size() < 2) throw Error(ErrorKind::validation, "props: need at least two tau values");
  const SpacePtr outer = make_space(make_sphere_mesh(c.outer_radius, c.refinement));
  const SpacePtr inner = make_space(make_sphere_mesh(c.inner_radius, c.refinement));
  const DecompositionSolver solver(outer, inner, c.omega, c.n_max_trace);
  const WeightedNorm w(c.n_max_trace);
  const VshExpansion psi = default_psi();
  const auto phi = default_phi(c.inner_radius);

  struct Job {
    std::string driver;
    double tau;
  };
  std::vector<Job> jobs;
  for (const char* d : {"psi", "phi"}) {
    for (double t : c.tau) jobs.push_back({d, t});
  }
  PropsSweep out;
  out.rows = parallel_map(jobs.size(), c.threads, [&](std::size_t i) {
    const Job& j = jobs[i];
    const bool by_psi = j.driver == "psi";
    const std::function<CVec3(const Vec3&)> data = by_psi ? std::function<CVec3(const Vec3&)>(zero_field) : phi;
    const VshExpansion ext = by_psi ? psi : VshExpansion::zero(psi.n_max);
    const DecompositionResult r = solver.solve(j.tau, data, ext, check_decomposition);
    const VshExpansion o = solver.oracle(j.tau, data, ext);
    PropsRow row;
    row.driver = j.driver;
    row.tau = j.tau;
    row.norm = thdiv_norm(r.trace, w);
    row.norm_l2 = l2_coefficient_norm(r.trace);
    row.oracle_norm = thdiv_norm(o, w);
    row.relative_error = (r.trace.flat() - o.flat()).norm() / o.flat().norm();
    row.data_norm = by_psi ? thdiv_norm(psi, WeightedNorm(psi.n_max)) : r.phi_scaled_norm;
    row.condition = std::max(r.exterior_condition, r.annulus_condition);
    row.residual = std::max(r.exterior_residual, r.annulus_residual);
    row.decomposition = r.decomposition_residual;
    return row;
  });
  auto fit = [&](const std::string& d, bool oracle) {
    std::vector<double> x, y;
    for (const PropsRow& r : out.rows) {
      if (r.driver != d) continue;
      x.push_back(r.tau);
      y.push_back(oracle ? r.oracle_norm : r.norm);
    }
    return fit_loglog(x, y);
  };
  out.psi_fit = fit("psi", false);
  out.phi_fit = fit("phi", false);
  out.psi_oracle_fit = fit("psi", true);
  out.phi_oracle_fit = fit("phi", true);
  return out;
}

void write_props_csv(std::ostream& os, const PropsSweep& s) {
  csv_precision(os) << csv_version << " props\n";
  os << "driver,tau,norm,norm_l2,oracle_norm,relative_error,data_norm,condition,residual,decomposition\n";
  for (const PropsRow& r : s.rows) {
    os << r.driver << ',' << r.tau << ',' << r.norm << ',' << r.norm_l2 << ',' << r.oracle_norm << ','
       << r.relative_error << ',' << r.data_norm << ',' << r.condition << ',' << r.residual << ',' << r.decomposition
       << '\n';
  }
  auto line = [&](const char* name, const SlopeFit& f) {
    os << "# fit," << name << ",slope," << f.slope << ",r_squared," << f.r_squared << ",flagged," << (f.flagged ? 1 : 0)
       << ",residuals,";
    for (std::size_t k = 0; k < f.residuals.size(); ++k) os << (k ? ";" : "") << f.residuals[k];
    os << '\n';
  };
  line("psi", s.psi_fit);
  line("phi", s.phi_fit);
  line("psi_oracle", s.psi_oracle_fit);
  line("phi_oracle", s.phi_oracle_fit);
}

// --------------------------------------------------------------------------

PecComparison run_pec_mie(double radius, double omega, int refinement) {
  const Vec3 k(0, 0, 1), p(1, 0, 0);
  const auto inc = [&](const Vec3& x) { return CVec3(p.cast<cplx>() * std::exp(imag_unit * omega * k.dot(x))); };
  const SpacePtr s = make_space(make_sphere_mesh(radius, refinement));
  const ScatterSolution sol =
      solve_exterior(s, omega, s->sample([&](const Vec3& x, const Vec3& n) { return CVec3(-cross(n, inc(x))); }));
  // the scattered tangential field is -nu ^ E_inc; radiate its expansion
  const int n_mie = std::max(16, static_cast<int>(std::ceil(2.0 * omega * radius)) + 12);
  const SurfaceQuadrature g = make_sphere_grid_for_degree(radius, n_mie);
  TangentialTrace tr;
  for (std::size_t i = 0; i < g.size(); ++i) tr.values.push_back(-cross(g.normals[i], inc(g.nodes[i])));
  const RadiatingSphereField mie(radius, omega, vsh_analyze(g, tr, n_mie));

  PecComparison out;
  out.condition = sol.condition;
  out.residual = sol.residual;
  out.trace_residual = sol.trace_residual;
  const SurfaceQuadrature dirs = make_sphere_grid(1.0, 8, 16);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const CVec3 a = exterior_far_field(sol, dirs.nodes[i]), b = mie.far_field(dirs.nodes[i]);
    out.directions.push_back(dirs.nodes[i]);
    out.bie.push_back(a);
    out.mie.push_back(b);
    num += dirs.weights[i] * (a - b).squaredNorm();
    den += dirs.weights[i] * b.squaredNorm();
  }
  out.error = std::sqrt(num / den);
  return out;
}

double sigma_min_static(double radius, int refinement, unsigned long long seed) {
  const SpacePtr s = make_space(make_sphere_mesh(radius, refinement));
  Eigen::MatrixXcd A = std::move(assemble_magnetic_dipole(s, 0.0).matrix);
  A.diagonal().array() += 1.0;
  const Eigen::VectorXd w = s->dof_weights().cwiseSqrt();
  A = w.asDiagonal() * A * w.cwiseInverse().asDiagonal();
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  A.resize(0, 0);

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXcd x(lu.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = cplx(nd(gen), nd(gen));
  x.normalize();
  // largest eigenvalue of (A^H A)^{-1}
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXcd y = lu.solve(lu.adjoint().solve(x));
    const double next = y.norm();
    x = y / next;
    if (it > 5 && std::abs(next - lambda) < 1e-12 * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return 1.0 / std::sqrt(lambda);
}

SplitRemainder run_split_remainder(double radius, double omega, int refinement, const std::vector<double>& tau) {
  const SpacePtr s = make_space(make_sphere_mesh(radius, refinement));
  const Eigen::VectorXcd a = s->sample([](const Vec3& x, const Vec3& n) {
    const CVec3 v(1.0, cplx(0.0, 0.5), 0.2);
    return CVec3(v - n.cast<cplx>() * dotu(n, v) + 0.3 * cross(n, CVec3(x.cast<cplx>())));
  });
  SplitRemainder out;
  out.tau = tau;
  for (double t : tau) {
    double worst = 0.0;
    for (std::size_t i = 0; i < s->vertex_count(); ++i) {
      for (std::size_t j = i + 1; j < s->vertex_count(); ++j) {
        const KernelSplit k = kernel_split(s->vertex(i), s->vertex(j), t, omega);
        worst = std::max(worst, std::abs(k.remainder) / (t * t * (s->vertex(i) - s->vertex(j)).norm()));
      }
    }
    out.kernel_ratio.push_back(worst);
    const Eigen::MatrixXcd R = assemble_split_remainder(s, t, omega).matrix;
    out.operator_ratio.push_back(s->l2_norm(R * a) / s->l2_norm(a));
  }
  out.fit = fit_loglog(tau, out.operator_ratio);
  return out;
}

namespace {

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

PullbackResidual run_pullback_residual(const SweepConfig& c, double rho, const std::vector<double>& steps) {
  VshExpansion psi = VshExpansion::zero(2);
  psi.a[vsh_index(1, 0)] = 1.0;
  psi.b[vsh_index(2, 1)] = cplx(0.5, 0.5);
  const LayeredSolution sol = solve_layered_sphere(LayeredSphereSpec::vacuum_ball(c.outer_radius, c.omega), psi);
  const BlowupMap F = radial_blowup_map(rho, c.inner_radius, c.outer_radius);
  const RadialMap Finv = F.map.inverse();
  const MaterialField mf = build_physical_medium(F, c.layer, CoreMedium::isotropic(1, 1, 0));
  const auto E = [&](const Vec3& x) { return pull_back_field([&](const Vec3& y) { return sol.E(y); }, Finv, x); };
  const auto H = [&](const Vec3& x) { return pull_back_field([&](const Vec3& y) { return sol.H(y); }, Finv, x); };
  // a point in the cloak shell, away from the interfaces
  const Vec3 x = (c.inner_radius + 0.4 * (c.outer_radius - c.inner_radius)) * Vec3(0.36, -0.48, 0.8);
  const Mat3 mu = mf.at(x).mu.matrix(), eps = mf.at(x).eps.matrix();
  PullbackResidual out;
  out.steps = steps;
  for (double h : steps) {
    const CVec3 rE = fd_curl_forward(E, x, h) - imag_unit * c.omega * (mu.cast<cplx>() * H(x));
    const CVec3 rH = fd_curl_forward(H, x, h) + imag_unit * c.omega * (eps.cast<cplx>() * E(x));
    out.residuals.push_back(rE.norm() + rH.norm());
  }
  out.fit = fit_loglog(steps, out.residuals);
  return out;
}

std::vector<EnergyCheck> run_energy_checks(const SweepConfig& c, const std::vector<double>& rho) {
  VshExpansion single = VshExpansion::zero(2);
  single.a[vsh_index(1, 0)] = 1.0;
  const VshExpansion random = random_vsh(4, c.seed);
  struct Job {
    double rho;
    CoreParams core;
    bool random;
  };
  std::vector<Job> jobs;
  for (double r : rho) {
    for (const CoreParams& k : core_grid(c)) {
      jobs.push_back({r, k, false});
      jobs.push_back({r, k, true});
    }
  }
  return parallel_map(jobs.size(), c.threads, [&](std::size_t i) {
    const Job& j = jobs[i];
    const MaterialField mf = virtual_medium(c, j.rho, j.core);
    const LayeredSolution sol = solve_layered_sphere(layered_spec_from_medium(mf, c.omega), j.random ? random : single);
    return EnergyCheck{j.rho, j.random ? "random" : "single-mode", j.core, energy_identity(sol, mf)};
  });
}

std::vector<TraceControl> run_trace_control(const SweepConfig& c, const std::vector<double>& rho) {
  const VshExpansion psi = default_psi();
  const int N = psi.n_max;
  const CoreParams core = core_grid(c).front();
  const LayeredSolution free_sol = solve_layered_sphere(LayeredSphereSpec::vacuum_ball(c.outer_radius, c.omega), psi);
  const WeightedNorm w(N);
  const SurfaceQuadrature g = make_sphere_grid_for_degree(c.inner_radius, N + 2);
  std::vector<TraceControl> out;
  for (double r : rho) {
    const MaterialField mf = virtual_medium(c, r, core);
    const LayeredSolution sol = solve_layered_sphere(layered_spec_from_medium(mf, c.omega), psi);
    TangentialTrace tr;
    for (std::size_t k = 0; k < g.size(); ++k) tr.values.push_back(cross(g.normals[k], sol.E(r * g.nodes[k])));
    const VshExpansion e = vsh_analyze(g, tr, N + 2);
    double s = 0.0;
    for (int n = 1; n <= e.n_max; ++n) {
      for (int m = -n; m <= n; ++m) {
        const int i = vsh_index(n, m);
        s += WeightedNorm::weight_b(n) * (std::norm(e.a[i]) + std::norm(e.b[i]));
      }
    }
    const VshExpansion dH = VshExpansion::from_flat(N, sol.magnetic_trace().flat() - free_sol.magnetic_trace().flat());
    TraceControl t;
    t.rho = r;
    t.trace_norm_sq = s;
    t.factor = std::norm(1.0 + c.omega * c.omega * r * r * (1.0 + imag_unit / (r * r * c.omega)));
    t.bound = t.factor / r * thdiv_norm(psi, w) * thdiv_norm(dH, w);
    t.ratio = t.bound > 0.0 ? t.trace_norm_sq / t.bound : 0.0;
    out.push_back(t);
  }
  return out;
}

// --------------------------------------------------------------------------

bool CheckReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const CheckEntry& e) { return e.pass; });
}

const CheckEntry* CheckReport::find(const std::string& name) const {
  for (const CheckEntry& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void CheckReport::write_json(std::ostream& os) const {
  nlohmann::ordered_json j;
  j["schema"] = "nearcloak-check v1";
  j["all_pass"] = all_pass();
  j["checks"] = nlohmann::ordered_json::array();
  for (const CheckEntry& e : entries) {
    nlohmann::ordered_json x;
    x["name"] = e.name;
    x["value"] = std::isfinite(e.value) ? nlohmann::ordered_json(e.value) : nlohmann::ordered_json(nullptr);
    x["threshold"] = e.threshold;
    x["relation"] = e.relation;
    x["pass"] = e.pass;
    x["detail"] = e.detail;
    j["checks"].push_back(x);
  }
  os << j.dump(2) << '\n';
}

namespace {

CheckEntry below(const std::string& name, double value, double threshold, const std::string& detail = "") {
  return {name, value, threshold, "<", std::isfinite(value) && value < threshold, detail};
}
CheckEntry above(const std::string& name, double value, double threshold, const std::string& detail = "") {
  return {name, value, threshold, ">", std::isfinite(value) && value > threshold, detail};
}

template <class F>
CheckEntry guarded(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {name, std::numeric_limits<double>::quiet_NaN(), 0.0, "error", false, e.what()};
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

CheckEntry check_eigenvalue(const SweepConfig& c) {
  const EigenvalueReport rep = is_em_eigenvalue(c.omega, c.outer_radius, 1e-6);
  std::ostringstream d;
  d << "min modal determinant at n=" << rep.min_n << " " << to_string(rep.min_pol) << "; nearest eigenvalue omega = "
    << std::setprecision(12) << rep.nearest_omega << " (n=" << rep.nearest_n << " " << to_string(rep.nearest_pol)
    << ")";
  return above("eigenvalue", rep.min_determinant, 1e-6, d.str());
}

CheckEntry check_pairing(const SweepConfig& c, const CheckOptions& o) {
  const int N = 5;
  SurfaceQuadrature q = make_sphere_grid_for_degree(c.outer_radius, N + 1);
  if (o.corrupt_quadrature_weight) q.weights[q.size() / 3] *= 1.1;
  const auto synth = [&](const VshExpansion& e) { return vsh_synthesize_trace(e, q); };
  const VshExpansion j = random_vsh(N, c.seed + 11), m = random_vsh(N, c.seed + 12);
  const TangentialTrace tj = synth(j), tm = synth(m);
  const cplx jm = duality_pairing(tj, tm, q), mj = duality_pairing(tm, tj, q);
  double worst = std::abs(jm + mj) / std::abs(jm);
  // B(Lambda j, m) + B(j, Lambda m) = 0 for the free and a layered admittance
  const AdmittanceMatrix L0 = free_admittance(c, N);
  const AdmittanceMatrix Lr = virtual_admittance(c, c.rho.front(), core_grid(c).front(), N);
  for (const AdmittanceMatrix* L : {&L0, &Lr}) {
    const cplx a = duality_pairing(synth(L->apply(j)), tm, q), b = duality_pairing(tj, synth(L->apply(m)), q);
    worst = std::max(worst, std::abs(a + b) / std::abs(a));
  }
  // B(grad Y_1^0, nu ^ grad Y_1^0) = R^2 int |grad_S Y_1^0|^2 = 2 on any radius
  TangentialTrace g, rg;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const CVec3 v = vsh_gradient_basis(1, 0, q.nodes[k]).cast<cplx>() * c.outer_radius;
    g.values.push_back(v);
    rg.values.push_back(cross(q.normals[k], v));
  }
  const double norm_err = std::abs(duality_pairing(g, rg, q) - 2.0 * c.outer_radius * c.outer_radius) /
                          (2.0 * c.outer_radius * c.outer_radius);
  worst = std::max(worst, norm_err);
  return below("pairing_skewness", worst, 1e-8,
               "max of |B(j,m)+B(m,j)|, reciprocity |B(Lj,m)+B(j,Lm)| and normalization error");
}

CheckEntry check_norm_axioms(const SweepConfig& c) {
  const WeightedNorm w(6);
  double worst = 0.0;
  bool positive = true;
  for (unsigned long long s = 0; s < 8; ++s) {
    const VshExpansion x = random_vsh(6, c.seed + 100 + s), y = random_vsh(6, c.seed + 200 + s);
    const cplx l(-1.7 + 0.3 * s, 0.9);
    VshExpansion lx = x;
    lx.a *= l;
    lx.b *= l;
    const double nx = thdiv_norm(x, w), ny = thdiv_norm(y, w);
    worst = std::max(worst, std::abs(thdiv_norm(lx, w) - std::abs(l) * nx) / (std::abs(l) * nx));
    const double ns = thdiv_norm(VshExpansion::from_flat(6, x.flat() + y.flat()), w);
    worst = std::max(worst, std::max(0.0, ns - nx - ny) / (nx + ny));
    positive = positive && nx > 0.0;
  }
  if (thdiv_norm(VshExpansion::zero(6), w) != 0.0 || !positive) worst = 1.0;
  return below("norm_axioms", worst, 1e-12, "homogeneity, triangle inequality, definiteness");
}

CheckEntry check_mesh_convergence(const CheckOptions& o) {
  // flat panels expose the O(h^2) geometric error
  std::vector<double> err;
  for (int r = 1; r <= 4; ++r) {
    const SurfaceMesh m = make_sphere_mesh(1.0, r);
    const SurfaceMesh flat = make_polyhedral_mesh(m.vertices, m.triangles);
    err.push_back(std::abs(flat.quad.total_weight() - 4.0 * pi));
  }
  double rate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < err.size(); ++i) rate = std::min(rate, std::log2(err[i - 1] / err[i]));
  std::string detail = "min observed area rate over refinements 1-4";
  if (o.include_bie) {
    // magnetic dipole on a degree 1 harmonic against its exact eigenvalue
    std::vector<double> e;
    for (int r = 1; r <= 2; ++r) {
      const SpacePtr s = make_space(make_sphere_mesh(1.0, r));
      const Eigen::VectorXcd a =
          s->sample([](const Vec3& x, const Vec3&) { return CVec3(vsh_gradient_basis(1, 0, x).cast<cplx>()); });
      const cplx lambda = sphere_magnetic_dipole_eigenvalue(1, true, 1.0, 1.0);
      e.push_back(s->l2_norm(assemble_magnetic_dipole(s, 1.0).matrix * a - lambda * a) / s->l2_norm(a));
    }
    const double bie_rate = std::log2(e[0] / e[1]);
    detail += "; boundary operator rate " + fmt(bie_rate);
    rate = std::min(rate, bie_rate);
  }
  return above("mesh_convergence", rate, 1.5, detail);
}

CheckEntry check_kernel_split(const SweepConfig& c, const CheckOptions& o) {
  const std::vector<double> tau{0.1, 0.05, 0.025};
  if (!o.include_bie) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    const SurfaceMesh m = make_sphere_mesh(1.0, 1);
    for (double t : tau) {
      double worst = 0.0;
      for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        for (std::size_t j = i + 1; j < m.vertices.size(); ++j) {
          const double r = (m.vertices[i] - m.vertices[j]).norm();
          worst = std::max(worst, std::abs(kernel_split(m.vertices[i], m.vertices[j], t, c.omega).remainder) / (t * t * r));
        }
      }
      lo = std::min(lo, worst), hi = std::max(hi, worst);
    }
    return below("kernel_split", hi / lo, 2.0, "spread of max |R|/|x'-y'| over tau");
  }
  const SplitRemainder s = run_split_remainder(1.0, c.omega, 1, tau);
  const double lo = *std::min_element(s.kernel_ratio.begin(), s.kernel_ratio.end());
  const double hi = *std::max_element(s.kernel_ratio.begin(), s.kernel_ratio.end());
  CheckEntry e = below("kernel_split", hi / lo, 2.0,
                       "spread of max |R|/|x'-y'| over tau; operator slope " + fmt(s.fit.slope));
  e.pass = e.pass && s.fit.slope > 1.8 && s.fit.slope < 2.2;
  return e;
}

CheckEntry check_trace_consistency(const SweepConfig& c, const CheckOptions& o) {
  const VshExpansion psi = random_vsh(4, c.seed + 3);
  const MaterialField mf = virtual_medium(c, c.rho.front(), core_grid(c).back());
  const LayeredSolution sol = solve_layered_sphere(layered_spec_from_medium(mf, c.omega), psi);
  const SurfaceQuadrature g = make_sphere_grid_for_degree(c.outer_radius, 6);
  TangentialTrace e, h;
  for (std::size_t k = 0; k < g.size(); ++k) {
    e.values.push_back(cross(g.normals[k], sol.E(g.nodes[k])));
    h.values.push_back(cross(g.normals[k], sol.H(g.nodes[k])));
  }
  const VshExpansion te = vsh_analyze(g, e, 4), th = vsh_analyze(g, h, 4);
  const AdmittanceMatrix L = admittance_sphere(sol.spec(), 4);
  double worst = (te.flat() - psi.flat()).norm() / psi.flat().norm();
  worst = std::max(worst, (th.flat() - sol.magnetic_trace().flat()).norm() / th.flat().norm());
  worst = std::max(worst, (L.apply(psi).flat() - th.flat()).norm() / th.flat().norm());
  std::string detail = "spectral field traces vs boundary data and admittance";
  if (o.include_bie) {
    const RadiatingSphereField src(c.inner_radius, c.omega, psi);
    const SpacePtr s = make_space(make_sphere_mesh(c.inner_radius, 1));
    const ScatterSolution x =
        solve_exterior(s, c.omega, s->sample([&](const Vec3& p, const Vec3& n) { return cross(n, src.E(p)); }));
    worst = std::max(worst, x.trace_residual);
    detail += "; boundary-integral trace residual " + fmt(x.trace_residual);
  }
  return below("trace_consistency", worst, 1e-8, detail);
}

CheckEntry check_radiation_decay(const SweepConfig& c, const CheckOptions& o) {
  const RadiatingSphereField f(c.inner_radius, c.omega, random_vsh(3, c.seed + 5));
  std::function<CVec3(const Vec3&)> E = [&](const Vec3& x) { return f.E(x); };
  std::function<CVec3(const Vec3&)> H = [&](const Vec3& x) { return f.H(x); };
  const Vec3 d = Vec3(0.3, 0.8, -0.5).normalized();
  auto rate = [&](const std::function<CVec3(const Vec3&)>& Ef, const std::function<CVec3(const Vec3&)>& Hf) {
    std::vector<double> sm;
    for (double r : {40.0, 80.0, 160.0}) {
      const Vec3 x = r * d;
      sm.push_back(r * (cross(CVec3(Hf(x)), d) - Ef(x)).norm());
    }
    return std::min(sm[0] / sm[1], sm[1] / sm[2]);
  };
  double worst = rate(E, H);
  std::string detail = "min ratio of r |H ^ x/r - E| under doubling r";
  if (o.include_bie) {
    const SpacePtr s = make_space(make_sphere_mesh(c.inner_radius, 1));
    const ScatterSolution sol =
        solve_exterior(s, c.omega, s->sample([&](const Vec3& p, const Vec3& n) { return cross(n, f.E(p)); }));
    const double b = rate(sol.E, sol.H);
    detail += "; boundary-integral field " + fmt(b);
    worst = std::min(worst, b);
  }
  return above("radiation_decay", worst, 1.8, detail);
}

CheckEntry check_determinism(const SweepConfig& c) {
  SweepConfig small = c;
  small.n_max = std::min(c.n_max, 6);
  std::ostringstream a, b;
  write_sweep_csv(a, run_sweep_rho(small));
  small.threads = c.threads == 1 ? 2 : 1;
  write_sweep_csv(b, run_sweep_rho(small));
  const bool same = a.str() == b.str();
  CheckEntry e{"determinism", same ? 0.0 : 1.0, 0.0, "==", same, "sweep CSV bytes, two runs, different thread counts"};
  return e;
}

CheckEntry check_energy(const SweepConfig& c) {
  double worst = 0.0;
  int under = 0;
  for (const EnergyCheck& e : run_energy_checks(c, {0.2, 0.1})) {
    worst = std::max(worst, e.identity.residual);
    under += e.identity.under_resolved ? 1 : 0;
  }
  CheckEntry e = below("energy_identity", worst, 1e-6, "max relative residual over cores, rho 0.2 and 0.1");
  if (under) {
    e.pass = false;
    e.detail += "; under-resolved volume terms: " + std::to_string(under);
  }
  return e;
}

CheckEntry check_bie_mie(const SweepConfig& c) {
  const PecComparison p = run_pec_mie(c.inner_radius, c.omega, c.refinement);
  return below("bie_mie", p.error, 1e-3,
               "PEC far-field relative L2 error at refinement " + std::to_string(c.refinement) + ", condition " +
                   fmt(p.condition));
}

CheckEntry check_pullback(const SweepConfig& c) {
  const PullbackResidual p = run_pullback_residual(c, 0.3, {1e-2, 5e-3, 2.5e-3});
  CheckEntry e{"pullback_residual", p.fit.slope, 1.0, "within 0.1 of", p.fit.slope > 0.9 && p.fit.slope < 1.1,
               "forward-difference residual slope in the step"};
  return e;
}

CheckEntry check_vacuum_and_structure(const SweepConfig& c) {
  const int N = std::min(c.n_max, 8);
  SweepConfig c0 = c;
  c0.layer = LayerParameters{1.0, 1.0, 0.0};
  const AdmittanceMatrix L0 = free_admittance(c, N);
  const AdmittanceMatrix Lv = virtual_admittance(c0, c.rho.back(), {1.0, 1.0, 0.0}, N);
  double worst = admittance_diff_norm_l2(Lv, L0) / L0.matrix.cwiseAbs().maxCoeff();
  // isotropic spheres couple only (a, b) of the same (n, m)
  const int K = vsh_mode_count(N);
  const AdmittanceMatrix Lr = virtual_admittance(c, c.rho.front(), core_grid(c).back(), N);
  for (const AdmittanceMatrix* M : {&L0, &Lv, &Lr}) {
    double off = 0.0;
    for (int i = 0; i < 2 * K; ++i) {
      for (int j = 0; j < 2 * K; ++j) {
        if (i % K != j % K) off = std::max(off, std::abs(M->matrix(i, j)));
      }
    }
    worst = std::max(worst, off / M->matrix.cwiseAbs().maxCoeff());
  }
  return below("vacuum_and_block_structure", worst, 1e-12,
               "vacuum core without layer reproduces Lambda_0; off-mode admittance entries vanish");
}

CheckEntry check_truncation(const SweepConfig& c) {
  double worst = 0.0;
  const double rho = c.rho[c.rho.size() / 2];
  const AdmittanceMatrix A8 = free_admittance(c, 8), A12 = free_admittance(c, 12);
  for (const CoreParams& k : core_grid(c)) {
    const double d8 = admittance_diff_norm(virtual_admittance(c, rho, k, 8), A8, WeightedNorm(8));
    const double d12 = admittance_diff_norm(virtual_admittance(c, rho, k, 12), A12, WeightedNorm(12));
    worst = std::max(worst, std::abs(d12 - d8) / d12);
  }
  return below("truncation_stability", worst, 1e-2, "relative change of the difference norm from N=8 to N=12");
}

CheckEntry check_trace_control(const SweepConfig& c) {
  std::ostringstream d;
  d << "ratio |nu^E(rho .)|^2 / bound:";
  double worst = 0.0;
  for (const TraceControl& t : run_trace_control(c, c.rho)) {
    d << " rho=" << t.rho << " " << fmt(t.ratio);
    worst = std::max(worst, t.ratio);
  }
  return {"trace_control", worst, 0.0, "info", true, d.str()};
}

}  // namespace

CheckReport run_check(const SweepConfig& c, const CheckOptions& o) {
  CheckReport r;
  auto add = [&](const std::string& name, auto&& f) { r.entries.push_back(guarded(name, f)); };
  add("eigenvalue", [&] { return check_eigenvalue(c); });
  add("pairing_skewness", [&] { return check_pairing(c, o); });
  add("norm_axioms", [&] { return check_norm_axioms(c); });
  add("mesh_convergence", [&] { return check_mesh_convergence(o); });
  add("kernel_split", [&] { return check_kernel_split(c, o); });
  add("trace_consistency", [&] { return check_trace_consistency(c, o); });
  add("radiation_decay", [&] { return check_radiation_decay(c, o); });
  add("determinism", [&] { return check_determinism(c); });
  add("energy_identity", [&] { return check_energy(c); });
  if (o.include_bie) add("bie_mie", [&] { return check_bie_mie(c); });
  add("pullback_residual", [&] { return check_pullback(c); });
  add("vacuum_and_block_structure", [&] { return check_vacuum_and_structure(c); });
  add("truncation_stability", [&] { return check_truncation(c); });
  add("trace_control", [&] { return check_trace_control(c); });
  return r;
}

}  // namespace nearcloak
