#include "nearcloak/mie.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "nearcloak/special_functions.hpp"

namespace nearcloak {

const char* to_string(Polarization p) { return p == Polarization::te ? "TE" : "TM"; }

void LayeredSphereSpec::validate() const {
  if (layers.empty()) throw Error(ErrorKind::validation, "layered sphere: no layers");
  if (!(omega > 0.0)) throw Error(ErrorKind::validation, "layered sphere: omega must be positive");
  double prev = pec_radius;
  if (pec_radius < 0.0) throw Error(ErrorKind::validation, "layered sphere: negative PEC radius");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    if (!(l.outer_radius > prev)) {
      throw Error(ErrorKind::validation, "layered sphere: radii must increase (layer " + std::to_string(i) + ")");
    }
    if (!(l.eps > 0.0) || !(l.mu > 0.0) || !(l.sigma >= 0.0) || !std::isfinite(l.sigma)) {
      throw Error(ErrorKind::validation, "layered sphere: invalid material in layer " + std::to_string(i));
    }
    prev = l.outer_radius;
  }
}

double LayeredSphereSpec::inner_radius(std::size_t layer) const {
  return layer == 0 ? pec_radius : layers[layer - 1].outer_radius;
}

cplx LayeredSphereSpec::wavenumber(std::size_t layer) const {
  const Layer& l = layers[layer];
  cplx k = omega * std::sqrt(cplx(l.mu * l.eps, l.mu * l.sigma / omega));
  if (k.imag() < 0.0) k = -k;
  return k;
}

std::size_t LayeredSphereSpec::layer_of(double r) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (r <= layers[i].outer_radius) return i;
  }
  throw Error(ErrorKind::domain, "radius outside the layered sphere");
}

LayeredSphereSpec LayeredSphereSpec::vacuum_ball(double radius, double omega) {
  LayeredSphereSpec s;
  s.layers.push_back(Layer{radius, 1.0, 1.0, 0.0});
  s.omega = omega;
  return s;
}

namespace {

// Combined radial function z = j + t h, Riccati w = x z and w' at x.
struct Radial {
  cplx z, w, dw;
};

Radial radial(const BesselTable& tab, int n, cplx t) {
  const cplx x = tab.z();
  const cplx z = tab.j(n) + t * tab.h(n);
  return {z, x * z, tab.dpsi(n) + t * tab.dxi(n)};
}

// t for which w'/w = q at the table argument.
cplx match_log_derivative(const BesselTable& tab, int n, cplx q) {
  const cplx num = q * tab.psi(n) - tab.dpsi(n);
  const cplx den = tab.dxi(n) - q * tab.xi(n);
  return num / den;
}

void check_finite(cplx v, int n, Polarization pol, const char* where) {
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
    std::ostringstream msg;
    msg << "resonance in mode n=" << n << " " << to_string(pol) << " (" << where << ")";
    throw Error(ErrorKind::resonance, msg.str());
  }
}

// Propagation state for one degree: per-layer t for both polarizations.
struct Propagation {
  std::vector<cplx> t_te, t_tm;
  ModalAdmittance outer;
};

// Bessel tables at (layer, inner radius) and (layer, outer radius).
struct LayerTables {
  std::vector<BesselTable> inner, outer;
};

LayerTables make_tables(const LayeredSphereSpec& spec, int n_max) {
  LayerTables tabs;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const cplx k = spec.wavenumber(l);
    const double ri = spec.inner_radius(l);
    tabs.inner.emplace_back(n_max, k * (ri > 0.0 ? ri : spec.layers[l].outer_radius));
    tabs.outer.emplace_back(n_max, k * spec.layers[l].outer_radius);
  }
  return tabs;
}

Propagation propagate(const LayeredSphereSpec& spec, const LayerTables& tabs, int n) {
  const std::size_t L = spec.layers.size();
  const double w = spec.omega;
  Propagation p;
  p.t_te.resize(L);
  p.t_tm.resize(L);
  cplx y_te = 0.0, y_tm = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const cplx k = spec.wavenumber(l);
    const double mu = spec.layers[l].mu;
    const cplx g = imag_unit * k / (w * mu);
    if (l == 0) {
      if (spec.pec_radius > 0.0) {
        p.t_te[0] = -tabs.inner[0].psi(n) / tabs.inner[0].xi(n);
        p.t_tm[0] = -tabs.inner[0].dpsi(n) / tabs.inner[0].dxi(n);
      } else {
        p.t_te[0] = 0.0;
        p.t_tm[0] = 0.0;
      }
    } else {
      p.t_te[l] = match_log_derivative(tabs.inner[l], n, y_te / g);
      p.t_tm[l] = match_log_derivative(tabs.inner[l], n, g / y_tm);
    }
    const Radial te = radial(tabs.outer[l], n, p.t_te[l]);
    const Radial tm = radial(tabs.outer[l], n, p.t_tm[l]);
    y_te = g * te.dw / te.w;
    y_tm = g * tm.w / tm.dw;
    check_finite(y_te, n, Polarization::te, "layer admittance");
    check_finite(y_tm, n, Polarization::tm, "layer admittance");
  }
  p.outer = {y_te, y_tm};
  return p;
}

void add_mode(int n, double r, cplx k, cplx h_factor, double Y, const Vec3& grad, const Vec3& rhat, const Radial& rad,
              cplx te_amp, cplx tm_amp, CVec3& E, CVec3& H) {
  const cplx kr = k * r;
  const Vec3 X = grad.cross(rhat);
  const CVec3 M = rad.z * X.cast<cplx>();
  const CVec3 N = (n * (n + 1.0) * rad.z / kr * Y) * rhat.cast<cplx>() + (rad.dw / kr) * grad.cast<cplx>();
  E += te_amp * M + tm_amp * N;
  H += h_factor * (te_amp * N + tm_amp * M);
}

}  // namespace

std::vector<ModalAdmittance> modal_admittances(const LayeredSphereSpec& spec, int n_max) {
  spec.validate();
  const LayerTables tabs = make_tables(spec, n_max);
  std::vector<ModalAdmittance> out(n_max);
  for (int n = 1; n <= n_max; ++n) out[n - 1] = propagate(spec, tabs, n).outer;
  return out;
}

VshExpansion AdmittanceMatrix::apply(const VshExpansion& e) const {
  if (e.n_max != n_max) throw Error(ErrorKind::validation, "AdmittanceMatrix::apply: degree mismatch");
  return VshExpansion::from_flat(n_max, matrix * e.flat());
}

AdmittanceMatrix admittance_sphere(const LayeredSphereSpec& spec, int n_max) {
  const auto y = modal_admittances(spec, n_max);
  const int K = vsh_mode_count(n_max);
  AdmittanceMatrix A;
  A.n_max = n_max;
  A.matrix = Eigen::MatrixXcd::Zero(2 * K, 2 * K);
  for (int n = 1; n <= n_max; ++n) {
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      A.matrix(i, K + i) = y[n - 1].tm;
      A.matrix(K + i, i) = y[n - 1].te;
    }
  }
  return A;
}

LayeredSolution::LayeredSolution(LayeredSphereSpec spec, VshExpansion boundary_data)
    : spec_(std::move(spec)), data_(std::move(boundary_data)) {
  spec_.validate();
  const int N = data_.n_max;
  const std::size_t L = spec_.layers.size();
  const LayerTables tabs = make_tables(spec_, N);
  const double R = spec_.outer_radius();
  admittance_.resize(N);
  te_.assign(N, std::vector<std::array<cplx, 2>>(L));
  tm_.assign(N, std::vector<std::array<cplx, 2>>(L));
  for (int n = 1; n <= N; ++n) {
    const Propagation p = propagate(spec_, tabs, n);
    admittance_[n - 1] = p.outer;
    // Outermost layer from the boundary data, then continuity inwards.
    const cplx kL = spec_.wavenumber(L - 1);
    const Radial te_out = radial(tabs.outer[L - 1], n, p.t_te[L - 1]);
    const Radial tm_out = radial(tabs.outer[L - 1], n, p.t_tm[L - 1]);
    const double te_scale = std::abs(tabs.outer[L - 1].j(n)) + std::abs(p.t_te[L - 1] * tabs.outer[L - 1].h(n));
    const double tm_scale = std::abs(tabs.outer[L - 1].dpsi(n)) + std::abs(p.t_tm[L - 1] * tabs.outer[L - 1].dxi(n));
    if (!(std::abs(te_out.z) > 1e-12 * te_scale)) {
      throw Error(ErrorKind::resonance, "resonance in mode n=" + std::to_string(n) + " TE (boundary amplitude vanishes)");
    }
    if (!(std::abs(tm_out.dw) > 1e-12 * tm_scale)) {
      throw Error(ErrorKind::resonance, "resonance in mode n=" + std::to_string(n) + " TM (boundary amplitude vanishes)");
    }
    cplx c = 1.0 / (R * te_out.z);
    cplx d = -kL / tm_out.dw;
    for (std::size_t l = L; l-- > 0;) {
      if (l + 1 < L) {
        const cplx k_in = spec_.wavenumber(l), k_out = spec_.wavenumber(l + 1);
        const Radial te_o = radial(tabs.inner[l + 1], n, p.t_te[l + 1]);
        const Radial te_i = radial(tabs.outer[l], n, p.t_te[l]);
        const Radial tm_o = radial(tabs.inner[l + 1], n, p.t_tm[l + 1]);
        const Radial tm_i = radial(tabs.outer[l], n, p.t_tm[l]);
        c = c * te_o.z / te_i.z;
        d = d * (tm_o.dw / k_out) / (tm_i.dw / k_in);
        check_finite(c, n, Polarization::te, "interface continuity");
        check_finite(d, n, Polarization::tm, "interface continuity");
      }
      te_[n - 1][l] = {c, c * p.t_te[l]};
      tm_[n - 1][l] = {d, d * p.t_tm[l]};
    }
  }
}

cplx LayeredSolution::coefficient(int n, int m, Polarization pol, std::size_t layer, bool outgoing) const {
  const int i = vsh_index(n, m);
  const auto& unit = pol == Polarization::te ? te_[n - 1][layer] : tm_[n - 1][layer];
  const cplx amp = pol == Polarization::te ? data_.a[i] : data_.b[i];
  return amp * unit[outgoing ? 1 : 0];
}

void LayeredSolution::fields(const Vec3& x, CVec3& E, CVec3& H) const {
  E.setZero();
  H.setZero();
  double r = x.norm();
  const double R = spec_.outer_radius();
  if (r > R * (1.0 + 1e-12)) throw Error(ErrorKind::domain, "LayeredSolution: point outside the sphere");
  if (r < spec_.pec_radius) return;
  Vec3 rhat = r > 0.0 ? Vec3(x / r) : Vec3(0, 0, 1);
  r = std::max(r, 1e-12 * R);
  const std::size_t l = spec_.layer_of(r);
  const cplx k = spec_.wavenumber(l);
  const cplx hf = k / (imag_unit * spec_.omega * spec_.layers[l].mu);
  const int N = data_.n_max;
  const BesselTable tab(N, k * r);
  const HarmonicSample hs = real_harmonics(N, rhat);
  for (int n = 1; n <= N; ++n) {
    const Radial te = radial(tab, n, te_[n - 1][l][1] / te_[n - 1][l][0]);
    const Radial tm = radial(tab, n, tm_[n - 1][l][1] / tm_[n - 1][l][0]);
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      const int s = sh_index(n, m);
      const cplx a = data_.a[i] * te_[n - 1][l][0];
      const cplx b = data_.b[i] * tm_[n - 1][l][0];
      if (a == cplx(0.0) && b == cplx(0.0)) continue;
      // te and tm radial parts differ, so add them separately.
      add_mode(n, r, k, hf, hs.value[s], hs.grad[s], rhat, te, a, 0.0, E, H);
      add_mode(n, r, k, hf, hs.value[s], hs.grad[s], rhat, tm, 0.0, b, E, H);
    }
  }
}

CVec3 LayeredSolution::E(const Vec3& x) const {
  CVec3 e, h;
  fields(x, e, h);
  return e;
}

CVec3 LayeredSolution::H(const Vec3& x) const {
  CVec3 e, h;
  fields(x, e, h);
  return h;
}

VshExpansion LayeredSolution::magnetic_trace() const {
  VshExpansion out = VshExpansion::zero(data_.n_max);
  for (int n = 1; n <= data_.n_max; ++n) {
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      out.a[i] = admittance_[n - 1].tm * data_.b[i];
      out.b[i] = admittance_[n - 1].te * data_.a[i];
    }
  }
  return out;
}

void LayeredSolution::write_csv(std::ostream& os) const {
  os << "n,m,pol,layer,coeff_re,coeff_im\n";
  os.precision(17);
  const char* labels[2][2] = {{"TE_j", "TE_h"}, {"TM_j", "TM_h"}};
  for (int n = 1; n <= data_.n_max; ++n) {
    for (int m = -n; m <= n; ++m) {
      for (int p = 0; p < 2; ++p) {
        const Polarization pol = p == 0 ? Polarization::te : Polarization::tm;
        for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
          for (int o = 0; o < 2; ++o) {
            const cplx c = coefficient(n, m, pol, l, o == 1);
            os << n << ',' << m << ',' << labels[p][o] << ',' << l << ',' << c.real() << ',' << c.imag() << '\n';
          }
        }
      }
    }
  }
}

LayeredSolution solve_layered_sphere(const LayeredSphereSpec& spec, const VshExpansion& boundary_data) {
  return LayeredSolution(spec, boundary_data);
}

RadiatingSphereField::RadiatingSphereField(double radius, double omega, VshExpansion trace)
    : radius_(radius), omega_(omega), trace_(std::move(trace)) {
  if (!(radius > 0.0) || !(omega > 0.0)) throw Error(ErrorKind::validation, "RadiatingSphereField: bad arguments");
  const int N = trace_.n_max;
  const BesselTable tab(N, omega * radius);
  c_.resize(vsh_mode_count(N));
  d_.resize(vsh_mode_count(N));
  for (int n = 1; n <= N; ++n) {
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      c_[i] = trace_.a[i] / (radius * tab.h(n));
      d_[i] = -trace_.b[i] * omega / tab.dxi(n);
    }
  }
}

void RadiatingSphereField::fields(const Vec3& x, CVec3& E, CVec3& H) const {
  E.setZero();
  H.setZero();
  const double r = x.norm();
  if (r < radius_ * (1.0 - 1e-12)) throw Error(ErrorKind::domain, "RadiatingSphereField: point inside the sphere");
  const Vec3 rhat = x / r;
  const int N = trace_.n_max;
  const BesselTable tab(N, omega_ * r);
  const HarmonicSample hs = real_harmonics(N, rhat);
  const cplx hf = omega_ / (imag_unit * omega_);
  for (int n = 1; n <= N; ++n) {
    const Radial rad{tab.h(n), tab.xi(n), tab.dxi(n)};
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      const int s = sh_index(n, m);
      add_mode(n, r, omega_, hf, hs.value[s], hs.grad[s], rhat, rad, c_[i], d_[i], E, H);
    }
  }
}

CVec3 RadiatingSphereField::E(const Vec3& x) const {
  CVec3 e, h;
  fields(x, e, h);
  return e;
}

CVec3 RadiatingSphereField::H(const Vec3& x) const {
  CVec3 e, h;
  fields(x, e, h);
  return h;
}

CVec3 RadiatingSphereField::far_field(const Vec3& direction) const {
  const Vec3 u = direction.normalized();
  const int N = trace_.n_max;
  const HarmonicSample hs = real_harmonics(N, u);
  CVec3 out = CVec3::Zero();
  cplx phase = -imag_unit;  // (-i)^n
  for (int n = 1; n <= N; ++n) {
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      const Vec3& g = hs.grad[sh_index(n, m)];
      out += c_[i] * phase * (-imag_unit) * g.cross(u).cast<cplx>() + d_[i] * phase * g.cast<cplx>();
    }
    phase *= -imag_unit;
  }
  return out / omega_;
}

VshExpansion RadiatingSphereField::magnetic_trace() const {
  const int N = trace_.n_max;
  const BesselTable tab(N, omega_ * radius_);
  VshExpansion out = VshExpansion::zero(N);
  for (int n = 1; n <= N; ++n) {
    const cplx y_te = imag_unit * tab.dxi(n) / tab.xi(n);
    const cplx y_tm = imag_unit * tab.xi(n) / tab.dxi(n);
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      out.a[i] = y_tm * trace_.b[i];
      out.b[i] = y_te * trace_.a[i];
    }
  }
  return out;
}

VacuumAnnulusField::VacuumAnnulusField(double r_in, double r_out, double omega, const VshExpansion& inner_trace,
                                       const VshExpansion& outer_trace)
    : r_in_(r_in), r_out_(r_out), omega_(omega), n_max_(std::max(inner_trace.n_max, outer_trace.n_max)) {
  if (!(r_in > 0.0) || !(r_out > r_in) || !(omega > 0.0)) {
    throw Error(ErrorKind::validation, "VacuumAnnulusField: bad arguments");
  }
  const VshExpansion fin = inner_trace.resized(n_max_);
  const VshExpansion fout = outer_trace.resized(n_max_);
  const BesselTable ti(n_max_, omega * r_in), to(n_max_, omega * r_out);
  const int K = vsh_mode_count(n_max_);
  te_.resize(K);
  tm_.resize(K);
  for (int n = 1; n <= n_max_; ++n) {
    Eigen::Matrix2cd Ate, Atm;
    Ate << r_in * ti.j(n), r_in * ti.h(n), r_out * to.j(n), r_out * to.h(n);
    Atm << -ti.dpsi(n) / omega, -ti.dxi(n) / omega, -to.dpsi(n) / omega, -to.dxi(n) / omega;
    const auto lu_te = Ate.fullPivLu();
    const auto lu_tm = Atm.fullPivLu();
    auto rel_det = [](const Eigen::Matrix2cd& A) {
      return std::abs(A.determinant()) / (A.col(0).norm() * A.col(1).norm());
    };
    if (rel_det(Ate) < 1e-13) throw Error(ErrorKind::resonance, "annulus resonance in mode n=" + std::to_string(n) + " TE");
    if (rel_det(Atm) < 1e-13) throw Error(ErrorKind::resonance, "annulus resonance in mode n=" + std::to_string(n) + " TM");
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      const Eigen::Vector2cd c = lu_te.solve(Eigen::Vector2cd(fin.a[i], fout.a[i]));
      const Eigen::Vector2cd d = lu_tm.solve(Eigen::Vector2cd(fin.b[i], fout.b[i]));
      te_[i] = {c[0], c[1]};
      tm_[i] = {d[0], d[1]};
    }
  }
}

VshExpansion VacuumAnnulusField::magnetic_trace_at(double r) const {
  const BesselTable t(n_max_, omega_ * r);
  VshExpansion out = VshExpansion::zero(n_max_);
  const cplx iw = imag_unit * omega_;
  for (int n = 1; n <= n_max_; ++n) {
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      out.b[i] = -(te_[i][0] * t.dpsi(n) + te_[i][1] * t.dxi(n)) / iw;
      out.a[i] = (tm_[i][0] * t.psi(n) + tm_[i][1] * t.xi(n)) / iw;
    }
  }
  return out;
}

VshExpansion VacuumAnnulusField::magnetic_trace_outer() const { return magnetic_trace_at(r_out_); }
VshExpansion VacuumAnnulusField::magnetic_trace_inner() const { return magnetic_trace_at(r_in_); }

void VacuumAnnulusField::fields(const Vec3& x, CVec3& E, CVec3& H) const {
  E.setZero();
  H.setZero();
  const double r = x.norm();
  if (r < r_in_ * (1.0 - 1e-12) || r > r_out_ * (1.0 + 1e-12)) {
    throw Error(ErrorKind::domain, "VacuumAnnulusField: point outside the annulus");
  }
  const Vec3 rhat = x / r;
  const BesselTable tab(n_max_, omega_ * r);
  const HarmonicSample hs = real_harmonics(n_max_, rhat);
  const cplx hf = 1.0 / imag_unit;
  for (int n = 1; n <= n_max_; ++n) {
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      const int s = sh_index(n, m);
      for (int part = 0; part < 2; ++part) {
        const Radial rad = part == 0 ? Radial{tab.j(n), tab.psi(n), tab.dpsi(n)} : Radial{tab.h(n), tab.xi(n), tab.dxi(n)};
        add_mode(n, r, omega_, hf, hs.value[s], hs.grad[s], rhat, rad, te_[i][part], tm_[i][part], E, H);
      }
    }
  }
}

CVec3 VacuumAnnulusField::E(const Vec3& x) const {
  CVec3 e, h;
  fields(x, e, h);
  return e;
}

CVec3 VacuumAnnulusField::H(const Vec3& x) const {
  CVec3 e, h;
  fields(x, e, h);
  return h;
}

namespace {

// |f| / sqrt(f^2 + f'^2): close to the distance in x to the nearest zero of f.
double te_det(const BesselTable& t, int n) {
  const double f = t.j(n).real(), df = t.dj(n).real();
  return std::abs(f) / std::hypot(f, df);
}

double tm_det(const BesselTable& t, int n) {
  const double x = t.z().real();
  const double f = t.dpsi(n).real();
  const double df = -(1.0 - n * (n + 1.0) / (x * x)) * t.psi(n).real();
  return std::abs(f) / std::hypot(f, df);
}

}  // namespace

EigenvalueReport is_em_eigenvalue(double omega, double radius, double tol, int n_max) {
  if (!(omega > 0.0) || !(radius > 0.0)) throw Error(ErrorKind::validation, "is_em_eigenvalue: bad arguments");
  EigenvalueReport rep;
  const double x0 = omega * radius;
  const BesselTable tab(n_max, x0);
  rep.determinants.resize(n_max);
  rep.min_determinant = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= n_max; ++n) {
    const double dte = te_det(tab, n), dtm = tm_det(tab, n);
    rep.determinants[n - 1] = {dte, dtm};
    if (dte < rep.min_determinant) rep.min_determinant = dte, rep.min_n = n, rep.min_pol = Polarization::te;
    if (dtm < rep.min_determinant) rep.min_determinant = dtm, rep.min_n = n, rep.min_pol = Polarization::tm;
  }
  rep.is_eigenvalue = rep.min_determinant < tol;

  // Nearest zero: bracket sign changes on a grid around x0, then bisect.
  auto f = [&](int n, Polarization p, double x) {
    const BesselTable t(n, x);
    return p == Polarization::te ? t.j(n).real() : t.dpsi(n).real();
  };
  const double step = 0.01;
  const double x_hi = x0 + 4.0 * pi;
  rep.distance = std::numeric_limits<double>::infinity();
  const int samples = static_cast<int>(x_hi / step) + 1;
  std::vector<double> xs(samples);
  for (int s = 0; s < samples; ++s) xs[s] = (s + 1) * step;
  for (int pol_idx = 0; pol_idx < 2; ++pol_idx) {
    const Polarization p = pol_idx == 0 ? Polarization::te : Polarization::tm;
    for (int n = 1; n <= n_max; ++n) {
      double prev = f(n, p, xs[0]);
      for (int s = 1; s < samples; ++s) {
        const double cur = f(n, p, xs[s]);
        if ((prev < 0.0) != (cur < 0.0)) {
          double a = xs[s - 1], b = xs[s], fa = prev;
          for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (a + b);
            const double fm = f(n, p, mid);
            if ((fm < 0.0) == (fa < 0.0)) a = mid, fa = fm;
            else b = mid;
          }
          const double w_star = 0.5 * (a + b) / radius;
          if (std::abs(w_star - omega) < rep.distance) {
            rep.distance = std::abs(w_star - omega);
            rep.nearest_omega = w_star;
            rep.nearest_n = n;
            rep.nearest_pol = p;
          }
        }
        prev = cur;
      }
    }
  }
  return rep;
}

}  // namespace nearcloak
