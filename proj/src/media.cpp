#include "nearcloak/media.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nearcloak {

SymTensor3::SymTensor3(double xx, double yy, double zz, double xy, double xz, double yz) {
  m_ << xx, xy, xz, xy, yy, yz, xz, yz, zz;
}

Eigen::Vector3d SymTensor3::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Mat3> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

bool SymTensor3::is_isotropic(double tol) const {
  const double s = m_.trace() / 3.0;
  return (m_ - s * Mat3::Identity()).norm() <= tol * std::max(1.0, std::abs(s));
}

TensorFunction constant_tensor(const SymTensor3& t) {
  return [t](const Vec3&) { return t; };
}

RadialMap::RadialMap(std::vector<double> knots, std::vector<double> images)
    : knots_(std::move(knots)), images_(std::move(images)) {
  if (knots_.size() < 2 || knots_.size() != images_.size()) {
    throw Error(ErrorKind::validation, "RadialMap: need matching knot and image lists of length >= 2");
  }
  if (knots_[0] != 0.0 || images_[0] != 0.0) throw Error(ErrorKind::validation, "RadialMap: must fix the origin");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1]) || !(images_[i] > images_[i - 1])) {
      throw Error(ErrorKind::validation, "RadialMap: knots and images must be strictly increasing");
    }
  }
  tolerance_ = 1e-9 * knots_.back();
}

RadialMap RadialMap::dilation(double factor, double extent) {
  if (!(factor > 0.0) || !(extent > 0.0)) throw Error(ErrorKind::domain, "dilation: factor must be positive");
  return RadialMap({0.0, extent}, {0.0, factor * extent});
}

std::size_t RadialMap::piece(double r) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), r);
  const std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - knots_.begin() - 1));
  return std::min(i, knots_.size() - 2);
}

double RadialMap::slope(std::size_t i) const {
  return (images_[i + 1] - images_[i]) / (knots_[i + 1] - knots_[i]);
}

double RadialMap::apply_radius(double r) const {
  const std::size_t i = piece(r);
  return images_[i] + slope(i) * (r - knots_[i]);
}

Vec3 RadialMap::apply(const Vec3& x) const {
  const double r = x.norm();
  if (r == 0.0) return x;
  return x * (apply_radius(r) / r);
}

RadialMap RadialMap::inverse() const {
  RadialMap inv(images_, knots_);
  inv.tolerance_ = 1e-9 * images_.back();
  return inv;
}

RadialMap RadialMap::compose(const RadialMap& inner) const {
  const RadialMap inner_inv = inner.inverse();
  std::vector<double> k = inner.knots_;
  for (double s : knots_) k.push_back(inner_inv.apply_radius(s));
  std::sort(k.begin(), k.end());
  std::vector<double> ks;
  for (double r : k) {
    if (ks.empty() || r > ks.back() * (1.0 + 1e-14) + 1e-300) ks.push_back(r);
  }
  std::vector<double> im(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) im[i] = apply_radius(inner.apply_radius(ks[i]));
  im[0] = 0.0;
  RadialMap out(ks, im);
  out.tolerance_ = std::max(tolerance_, inner.tolerance_);
  return out;
}

Mat3 RadialMap::jacobian(const Vec3& x) const {
  const double r = x.norm();
  for (std::size_t i = 1; i + 1 < knots_.size(); ++i) {
    if (std::abs(r - knots_[i]) < tolerance_ &&
        std::abs(slope(i) - slope(i - 1)) > 1e-12 * std::max(std::abs(slope(i)), std::abs(slope(i - 1)))) {
      std::ostringstream msg;
      msg << "jacobian: |x| = " << r << " is on the interface r = " << knots_[i];
      throw Error(ErrorKind::interface, msg.str());
    }
  }
  const std::size_t p = piece(r);
  if (r == 0.0) return slope(p) * Mat3::Identity();
  const Vec3 u = x / r;
  const Mat3 P = u * u.transpose();
  return (apply_radius(r) / r) * (Mat3::Identity() - P) + slope(p) * P;
}

BlowupMap radial_blowup_map(double rho, double inner_radius, double outer_radius) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorKind::domain, "radial_blowup_map: rho must lie in (0, 1)");
  if (!(inner_radius > 0.0) || !(outer_radius > inner_radius)) {
    throw Error(ErrorKind::domain, "radial_blowup_map: need 0 < R_D < R_Omega");
  }
  BlowupMap F;
  F.rho = rho;
  F.inner_radius = inner_radius;
  F.outer_radius = outer_radius;
  F.map = RadialMap({0.0, rho * inner_radius, outer_radius}, {0.0, inner_radius, outer_radius});
  F.map.set_interface_tolerance(1e-9 * outer_radius);
  return F;
}

Mat3 jacobian(const BlowupMap& map, const Vec3& x) { return map.map.jacobian(x); }

SymTensor3 push_forward(const TensorFunction& m, const RadialMap& map, const Vec3& x) {
  const Vec3 y = map.inverse().apply(x);
  const Mat3 J = map.jacobian(y);
  const double det = J.determinant();
  if (!(std::abs(det) > 0.0)) throw Error(ErrorKind::numeric, "push_forward: singular Jacobian");
  return SymTensor3(J * m(y).matrix() * J.transpose() / std::abs(det));
}

SymTensor3 push_forward(const TensorFunction& m, const BlowupMap& map, const Vec3& x) {
  if (x.norm() > map.outer_radius * (1.0 + 1e-12)) {
    throw Error(ErrorKind::domain, "push_forward: point outside the image region");
  }
  return push_forward(m, map.map, x);
}

CVec3 pull_back_field(const std::function<CVec3(const Vec3&)>& E, const RadialMap& map, const Vec3& y) {
  const Mat3 J = map.jacobian(y);
  return J.transpose().cast<cplx>() * E(map.apply(y));
}

CVec3 pull_back_field(const std::function<CVec3(const Vec3&)>& E, const BlowupMap& map, const Vec3& y) {
  return pull_back_field(E, map.map, y);
}

MaterialField::MaterialField(std::vector<MaterialRegion> regions, double interface_tolerance)
    : regions_(std::move(regions)), tolerance_(interface_tolerance) {
  if (regions_.empty()) throw Error(ErrorKind::validation, "MaterialField: no regions");
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    if (!(regions_[i].r_outer > regions_[i].r_inner)) throw Error(ErrorKind::validation, "MaterialField: empty region");
    if (i > 0 && regions_[i].r_inner != regions_[i - 1].r_outer) {
      throw Error(ErrorKind::validation, "MaterialField: regions must tile the ball");
    }
  }
  if (regions_[0].r_inner != 0.0) throw Error(ErrorKind::validation, "MaterialField: first region must contain 0");
}

bool MaterialField::near_interface(const Vec3& x) const {
  const double r = x.norm();
  for (std::size_t i = 0; i + 1 < regions_.size(); ++i) {
    if (std::abs(r - regions_[i].r_outer) < tolerance_) return true;
  }
  return false;
}

const MaterialRegion& MaterialField::region_at(const Vec3& x) const {
  const double r = x.norm();
  if (r > outer_radius() + tolerance_) throw Error(ErrorKind::domain, "MaterialField: point outside Omega");
  if (near_interface(x)) {
    std::ostringstream msg;
    msg << "MaterialField: |x| = " << r << " lies on a region interface";
    throw Error(ErrorKind::interface, msg.str());
  }
  for (const auto& reg : regions_) {
    if (r < reg.r_outer) return reg;
  }
  return regions_.back();
}

MaterialSample MaterialField::at(const Vec3& x) const {
  const MaterialRegion& reg = region_at(x);
  return {reg.eps(x), reg.mu(x), reg.sigma(x)};
}

CoreMedium CoreMedium::isotropic(double eps, double mu, double sigma) {
  return constant(SymTensor3::isotropic(eps), SymTensor3::isotropic(mu), SymTensor3::isotropic(sigma));
}

CoreMedium CoreMedium::constant(const SymTensor3& eps, const SymTensor3& mu, const SymTensor3& sigma) {
  return {constant_tensor(eps), constant_tensor(mu), constant_tensor(sigma)};
}

std::vector<Vec3> radial_sample_grid(double radius, int n_radial, int n_angular, double r_min) {
  std::vector<Vec3> pts;
  const double golden = pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n_radial; ++i) {
    const double r = r_min + (i + 0.5) * (radius - r_min) / n_radial;
    for (int j = 0; j < n_angular; ++j) {
      const double z = 1.0 - (2.0 * j + 1.0) / n_angular;
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * j;
      pts.emplace_back(r * s * std::cos(phi), r * s * std::sin(phi), r * z);
    }
  }
  return pts;
}

namespace {

void validate_core(const CoreMedium& core, double radius) {
  if (!core.eps || !core.mu || !core.sigma) throw Error(ErrorKind::validation, "core medium: missing tensor");
  for (const Vec3& y : radial_sample_grid(radius, 4, 26)) {
    const double e = core.eps(y).eigenvalues()[0];
    const double m = core.mu(y).eigenvalues()[0];
    const double s = core.sigma(y).eigenvalues()[0];
    if (!(e > 0.0) || !(m > 0.0) || !(s >= -1e-14)) {
      std::ostringstream msg;
      msg << "core medium violates the ellipticity bounds at (" << y.x() << ", " << y.y() << ", " << y.z()
          << "): min eig eps " << e << ", mu " << m << ", sigma " << s;
      throw Error(ErrorKind::validation, msg.str());
    }
  }
}

TensorFunction pushed(TensorFunction m, const RadialMap& map) {
  return [m = std::move(m), map](const Vec3& x) { return push_forward(m, map, x); };
}

}  // namespace

MaterialField build_physical_medium(const BlowupMap& F, const LayerParameters& p, const CoreMedium& core) {
  const double rho = F.rho, RD = F.inner_radius, RO = F.outer_radius;
  validate_core(core, 0.5 * rho * RD);
  if (!(p.alpha0 > 0.0) || !(p.beta0 > 0.0) || !(p.gamma0 >= 0.0)) {
    throw Error(ErrorKind::validation, "layer parameters must satisfy alpha0, beta0 > 0, gamma0 >= 0");
  }
  const TensorFunction zero = constant_tensor(SymTensor3());
  const TensorFunction one = constant_tensor(SymTensor3::isotropic(1.0));
  std::vector<MaterialRegion> regions;
  regions.push_back({"core", 0.0, 0.5 * RD, pushed(core.eps, F.map), pushed(core.mu, F.map), pushed(core.sigma, F.map)});
  regions.push_back({"layer", 0.5 * RD, RD, pushed(constant_tensor(SymTensor3::isotropic(p.alpha0)), F.map),
                     pushed(constant_tensor(SymTensor3::isotropic(p.beta0)), F.map),
                     pushed(constant_tensor(SymTensor3::isotropic(p.gamma0 / (rho * rho))), F.map)});
  regions.push_back({"cloak", RD, RO, pushed(one, F.map), pushed(one, F.map), zero});
  return MaterialField(std::move(regions), 1e-9 * RO);
}

MaterialField build_virtual_medium(double rho, double RD, double RO, const LayerParameters& p, const CoreMedium& core,
                                   bool scaled_layer_mu) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorKind::domain, "build_virtual_medium: rho must lie in (0, 1)");
  if (!(RD > 0.0) || !(RO > RD)) throw Error(ErrorKind::domain, "build_virtual_medium: need 0 < R_D < R_Omega");
  validate_core(core, 0.5 * rho * RD);
  if (!(p.alpha0 > 0.0) || !(p.beta0 > 0.0) || !(p.gamma0 >= 0.0)) {
    throw Error(ErrorKind::validation, "layer parameters must satisfy alpha0, beta0 > 0, gamma0 >= 0");
  }
  const double mu_layer = scaled_layer_mu ? p.beta0 * rho * rho : p.beta0;
  std::vector<MaterialRegion> regions;
  regions.push_back({"core", 0.0, 0.5 * rho * RD, core.eps, core.mu, core.sigma});
  regions.push_back({"layer", 0.5 * rho * RD, rho * RD, constant_tensor(SymTensor3::isotropic(p.alpha0)),
                     constant_tensor(SymTensor3::isotropic(mu_layer)),
                     constant_tensor(SymTensor3::isotropic(p.gamma0 / (rho * rho)))});
  regions.push_back({"vacuum", rho * RD, RO, constant_tensor(SymTensor3::isotropic(1.0)),
                     constant_tensor(SymTensor3::isotropic(1.0)), constant_tensor(SymTensor3())});
  return MaterialField(std::move(regions), 1e-9 * RO);
}

RegularityReport check_regularity(const MaterialField& mf, const std::vector<Vec3>& samples) {
  RegularityReport rep;
  const double inf = std::numeric_limits<double>::infinity();
  rep.eps = rep.mu = rep.sigma = {inf, -inf};
  auto update = [](TensorBounds& b, const SymTensor3& t) {
    const Eigen::Vector3d ev = t.eigenvalues();
    b.c_min = std::min(b.c_min, ev[0]);
    b.C_max = std::max(b.C_max, ev[2]);
  };
  for (const Vec3& x : samples) {
    if (mf.near_interface(x) || x.norm() > mf.outer_radius()) {
      ++rep.samples_skipped;
      continue;
    }
    const MaterialSample s = mf.at(x);
    update(rep.eps, s.eps);
    update(rep.mu, s.mu);
    update(rep.sigma, s.sigma);
    ++rep.samples_used;
  }
  rep.eps_ok = rep.samples_used == 0 || rep.eps.c_min > 0.0;
  rep.mu_ok = rep.samples_used == 0 || rep.mu.c_min > 0.0;
  rep.sigma_ok = rep.samples_used == 0 || rep.sigma.c_min >= -1e-14;
  return rep;
}

LayeredSphereSpec layered_spec_from_medium(const MaterialField& mf, double omega) {
  LayeredSphereSpec spec;
  spec.omega = omega;
  const Vec3 dirs[2] = {Vec3(0.3, 0.5, 0.8).normalized(), Vec3(-0.7, 0.1, -0.2).normalized()};
  for (const auto& reg : mf.regions()) {
    const double fr[2] = {0.35, 0.8};
    double vals[3] = {0, 0, 0};
    for (int k = 0; k < 2; ++k) {
      const Vec3 x = dirs[k] * (reg.r_inner + fr[k] * (reg.r_outer - reg.r_inner));
      const SymTensor3 t[3] = {reg.eps(x), reg.mu(x), reg.sigma(x)};
      for (int q = 0; q < 3; ++q) {
        const double s = t[q].matrix().trace() / 3.0;
        if (!t[q].is_isotropic(1e-10) || (k == 1 && std::abs(s - vals[q]) > 1e-10 * std::max(1.0, std::abs(s)))) {
          throw Error(ErrorKind::validation, "region '" + reg.name + "' is not isotropic and constant");
        }
        vals[q] = s;
      }
    }
    spec.layers.push_back(Layer{reg.r_outer, vals[0], vals[1], vals[2]});
  }
  spec.validate();
  return spec;
}

}  // namespace nearcloak
