#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nearcloak/mie.hpp"
#include "nearcloak/types.hpp"

namespace nearcloak {

/// Real symmetric 3x3 tensor.
class SymTensor3 {
 public:
  SymTensor3() : m_(Mat3::Zero()) {}
  explicit SymTensor3(const Mat3& m) : m_(0.5 * (m + m.transpose())) {}
  SymTensor3(double xx, double yy, double zz, double xy, double xz, double yz);
  static SymTensor3 isotropic(double s) { return SymTensor3(Mat3::Identity() * s); }

  const Mat3& matrix() const { return m_; }
  Eigen::Vector3d eigenvalues() const;  ///< ascending
  bool is_isotropic(double tol = 1e-12) const;

 private:
  Mat3 m_;
};

using TensorFunction = std::function<SymTensor3(const Vec3&)>;

TensorFunction constant_tensor(const SymTensor3& t);

/// Orientation-preserving radial map x -> f(|x|) x/|x| with f continuous,
/// piecewise affine, f(0) = 0, and the identity beyond the last knot.
class RadialMap {
 public:
  /// knots r_0 = 0 < r_1 < ... < r_K and images f(r_i), strictly increasing.
  RadialMap(std::vector<double> knots, std::vector<double> images);
  static RadialMap dilation(double factor, double extent);

  Vec3 apply(const Vec3& x) const;
  double apply_radius(double r) const;
  RadialMap inverse() const;
  /// this o inner
  RadialMap compose(const RadialMap& inner) const;
  /// Throws ErrorKind::interface within tol of a slope discontinuity.
  Mat3 jacobian(const Vec3& x) const;
  double interface_tolerance() const { return tolerance_; }
  void set_interface_tolerance(double tol) { tolerance_ = tol; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& images() const { return images_; }

 private:
  std::size_t piece(double r) const;
  double slope(std::size_t piece) const;

  std::vector<double> knots_, images_;
  double tolerance_ = 0.0;
};

/// F: identity on |x| = R_Omega, D_rho -> D by x/rho, affine in r in between.
struct BlowupMap {
  double rho = 0.5;
  double inner_radius = 1.0;   ///< R_D
  double outer_radius = 2.0;   ///< R_Omega
  RadialMap map{{0.0, 1.0}, {0.0, 1.0}};

  Vec3 apply(const Vec3& x) const { return map.apply(x); }
  Vec3 inverse(const Vec3& x) const { return map.inverse().apply(x); }
};

BlowupMap radial_blowup_map(double rho, double inner_radius, double outer_radius);

Mat3 jacobian(const BlowupMap& map, const Vec3& x);

/// DF m DF^T / |det DF| at y = F^{-1}(x).
SymTensor3 push_forward(const TensorFunction& m, const RadialMap& map, const Vec3& x);
SymTensor3 push_forward(const TensorFunction& m, const BlowupMap& map, const Vec3& x);

/// DF(y)^T E(F(y)).
CVec3 pull_back_field(const std::function<CVec3(const Vec3&)>& E, const RadialMap& map, const Vec3& y);
CVec3 pull_back_field(const std::function<CVec3(const Vec3&)>& E, const BlowupMap& map, const Vec3& y);

struct MaterialSample {
  SymTensor3 eps, mu, sigma;
};

/// Radially delimited region r_inner < |x| < r_outer.
struct MaterialRegion {
  std::string name;
  double r_inner = 0.0;
  double r_outer = 1.0;
  TensorFunction eps, mu, sigma;
};

class MaterialField {
 public:
  MaterialField(std::vector<MaterialRegion> regions, double interface_tolerance);

  const std::vector<MaterialRegion>& regions() const { return regions_; }
  double outer_radius() const { return regions_.back().r_outer; }
  double interface_tolerance() const { return tolerance_; }
  /// Throws ErrorKind::interface near a region boundary, ErrorKind::domain outside.
  const MaterialRegion& region_at(const Vec3& x) const;
  MaterialSample at(const Vec3& x) const;
  bool near_interface(const Vec3& x) const;

 private:
  std::vector<MaterialRegion> regions_;
  double tolerance_;
};

struct CoreMedium {
  TensorFunction eps, mu, sigma;
  static CoreMedium isotropic(double eps, double mu, double sigma);
  static CoreMedium constant(const SymTensor3& eps, const SymTensor3& mu, const SymTensor3& sigma);
};

struct LayerParameters {
  double alpha0 = 1.0;
  double beta0 = 1.0;
  double gamma0 = 1.0;
};

/// Cloak shell F_*(1,1,0), layer F_*(alpha0, beta0, gamma0 rho^-2), core F_*(core).
MaterialField build_physical_medium(const BlowupMap& map, const LayerParameters& layer, const CoreMedium& core);

/// Vacuum outside D_rho, layer in D_rho \ D_{rho/2}, core in D_{rho/2}. The layer
/// permeability is beta0 unless scaled_layer_mu selects beta0 rho^2.
MaterialField build_virtual_medium(double rho, double inner_radius, double outer_radius, const LayerParameters& layer,
                                   const CoreMedium& core, bool scaled_layer_mu);

struct TensorBounds {
  double c_min = 0.0;
  double C_max = 0.0;
};

struct RegularityReport {
  TensorBounds eps, mu, sigma;
  bool eps_ok = true;   ///< c_min > 0
  bool mu_ok = true;
  bool sigma_ok = true; ///< c_min >= 0
  std::size_t samples_used = 0;
  std::size_t samples_skipped = 0;  ///< on interfaces
  bool ok() const { return eps_ok && mu_ok && sigma_ok; }
};

RegularityReport check_regularity(const MaterialField& mf, const std::vector<Vec3>& samples);

/// Deterministic sample grid in the ball of given radius (radial x angular).
std::vector<Vec3> radial_sample_grid(double radius, int n_radial, int n_angular, double r_min = 0.0);

/// Concentric isotropic-constant MaterialField as a layered sphere spec.
LayeredSphereSpec layered_spec_from_medium(const MaterialField& mf, double omega);

}  // namespace nearcloak
